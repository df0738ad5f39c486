"""Reachable-set propagation for affine dynamics x' = A x + B u + b.

Time-point sets are exact images of the previous set for inputs that are
constant over a step; time-varying deviations inside the per-step input set
are covered by a termwise Taylor enclosure, and time-interval sets add a
curvature enclosure bounding the sagitta between time points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.linalg import expm as _expm

from .sets import (
    IntervalVector,
    Zonotope,
    enclose_hull,
    interval_hull,
    linear_map,
    minkowski_sum,
)

REMAINDER_LIMIT = 1e-6


class StepSizeError(RuntimeError):
    """Taylor remainder did not converge below tolerance for this step size."""


@dataclass(frozen=True)
class AffineFlow:
    """x' = A x + B u + b."""

    A: np.ndarray
    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape[0] != n or b.shape[0] != n:
            raise ValueError("B/b dimension mismatch")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]

    def eval(self, x, u) -> np.ndarray:
        return self.A @ np.asarray(x, float) + self.B @ np.asarray(u, float) + self.b


@dataclass(frozen=True)
class StepResult:
    time_point_set: Zonotope
    time_interval_set: Zonotope
    step_size: float
    # unsigned radius covering sample switches still mid-crossing at the
    # step end; must be added to any externally used copy of the
    # time-point set, while the internal propagation state stays nominal
    # until the switch is fully crossed and booked as a signed term
    carry_radius: np.ndarray | None = None


def matrix_exponential(A, t: float, max_order: int = 400):
    """Truncated Taylor series of e^{At} with a rigorous remainder radius.

    Returns {"value": matrix, "remainderRadius": r} with
    ||e^{At} - value||_inf <= r.  The tail bound is geometric from the last
    computed term: ||T_{i+1}|| <= ||T_i|| * ||At|| / (i+1).
    """
    A = np.asarray(A, dtype=float)
    if t < 0:
        raise ValueError("t must be nonnegative")
    S = A * t
    norm = np.linalg.norm(S, np.inf)
    n = A.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    scale = max(1.0, np.abs(total).max())
    for i in range(1, max_order + 1):
        term = term @ S / i
        total = total + term
        tnorm = np.linalg.norm(term, np.inf)
        ratio = norm / (i + 2)
        if ratio < 1.0 and tnorm * ratio / (1.0 - ratio) < 1e-16 * scale:
            remainder = tnorm * ratio / (1.0 - ratio)
            return {"value": total, "remainderRadius": float(remainder)}
        scale = max(scale, np.abs(total).max())
    ratio = norm / (max_order + 2)
    if ratio >= 1.0:
        raise StepSizeError("matrix exponential series not converging; reduce t")
    remainder = np.linalg.norm(term, np.inf) * ratio / (1.0 - ratio)
    if remainder > REMAINDER_LIMIT:
        raise StepSizeError(f"matrix exponential remainder {remainder:.3e} too large")
    return {"value": total, "remainderRadius": float(remainder)}


def _interval_coeff(i: int, dt: float) -> float:
    """inf over s in [0, dt] of s^i - s * dt^(i-1) (the sup is 0), i >= 2."""
    e = 1.0 / (i - 1)
    return (i ** (-i * e) - i ** (-e)) * dt ** i


class Propagator:
    """Per-(A, dt) cache of the matrices needed for one propagation step.

    exp_dt       e^{A dt} (Taylor value), remainder radius rem_exp
    phi1         integral of e^{As} ds over [0, dt], remainder rem_phi
    dev_abs      sum_i |A^i| dt^(i+1)/(i+1)! + tail; maps the radius of a
                 time-varying disturbance box to the radius of its reachable
                 contribution over one step
    curv_lo/hi   interval matrix for the state curvature enclosure
    curv_in_lo/hi  interval matrix for the input curvature enclosure
    """

    def __init__(self, A, dt: float, max_order: int = 400):
        A = np.asarray(A, dtype=float)
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.A = A
        self.dt = float(dt)
        n = A.shape[0]
        S = A * dt
        norm = np.linalg.norm(S, np.inf)

        exp_total = np.eye(n)
        exp_abs = np.eye(n)
        dev = np.eye(n) * dt
        curv_lo = np.zeros((n, n))
        curv_hi = np.zeros((n, n))
        curv_in_lo = np.zeros((n, n))
        curv_in_hi = np.zeros((n, n))
        term = np.eye(n)  # (A dt)^i / i!
        tail = None
        last_i = 0
        for i in range(1, max_order + 1):
            term = term @ S / i
            exp_total = exp_total + term
            exp_abs = exp_abs + np.abs(term)
            dev = dev + np.abs(term) * (dt / (i + 1))
            if i >= 2:
                contrib = term * (_interval_coeff(i, dt) / dt ** i)
                curv_lo = curv_lo + np.minimum(contrib, 0.0)
                curv_hi = curv_hi + np.maximum(contrib, 0.0)
            # input curvature uses A^i / (i+1)! with coefficient index i+1
            contrib = (term / (i + 1)) * (_interval_coeff(i + 1, dt) / dt ** i)
            curv_in_lo = curv_in_lo + np.minimum(contrib, 0.0)
            curv_in_hi = curv_in_hi + np.maximum(contrib, 0.0)
            tnorm = np.linalg.norm(term, np.inf)
            ratio = norm / (i + 2)
            last_i = i
            if ratio < 1.0 and tnorm * ratio / (1.0 - ratio) < 1e-16:
                tail = tnorm * ratio / (1.0 - ratio)
                break
        if tail is None:
            ratio = norm / (last_i + 2)
            if ratio >= 1.0:
                raise StepSizeError("propagator series not converging; reduce dt")
            tail = np.linalg.norm(term, np.inf) * ratio / (1.0 - ratio)
            if tail > REMAINDER_LIMIT:
                raise StepSizeError(f"propagator remainder {tail:.3e} too large")

        self.exp_dt = exp_total
        # termwise bound on |e^{A s}| for s in [0, dt]; maps the radius of
        # an impulse applied anywhere in the step to an end-of-step radius
        self.exp_abs = exp_abs + tail * np.ones((n, n))
        self.rem_exp = float(tail)
        # phi1 = sum_i A^i dt^(i+1)/(i+1)!; recompute from terms cheaply
        phi = np.eye(n) * dt
        term = np.eye(n)
        for i in range(1, last_i + 1):
            term = term @ S / i
            phi = phi + term * (dt / (i + 1))
        self.phi1 = phi
        self.rem_phi = float(tail * dt)
        self.dev_abs = dev + tail * dt * np.ones((n, n))
        pad = tail * np.ones((n, n))
        self.curv_lo = curv_lo - pad
        self.curv_hi = curv_hi + pad
        self.curv_in_lo = curv_in_lo - pad * dt
        self.curv_in_hi = curv_in_hi + pad * dt

    def _interval_matrix_image(self, lo, hi, box: IntervalVector) -> Zonotope:
        """Box enclosure of {M x : M in [lo, hi], x in box}."""
        Mc = 0.5 * (lo + hi)
        Mr = 0.5 * (hi - lo)
        center = Mc @ box.center
        radius = np.abs(Mc) @ box.radius + Mr @ (np.abs(box.center) + box.radius)
        return Zonotope.from_box(center, radius)

    def curvature_state(self, box: IntervalVector) -> Zonotope:
        return self._interval_matrix_image(self.curv_lo, self.curv_hi, box)

    def curvature_input(self, q: np.ndarray) -> Zonotope:
        box = IntervalVector(np.minimum(q, q), np.maximum(q, q))
        return self._interval_matrix_image(self.curv_in_lo, self.curv_in_hi, box)


def propagate_step(flow: AffineFlow, R_k: Zonotope, U: Zonotope, dt: float,
                   propagator: Propagator | None = None,
                   extra_disturbance_radius=None) -> StepResult:
    """One propagation step.

    The per-step input set U covers all admissible inputs during the step;
    its center is treated as the nominal constant input (exact particular
    solution) and its radius as a time-varying disturbance (termwise
    enclosure).  extra_disturbance_radius adds a further time-varying
    disturbance box radius directly on the state derivative.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if U.dim != flow.input_dim:
        raise ValueError("input set dimension mismatch")
    prop = propagator if propagator is not None else Propagator(flow.A, dt)

    u_c = U.c
    q = flow.B @ u_c + flow.b
    # time-varying deviation of inputs around the nominal
    w_rad = np.abs(flow.B @ U.G).sum(axis=1) if U.ngen else np.zeros(flow.dim)
    if extra_disturbance_radius is not None:
        w_rad = w_rad + np.asarray(extra_disturbance_radius, float).reshape(-1)

    hull0 = interval_hull(R_k)
    state_scale = float(np.max(np.abs(hull0.center) + hull0.radius, initial=0.0))

    homogeneous = linear_map(prop.exp_dt, R_k)
    particular = Zonotope.point(prop.phi1 @ q)
    parts = minkowski_sum(homogeneous, particular)
    bloat = prop.rem_exp * state_scale + prop.rem_phi * float(
        np.max(np.abs(q), initial=0.0))
    dev_rad = prop.dev_abs @ w_rad
    rad = dev_rad + bloat
    if np.any(rad > 0):
        parts = minkowski_sum(parts, Zonotope.from_box(np.zeros(flow.dim), rad))
    time_point = parts

    curv = minkowski_sum(prop.curvature_state(hull0), prop.curvature_input(q))
    time_interval = minkowski_sum(enclose_hull(R_k, time_point), curv)
    if np.any(dev_rad > 0) or bloat > 0:
        time_interval = minkowski_sum(
            time_interval, Zonotope.from_box(np.zeros(flow.dim), dev_rad + bloat))
    return StepResult(time_point, time_interval, dt)


def propagate_step_segments(flow: AffineFlow, R_k: Zonotope, step_in,
                            propagator_cache: dict | None = None,
                            extra_disturbance_radius=None,
                            clock_index: int | None = None,
                            expm_cache: dict | None = None) -> StepResult:
    """One step driven by an exact zero-order-hold input description.

    Each hold piece is propagated as a sub-step with its constant nominal
    input; step_in.radius rides along as a time-varying disturbance.  The
    time-interval set encloses all sub-step interval sets.

    Sample switches interact with the clock spread of the set: a
    trajectory whose clock is delta ahead of the center crosses each
    switch delta early, deviating from the nominal by
    delta * e^{A (t_end - b)} B du to first order in delta.  Once a switch
    is fully crossed by every trajectory it is booked exactly as that
    signed term -- a rank-one update against the clock generators, which
    keeps the deviation correlated instead of accumulating noise.
    Switches still mid-crossing at the step end are covered transiently
    via carry_radius and the time-interval set.
    """
    R = R_k
    interval = None
    total = 0.0
    amp = None
    for tau, u in step_in.segments:
        if propagator_cache is not None:
            key = round(tau, 15)
            prop = propagator_cache.get(key)
            if prop is None:
                prop = propagator_cache[key] = Propagator(flow.A, tau)
        else:
            prop = Propagator(flow.A, tau)
        U = Zonotope.from_box(u, step_in.radius)
        sub = propagate_step(flow, R, U, tau, propagator=prop,
                             extra_disturbance_radius=extra_disturbance_radius)
        R = sub.time_point_set
        interval = (sub.time_interval_set if interval is None
                    else enclose_hull(interval, sub.time_interval_set))
        total += tau
        amp = prop.exp_abs if amp is None else prop.exp_abs @ amp

    carry = None
    if step_in.boundaries and clock_index is not None:
        half = 0.5 * step_in.width
        delta_c = float(R.c[clock_index] - (step_in.t_center + total))
        bake_rad = np.zeros(flow.dim)
        for offset, du in step_in.boundaries:
            if offset <= -half:
                continue  # fully crossed in an earlier step, already booked
            Bdu = flow.B @ du
            if offset <= total - half:
                # fully crossed: signed, clock-correlated deviation
                elapsed = total - offset
                key = round(elapsed, 15)
                Phi = None if expm_cache is None else expm_cache.get(key)
                if Phi is None:
                    Phi = _expm(flow.A * elapsed)
                    if expm_cache is not None:
                        expm_cache[key] = Phi
                v = Phi @ Bdu
                G = R.G + np.outer(v, R.G[clock_index])
                R = Zonotope(R.c + delta_c * v, G)
                # second-order remainder: the switch response is evaluated
                # at the center crossing instant, while the actual instants
                # spread over +-half; |Phi(e - d) - Phi(e)| <= |d| sup |A
                # Phi(s)|, sampled over the crossing range with margin
                sup = np.abs(flow.A @ v)
                for xi in (-half, half):
                    if elapsed + xi > 0:
                        P2 = _expm(flow.A * (elapsed + xi))
                        sup = np.maximum(sup, np.abs(flow.A @ (P2 @ Bdu)))
                bake_rad += 2.0 * half * half * sup
            else:
                # mid-crossing at the step end: transient unsigned cover
                r = (half + abs(delta_c)) * (amp @ np.abs(Bdu))
                carry = r if carry is None else carry + r
            # the deviation sweeps the whole step for the interval set
            span = (half + abs(delta_c)) * (amp @ np.abs(Bdu))
            interval = minkowski_sum(
                interval, Zonotope.from_box(np.zeros(flow.dim), span))
        if np.any(bake_rad > 0):
            box = Zonotope.from_box(np.zeros(flow.dim), bake_rad)
            R = minkowski_sum(R, box)
            interval = minkowski_sum(interval, box)
    return StepResult(R, interval, total, carry)


def reach_affine_until(flow: AffineFlow, R_0: Zonotope, input_provider,
                       invariant, dt: float, t_end: float,
                       max_order: float = 20.0):
    """Propagate until the time-point set leaves the invariant or t_end.

    input_provider(R_k, dt) -> input-set zonotope for the step.
    invariant: list of HalfSpace or None.  Returns (steps, halted_early).
    """
    from .sets import reduce_order

    if not _intersects_invariant(R_0, invariant):
        return [], True
    prop = Propagator(flow.A, dt)
    steps: list[StepResult] = []
    R = R_0
    t = 0.0
    while t < t_end - 1e-12:
        h = min(dt, t_end - t)
        p = prop if abs(h - dt) < 1e-15 else Propagator(flow.A, h)
        U = input_provider(R, h)
        step = propagate_step(flow, R, U, h, propagator=p)
        step = StepResult(reduce_order(step.time_point_set, max_order),
                          reduce_order(step.time_interval_set, max_order), h)
        steps.append(step)
        R = step.time_point_set
        t += h
        if not _intersects_invariant(R, invariant):
            return steps, True
    return steps, False


def _intersects_invariant(z: Zonotope, invariant) -> bool:
    """Cheap necessary condition: every half-space is individually reachable."""
    if not invariant:
        return True
    for hs in invariant:
        lo, _ = z.support_interval(hs.normal)
        if lo > hs.offset + 1e-12 * max(1.0, abs(hs.offset)):
            return False
    return True
