"""Guard-intersection methods for hyperplane crossings.

Five strategies over the same job description:

  geometric  box union of the guard slices of the hit-window sets
  mapping    first-order time-of-crossing map from the pre-window set,
             with a bilinear-term enclosure and a curvature correction
  scaling    flatten the set onto the guard under guard-scaled dynamics,
             refine with a smaller step, box-union the result
  tsm        flatten via scaling, then map the flattened set through the
             guard over the enclosed crossing-time window
  trinal     tsm cross-validated against the geometric box, falling back
             to geometric when the tsm stage fails
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inputs import InputModel, enclose_window, unify_inputs
from .linear import AffineFlow
from .quadratic import LinearizationDomainError, QuadraticFlow, reach_quadratic_step
from .sets import (
    EMPTY_SET,
    ConstrainedZonotope,
    Hyperplane,
    IntervalVector,
    Zonotope,
    cz_interval_hull,
    interval_hull,
    intersect_hyperplane,
    is_empty,
    reduce_order,
    slice_zonotope,
)

METHODS = ("geometric", "mapping", "scaling", "tsm", "trinal")

DEFAULT_TUNING = {
    "scale_gain": 1.0,       # k_s of the guard-scaled dynamics
    "flat_delta": None,      # target crossing-time width; default dt
    "flat_vol_ratio": 2.0,   # allowed tangential growth while flattening
    "refine_factor": 8,      # fine-step divisor for the refinement stage
    "max_flat_steps": 400,
}


class GuardMethodError(RuntimeError):
    """A method could not produce an enclosure for this job."""


class DisjointEnclosureError(RuntimeError):
    """Two enclosures of the same crossing are disjoint; one of them (and
    hence the pipeline) is unsound for this job."""


@dataclass(frozen=True)
class IntersectionJob:
    flow: AffineFlow
    guard: Hyperplane
    hit_sets: tuple           # time-interval sets touching the guard, in order
    pre_hit_set: Zonotope     # time-point set before the first hitting step
    input_model: InputModel
    clock_index: int
    dt: float
    invariant: tuple = ()
    tuning: dict = field(default_factory=dict)

    def tune(self, key):
        v = self.tuning.get(key, DEFAULT_TUNING[key])
        if key == "flat_delta" and v is None:
            return self.dt
        return v

    def window_inputs(self) -> Zonotope:
        lo = interval_hull(self.pre_hit_set).lower[self.clock_index]
        hi = interval_hull(self.hit_sets[-1]).upper[self.clock_index] + self.dt
        return enclose_window(self.input_model, lo, hi)


def compute_intersection(method: str, job: IntersectionJob):
    if method not in METHODS:
        raise ValueError(f"unknown intersection method {method!r}")
    return {
        "geometric": intersect_geometric,
        "mapping": intersect_mapping,
        "scaling": intersect_scaling,
        "tsm": intersect_tsm,
        "trinal": intersect_trinal,
    }[method](job)


# ---------------------------------------------------------------- measures

def measure_delta(z: Zonotope, guard: Hyperplane, flow: AffineFlow,
                  u_nominal) -> float:
    """Crossing-time width: guard-normal extent over the normal speed at
    the center.  Infinite when the center velocity is tangential."""
    lo, hi = z.support_interval(guard.normal)
    speed = abs(float(guard.normal @ flow.eval(z.c, u_nominal)))
    if speed < 1e-300:
        return np.inf
    return (hi - lo) / speed


def measure_vol_ratio(z: Zonotope, reference: Zonotope,
                      flow_direction) -> float:
    """Growth of the set transverse to the flow direction, as the ratio of
    projected interval-hull widths; axes thin in both sets are skipped."""
    v = np.asarray(flow_direction, dtype=float).reshape(-1)
    nv = np.linalg.norm(v)
    P = np.eye(z.dim) - np.outer(v, v) / (nv * nv) if nv > 0 else np.eye(z.dim)
    w_z = np.abs(P @ z.G).sum(axis=1) if z.ngen else np.zeros(z.dim)
    w_r = np.abs(P @ reference.G).sum(axis=1) if reference.ngen else np.zeros(z.dim)
    s_z = float(np.max(w_z, initial=0.0))
    s_r = float(np.max(w_r, initial=0.0))
    keep = (w_z > 1e-9 * max(s_z, 1e-300)) & (w_r > 1e-9 * max(s_r, 1e-300))
    if not np.any(keep):
        return 1.0
    ratios = (w_z[keep] + 1e-300) / (w_r[keep] + 1e-300)
    return float(np.exp(np.mean(np.log(ratios))))


def _box_union(hulls) -> Zonotope | type(EMPTY_SET):
    lo = hi = None
    for h in hulls:
        if is_empty(h):
            continue
        lo = h.lower if lo is None else np.minimum(lo, h.lower)
        hi = h.upper if hi is None else np.maximum(hi, h.upper)
    if lo is None:
        return EMPTY_SET
    return Zonotope.from_box(0.5 * (lo + hi), 0.5 * (hi - lo))


def _slice_hull(z: Zonotope, guard: Hyperplane):
    cz = intersect_hyperplane(ConstrainedZonotope.from_zonotope(z), guard)
    return cz_interval_hull(cz)


# ---------------------------------------------------------------- geometric

def intersect_geometric(job: IntersectionJob):
    """Box union of the exact guard slices of every hit-window set."""
    return _box_union(_slice_hull(z, job.guard) for z in job.hit_sets)


# ---------------------------------------------------------------- mapping

def _bilinear_map(x0: Zonotope, U: Zonotope, flow: AffineFlow,
                  t_lo: float, t_hi: float) -> Zonotope:
    """Enclosure of { x + t f(x, u) : x in x0, u in U, t in [t_lo, t_hi] }.

    Products of the time factor with the set factors range over [-1, 1]
    and become fresh generators.
    """
    tc = 0.5 * (t_lo + t_hi)
    tr = 0.5 * (t_hi - t_lo)
    f_c = flow.eval(x0.c, U.c)
    AG = flow.A @ x0.G if x0.ngen else np.zeros((flow.dim, 0))
    BG = flow.B @ U.G if U.ngen else np.zeros((flow.dim, 0))
    cols = [x0.G + tc * AG, tc * BG]
    if tr > 0:
        cols.append(tr * f_c.reshape(-1, 1))
        cols.append(tr * AG)
        cols.append(tr * BG)
    cols = [c for c in cols if c.shape[1]]
    G = np.hstack(cols) if cols else np.zeros((flow.dim, 0))
    return Zonotope(x0.c + tc * f_c, G)


def _curvature_correction(x0: Zonotope, window_sets, flow: AffineFlow,
                          t_max: float) -> Zonotope:
    """Box covering t * A (x(s) - x0) for t in [0, t_max]: the gap between
    the first-order crossing map and the true flow."""
    h0 = interval_hull(x0)
    hw = _box_union(interval_hull(z) for z in window_sets)
    w = interval_hull(hw)
    d_lo = w.lower - h0.upper
    d_hi = w.upper - h0.lower
    dc = 0.5 * (d_lo + d_hi)
    dr = 0.5 * (d_hi - d_lo)
    adc = flow.A @ dc
    adr = np.abs(flow.A) @ dr
    lo = np.minimum(0.0, t_max * (adc - adr))
    hi = np.maximum(0.0, t_max * (adc + adr))
    return Zonotope.from_box(0.5 * (lo + hi), 0.5 * (hi - lo))


def intersect_mapping(job: IntersectionJob):
    """Map the pre-window set onto the guard along the flow, then slice.

    The crossing-time horizon is the whole hit window, so the bilinear set
    covers every state that can sit on the guard during it.
    """
    Ts = len(job.hit_sets) * job.dt + job.dt
    U = job.window_inputs()
    mapped = _bilinear_map(job.pre_hit_set, U, job.flow, 0.0, Ts)
    corr = _curvature_correction(job.pre_hit_set,
                                 (job.pre_hit_set,) + job.hit_sets,
                                 job.flow, Ts)
    from .sets import minkowski_sum

    mapped = minkowski_sum(mapped, corr)
    sliced = slice_zonotope(reduce_order(mapped, 40.0), job.guard)
    if is_empty(sliced):
        return EMPTY_SET
    return reduce_order(sliced, 20.0)


# ---------------------------------------------------------------- scaling

def _scaled_flow(job: IntersectionJob) -> QuadraticFlow:
    side = 1.0 if job.guard.signed_dist(job.pre_hit_set.c) >= 0 else -1.0
    return QuadraticFlow(job.flow, job.guard.normal, job.guard.offset,
                         job.tune("scale_gain"), side)


def reach_until_flat(job: IntersectionJob, start: Zonotope,
                     delta_target: float, max_steps: int,
                     shrink: float = 0.4):
    """Propagate the guard-scaled dynamics until the crossing-time width of
    the time-point set drops below delta_target.

    The normal coordinate decays at rate k_s |n.f| under the scaled flow,
    so the scaled step size is chosen as shrink / (k_s |n.f(center)|) for a
    fixed contraction factor per step.  Returns (flat set, interval sets of
    the run).  Raises GuardMethodError when the width stalls, the set grows
    too much transverse to the flow, or the step cap is reached.
    """
    qf = _scaled_flow(job)
    k_s = job.tune("scale_gain")
    R = start
    U0 = unify_inputs(job.input_model, R, job.dt, job.clock_index)
    if measure_delta(R, job.guard, job.flow, U0.c) <= delta_target:
        return R, []
    seen = []
    prev_delta = np.inf
    ratio_cap = job.tune("flat_vol_ratio")
    for _ in range(max_steps):
        U = unify_inputs(job.input_model, R, job.dt, job.clock_index)
        speed = abs(float(job.guard.normal @ job.flow.eval(R.c, U.c)))
        if speed < 1e-300:
            raise GuardMethodError("zero normal speed at the set center")
        dt = shrink / (k_s * speed)
        # keep the linearized scaled dynamics stable over one step; grazing
        # sets (tiny normal speed) would otherwise blow the step size up
        w_c = qf.scale_at(R.c)
        a_norm = (w_c * np.abs(job.flow.A).sum(axis=1).max()
                  + float(np.abs(job.flow.eval(R.c, U.c)).max())
                  * k_s * np.abs(job.guard.normal).sum())
        dt = min(dt, 2.0 / max(a_norm, 1e-12))
        try:
            step = reach_quadratic_step(qf, R, U, dt)
        except LinearizationDomainError as exc:
            raise GuardMethodError(f"scaled step failed: {exc}") from exc
        R = reduce_order(step.time_point_set, 20.0)
        seen.append(reduce_order(step.time_interval_set, 20.0))
        f_dir = job.flow.eval(start.c, U.c)
        ratio = measure_vol_ratio(R, start, f_dir)
        if ratio > ratio_cap:
            raise GuardMethodError(
                f"transverse growth {ratio:.2f} exceeds cap {ratio_cap}")
        delta = measure_delta(R, job.guard, job.flow, U.c)
        if delta <= delta_target:
            return R, seen
        if delta > prev_delta * (1.0 - 1e-9) and delta > 2.0 * delta_target:
            raise GuardMethodError(
                f"crossing-time width stalled at {delta:.3e}")
        prev_delta = delta
    raise GuardMethodError(f"set not flat after {max_steps} scaled steps")


def _flatten_and_refine(job: IntersectionJob):
    """Coarse flattening followed by a fine pass; returns the fine flat
    time-point set and the fine interval sets."""
    delta = job.tune("flat_delta")
    max_steps = job.tune("max_flat_steps")
    flat, _ = reach_until_flat(job, job.pre_hit_set, delta, max_steps)
    k = int(job.tune("refine_factor"))
    fine, seen = reach_until_flat(job, flat, delta / k, max_steps,
                                  shrink=0.4 / k)
    return fine, seen


def intersect_scaling(job: IntersectionJob):
    """Flatten onto the guard under scaled dynamics and box the result."""
    fine, seen = _flatten_and_refine(job)
    tail = seen[-min(len(seen), 2 * int(job.tune("refine_factor"))):]
    hulls = [interval_hull(z) for z in tail] + [interval_hull(fine)]
    union = _box_union(hulls)
    sliced = _slice_hull(union, job.guard)
    if not is_empty(sliced):
        return Zonotope.from_box(sliced.center, sliced.radius)
    return union


# ---------------------------------------------------------------- tsm

def intersect_tsm(job: IntersectionJob):
    """Scale-then-map: flatten the set near the guard, enclose its crossing
    times with interval arithmetic, map it through and slice."""
    fine, _ = _flatten_and_refine(job)
    U = job.window_inputs()
    n = job.guard.normal
    a_lo, a_hi = fine.support_interval(n)
    hull = interval_hull(fine)
    u_hull = interval_hull(U)
    v_c = job.flow.A @ hull.center + job.flow.B @ u_hull.center + job.flow.b
    v_r = np.abs(job.flow.A) @ hull.radius + np.abs(job.flow.B) @ u_hull.radius
    vn_lo = float(n @ v_c) - float(np.abs(n) @ v_r)
    vn_hi = float(n @ v_c) + float(np.abs(n) @ v_r)
    gaps = np.array([job.guard.offset - a_lo, job.guard.offset - a_hi])
    if vn_lo <= 0.0 <= vn_hi:
        raise GuardMethodError("normal speed interval contains zero")
    cands = np.concatenate([gaps / vn_lo, gaps / vn_hi])
    t_lo = max(0.0, float(cands.min()))
    t_hi = float(cands.max())
    if t_hi < 0.0:
        raise GuardMethodError("crossing lies in the past of the flat set")
    if t_hi - t_lo > len(job.hit_sets) * job.dt + 2 * job.dt:
        raise GuardMethodError(
            f"crossing-time window {t_hi - t_lo:.3e} wider than the hit window")
    mapped = _bilinear_map(fine, U, job.flow, t_lo, t_hi)
    corr = _curvature_correction(fine, (fine, mapped), job.flow, t_hi)
    from .sets import minkowski_sum

    mapped = minkowski_sum(mapped, corr)
    sliced = slice_zonotope(reduce_order(mapped, 40.0), job.guard)
    if is_empty(sliced):
        raise GuardMethodError("mapped set misses the guard")
    return reduce_order(sliced, 20.0)


# ---------------------------------------------------------------- trinal

def intersect_trinal(job: IntersectionJob):
    """Cross-validated combination of the geometric and tsm enclosures.

    Both enclose the same crossing states, so their interval hulls must
    overlap; disjoint hulls mean one enclosure is wrong and abort the run.
    On agreement the smaller enclosure (by volume measure) is kept, so the
    trinal measure never exceeds either input's.  The tsm set usually wins
    and is returned as-is: it keeps the crossing-time generator correlated
    with the state, which a componentwise box intersection would destroy.
    A tsm failure degrades to the geometric box alone.
    """
    from .sets import volume_measure

    geo = intersect_geometric(job)
    if is_empty(geo):
        return EMPTY_SET
    try:
        tsm = intersect_tsm(job)
    except GuardMethodError:
        return geo
    both = interval_hull(geo).intersect(interval_hull(tsm))
    if is_empty(both):
        raise DisjointEnclosureError(
            "geometric and tsm enclosures are disjoint")
    if volume_measure(tsm) <= volume_measure(geo):
        return tsm
    return geo
