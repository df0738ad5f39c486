"""Monte-Carlo oracle: batched fixed-step RK4 simulation of the hybrid
automaton with event detection, plus containment checking of simulated
states against computed reachable sets.

The batch integrator keeps all trajectories on one fine time grid; guard
crossings are refined per trajectory by bisection inside the fine step and
the remainder of the step is finished in the target location, so the batch
stays aligned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hybrid import HybridAutomaton
from .inputs import InputModel
from .lp import LpProblem, solve_lp
from .sets import Zonotope, interval_hull

EVENT_TIME_TOL = 1e-10
SIDE_TOL = 1e-9


class ChatterError(RuntimeError):
    """More location switches than the jump cap allows."""


@dataclass(frozen=True)
class SimBatch:
    """Aligned batch of simulated trajectories.

    times: (K,) coarse grid; states: (N, K, n); locations: (N, K) ints.
    """

    times: np.ndarray
    states: np.ndarray
    locations: np.ndarray


def _rk4_step(flow, x, t, h, u_of_t):
    k1 = flow.A @ x + flow.B @ u_of_t(t) + flow.b
    k2 = flow.A @ (x + 0.5 * h * k1) + flow.B @ u_of_t(t + 0.5 * h) + flow.b
    k3 = flow.A @ (x + 0.5 * h * k2) + flow.B @ u_of_t(t + 0.5 * h) + flow.b
    k4 = flow.A @ (x + h * k3) + flow.B @ u_of_t(t + h) + flow.b
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_batch(flow, X, t, h, U3):
    """X: (N, n); U3: inputs at the three stage times, each (N, m)."""
    u0, um, u1 = U3
    k1 = X @ flow.A.T + u0 @ flow.B.T + flow.b
    k2 = (X + 0.5 * h * k1) @ flow.A.T + um @ flow.B.T + flow.b
    k3 = (X + 0.5 * h * k2) @ flow.A.T + um @ flow.B.T + flow.b
    k4 = (X + h * k3) @ flow.A.T + u1 @ flow.B.T + flow.b
    return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _refine_event(flow, tr, x_pre, t0, h, u_of_t):
    """Bisect the crossing time of tr's guard within [t0, t0 + h].

    Returns (s, x_event) or None when the side conditions reject the event.
    """
    g0 = float(tr.guard.normal @ x_pre) - tr.guard.offset
    lo, hi = 0.0, h
    x_hi = _rk4_step(flow, x_pre, t0, h, u_of_t)
    g_hi = float(tr.guard.normal @ x_hi) - tr.guard.offset
    if g0 == 0.0:
        s, x_ev = 0.0, x_pre
    else:
        if np.sign(g_hi) == np.sign(g0):
            return None
        while hi - lo > EVENT_TIME_TOL:
            mid = 0.5 * (lo + hi)
            x_mid = _rk4_step(flow, x_pre, t0, mid, u_of_t)
            g_mid = float(tr.guard.normal @ x_mid) - tr.guard.offset
            if g_mid == 0.0 or np.sign(g_mid) != np.sign(g0):
                hi = mid
            else:
                lo = mid
        s = hi
        x_ev = _rk4_step(flow, x_pre, t0, s, u_of_t)
    for hs in tr.side_conditions:
        if float(hs.normal @ x_ev) > hs.offset + SIDE_TOL:
            return None
    return s, x_ev


def simulate_trajectory(ha: HybridAutomaton, x0, start_location: int,
                        im: InputModel, u_noise, dt_sim: float, t_end: float,
                        max_jumps: int = 40, record_stride: int = 1):
    """One trajectory with event detection; returns (times, states, locs)."""
    u_noise = np.asarray(u_noise, dtype=float).reshape(-1)

    def u_of_t(t):
        return im.sample_at(t) + u_noise

    n_steps = int(round(t_end / dt_sim))
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    loc = start_location
    jumps = 0
    times, states, locs = [0.0], [x.copy()], [loc]
    for k in range(n_steps):
        t = k * dt_sim
        x, loc, jumps = _advance_with_events(
            ha, x, loc, t, dt_sim, u_of_t, jumps, max_jumps)
        if (k + 1) % record_stride == 0:
            times.append((k + 1) * dt_sim)
            states.append(x.copy())
            locs.append(loc)
    return np.array(times), np.array(states), np.array(locs, dtype=int)


def _advance_with_events(ha, x, loc, t, h, u_of_t, jumps, max_jumps,
                         depth: int = 0):
    flow = ha.locations[loc].flow
    x_next = _rk4_step(flow, x, t, h, u_of_t)
    if depth > 6:
        return x_next, loc, jumps
    best = None
    for tr in ha.locations[loc].transitions:
        hit = _refine_event(flow, tr, x, t, h, u_of_t)
        if hit is not None and (best is None or hit[0] < best[0][0]):
            best = (hit, tr)
    if best is None:
        return x_next, loc, jumps
    (s, x_ev), tr = best
    jumps += 1
    if jumps > max_jumps:
        raise ChatterError(f"more than {max_jumps} events")
    from .hybrid import apply_jump

    z = apply_jump(tr, Zonotope.point(x_ev))
    x_post = z.c
    rem = h - s
    if rem <= 0:
        return x_post, tr.target, jumps
    return _advance_with_events(ha, x_post, tr.target, t + s, rem, u_of_t,
                                jumps, max_jumps, depth + 1)


def simulate_batch(ha: HybridAutomaton, X0: Zonotope, start_location: int,
                   im: InputModel, n_samples: int, dt_sim: float,
                   t_end: float, rng, record_stride: int = 20,
                   max_jumps: int = 40) -> SimBatch:
    """n_samples trajectories; initial states uniform in the box of X0,
    one constant uncertainty draw per trajectory."""
    hull = interval_hull(X0)
    X = rng.uniform(hull.lower, hull.upper, size=(n_samples, X0.dim))
    noise = im.uncertainty.sample(rng, n_samples)
    n_steps = int(round(t_end / dt_sim))
    n_rec = n_steps // record_stride + 1
    out_states = np.empty((n_samples, n_rec, X0.dim))
    out_locs = np.empty((n_samples, n_rec), dtype=int)
    out_states[:, 0] = X
    locs = np.full(n_samples, start_location, dtype=int)
    out_locs[:, 0] = locs
    jumps = np.zeros(n_samples, dtype=int)
    rec = 1
    for k in range(n_steps):
        t = k * dt_sim
        u0 = im.sample_at(t) + noise
        um = im.sample_at(t + 0.5 * dt_sim) + noise
        u1 = im.sample_at(t + dt_sim) + noise
        X_new = np.empty_like(X)
        for li in np.unique(locs):
            mask = locs == li
            flow = ha.locations[li].flow
            X_new[mask] = _rk4_batch(flow, X[mask], t, dt_sim,
                                     (u0[mask], um[mask], u1[mask]))
        # per-trajectory event handling where a guard expression changed sign
        for li in np.unique(locs):
            idxs = np.flatnonzero(locs == li)
            for tr in ha.locations[li].transitions:
                g_pre = X[idxs] @ tr.guard.normal - tr.guard.offset
                g_post = X_new[idxs] @ tr.guard.normal - tr.guard.offset
                crossed = idxs[np.sign(g_pre) != np.sign(g_post)]
                for i in crossed:
                    if locs[i] != li:
                        continue  # already handled by an earlier transition

                    def u_of_t(_t, ni=noise[i]):
                        return im.sample_at(_t) + ni

                    x_i, loc_i, jumps[i] = _advance_with_events(
                        ha, X[i], li, t, dt_sim, u_of_t, jumps[i], max_jumps)
                    X_new[i] = x_i
                    locs[i] = loc_i
        X = X_new
        if (k + 1) % record_stride == 0:
            out_states[:, rec] = X
            out_locs[:, rec] = locs
            rec += 1
    times = np.arange(n_rec) * (dt_sim * record_stride)
    return SimBatch(times, out_states[:, :rec], out_locs[:, :rec])


# ------------------------------------------------------------- containment

def _contained_pinv(z: Zonotope, pts: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized sufficient containment test: the min-2-norm coefficient
    vector has infinity norm <= 1."""
    if z.ngen == 0:
        return np.all(np.abs(pts - z.c) <= tol, axis=1)
    beta = np.linalg.pinv(z.G) @ (pts - z.c).T
    return np.max(np.abs(beta), axis=0) <= 1.0 + tol


def _contained_lp(z: Zonotope, x, tol: float) -> bool:
    if z.ngen == 0:
        return bool(np.all(np.abs(x - z.c) <= tol))
    p = z.ngen
    prob = LpProblem(np.zeros(p), z.G, x - z.c,
                     -(1 + tol) * np.ones(p), (1 + tol) * np.ones(p))
    return solve_lp(prob) is not None


def containment_test(branches, batch: SimBatch, tol: float = 1e-7):
    """Checks every recorded state against the union over branches of
    time-interval sets whose clock interval covers the state's time.

    Returns a report dict with the violation list (trajectory index, time).
    """
    entries = [e for b in branches for e in b.entries]
    clock_lo = np.array([e.clock_interval[0] for e in entries])
    clock_hi = np.array([e.clock_interval[1] for e in entries])
    hulls = [interval_hull(e.time_interval_set) for e in entries]
    violations = []
    n_checked = 0
    for k, t in enumerate(batch.times):
        cand = np.flatnonzero((clock_lo <= t + 1e-12) & (clock_hi >= t - 1e-12))
        pts = batch.states[:, k, :]
        n_checked += pts.shape[0]
        if cand.size == 0:
            violations.extend((i, float(t)) for i in range(pts.shape[0]))
            continue
        pending = np.arange(pts.shape[0])
        for ci in cand:
            if pending.size == 0:
                break
            h = hulls[ci]
            scale = np.maximum(1.0, np.abs(h.upper) + np.abs(h.lower))
            in_hull = np.all(
                (pts[pending] >= h.lower - tol * scale)
                & (pts[pending] <= h.upper + tol * scale), axis=1)
            sub = pending[in_hull]
            if sub.size:
                ok = _contained_pinv(entries[ci].time_interval_set,
                                     pts[sub], tol)
                resolved = sub[ok]
                pending = np.setdiff1d(pending, resolved)
        # LP fallback for points the quick certificate could not resolve
        still = []
        for i in pending:
            if not any(_contained_lp(entries[ci].time_interval_set,
                                     pts[i], tol) for ci in cand):
                still.append(i)
        violations.extend((int(i), float(t)) for i in still)
    return {
        "nChecked": n_checked,
        "nViolations": len(violations),
        "violations": violations,
        "passRate": 1.0 - len(violations) / max(n_checked, 1),
    }
