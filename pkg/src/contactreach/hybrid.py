"""Hybrid automaton model and the reachability execution procedure.

Propagation runs per location until the invariant is left or the horizon is
reached; guard hits are collected as contiguous windows of time-interval
sets, intersected with the configured method, pruned by the invariant, and
the jump images are explored recursively.  Time synchronization after a
guard intersection pins the clock coordinate to the end of the hit window
and may fork the result into synchronized / unsynchronized alternatives.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .inputs import InputModel, step_input
from .linear import AffineFlow, Propagator, propagate_step_segments
from .sets import (
    EMPTY_SET,
    ConstrainedZonotope,
    HalfSpace,
    Hyperplane,
    Zonotope,
    cz_interval_hull,
    interval_hull,
    intersect_halfspace,
    intersect_hyperplane,
    is_empty,
    minkowski_sum,
    reduce_order,
    tighten_halfspace,
)

SUPPORT_TOL = 1e-12


class BranchCapError(RuntimeError):
    pass


class HitWindowError(RuntimeError):
    pass


class SyncError(RuntimeError):
    pass


@dataclass(frozen=True)
class Transition:
    """Guard crossing with optional graze gating.

    speed_gate > 0 requires some point of the guard slice to satisfy every
    side condition with that margin before the transition counts as
    enabled.  Crossings slower than the gate are kept in the source
    location; its flow must then carry a slack disturbance covering the
    dynamics mismatch over the shallow excursion band beyond the guard.
    """

    guard: Hyperplane
    side_conditions: tuple
    jump_matrix: np.ndarray | None
    jump_offset: np.ndarray | None
    target: int
    name: str = ""
    speed_gate: float = 0.0

    @classmethod
    def identity_jump(cls, guard, side_conditions, target, name="",
                      speed_gate=0.0):
        return cls(guard, tuple(side_conditions), None, None, target, name,
                   speed_gate)


@dataclass(frozen=True)
class Location:
    flow: AffineFlow
    invariant: tuple
    transitions: tuple
    name: str = ""
    # state-space disturbance rate radius compensating gated transitions
    slack: np.ndarray | None = None


@dataclass(frozen=True)
class HybridAutomaton:
    locations: tuple
    clock_index: int

    def __post_init__(self):
        for loc in self.locations:
            for tr in loc.transitions:
                if not 0 <= tr.target < len(self.locations):
                    raise ValueError(f"invalid transition target {tr.target}")
            row = loc.flow.A[self.clock_index]
            if np.any(row != 0) or loc.flow.b[self.clock_index] != 1.0:
                raise ValueError("clock row must be zero with offset 1")


@dataclass(frozen=True)
class ReachEntry:
    location: int
    time_point_set: Zonotope
    time_interval_set: Zonotope
    clock_interval: tuple


@dataclass(frozen=True)
class IntersectionRecord:
    source: int
    target: int
    transition_name: str
    order: int
    intersection_set: Zonotope
    t_window: tuple
    method: str
    measure: float
    wall_time: float
    synchronized: bool | None = None


@dataclass
class ReachSequence:
    """One complete over-approximating branch of the run."""

    entries: list = field(default_factory=list)
    intersections: list = field(default_factory=list)
    tag: str = "root"


def clock_projection(z: Zonotope, clock_index: int) -> tuple:
    hull = interval_hull(z)
    return float(hull.lower[clock_index]), float(hull.upper[clock_index])


def detect_guard_hits(entry_sets, transitions, max_hit_steps: int = 200):
    """Contiguous runs of step indices whose time-interval set touches a
    transition's guard with feasible side conditions.

    Returns a list of {"transition": index, "steps": [indices]} dicts;
    a run longer than max_hit_steps raises HitWindowError.
    """
    hits = []
    for tidx, tr in enumerate(transitions):
        run = []
        for sidx, z in enumerate(entry_sets):
            if _touches_transition(z, tr):
                run.append(sidx)
            elif run:
                hits.append({"transition": tidx, "steps": run})
                run = []
        if run:
            hits.append({"transition": tidx, "steps": run})
    for h in hits:
        if len(h["steps"]) > max_hit_steps:
            raise HitWindowError(
                f"guard hit window of {len(h['steps'])} steps exceeds cap "
                f"{max_hit_steps}; intersection assumed bounded")
    return hits


def _touches_transition(z: Zonotope, tr: Transition) -> bool:
    lo, hi = z.support_interval(tr.guard.normal)
    scale = max(1.0, abs(tr.guard.offset))
    if not (lo - SUPPORT_TOL * scale <= tr.guard.offset <= hi + SUPPORT_TOL * scale):
        return False
    for hs in tr.side_conditions:
        s_lo, _ = z.support_interval(hs.normal)
        if s_lo > hs.offset + SUPPORT_TOL * max(1.0, abs(hs.offset)):
            return False
    if tr.speed_gate > 0.0:
        return _gated_feasible(z, tr)
    return True


def _gated_feasible(z: Zonotope, tr: Transition) -> bool:
    """True iff some point of the guard slice meets every side condition
    with the transition's speed-gate margin (one LP per condition)."""
    from .lp import LpProblem, solve_lp

    cz = intersect_hyperplane(ConstrainedZonotope.from_zonotope(z), tr.guard)
    if not cz.is_feasible():
        return False
    p = cz.ngen
    ones = np.ones(p)
    for hs in tr.side_conditions:
        g = cz.G.T @ hs.normal
        try:
            res = solve_lp(LpProblem(g, cz.A, cz.b, -ones, ones))
        except RuntimeError:
            continue  # solver failure: keep the transition enabled
        if res is None:
            return False
        best = float(hs.normal @ cz.c) + res.optimum
        if best > hs.offset - tr.speed_gate:
            return False
    return True


def prune_with_invariant(I, half_spaces):
    """Tighten a set against half-spaces.

    Plain zonotopes are tightened per half-space with the
    correlation-preserving coefficient cut; constrained zonotopes are cut
    exactly and boxed.  Returns EMPTY_SET when the result is empty.
    """
    if is_empty(I):
        return EMPTY_SET
    if isinstance(I, Zonotope):
        z = I
        for hs in half_spaces:
            z = tighten_halfspace(z, hs)
            if is_empty(z):
                return EMPTY_SET
        return z
    cz = I
    for hs in half_spaces:
        cz = intersect_halfspace(cz, hs)
    hull = cz_interval_hull(cz)
    if is_empty(hull):
        return EMPTY_SET
    return Zonotope.from_box(hull.center, hull.radius)


def apply_jump(tr: Transition, I: Zonotope) -> Zonotope:
    if tr.jump_matrix is None:
        return I
    M = np.asarray(tr.jump_matrix, dtype=float)
    off = (np.zeros(M.shape[0]) if tr.jump_offset is None
           else np.asarray(tr.jump_offset, dtype=float).reshape(-1))
    return Zonotope(M @ I.c + off, M @ I.G)


def sync_time(entries, t_l: float, clock_index: int) -> Zonotope:
    """States reachable exactly at clock time t_l, as one box zonotope.

    entries: ReachEntry list whose clock intervals jointly cover t_l.
    """
    plane = Hyperplane(_unit(entries[0].time_interval_set.dim, clock_index), t_l)
    lo = None
    hi = None
    for e in entries:
        c_lo, c_hi = e.clock_interval
        if not (c_lo - 1e-12 <= t_l <= c_hi + 1e-12):
            continue
        cz = ConstrainedZonotope.from_zonotope(e.time_interval_set)
        hull = cz_interval_hull(intersect_hyperplane(cz, plane))
        if is_empty(hull):
            continue
        lo = hull.lower if lo is None else np.minimum(lo, hull.lower)
        hi = hull.upper if hi is None else np.maximum(hi, hull.upper)
    if lo is None:
        raise SyncError(f"no entry intersects the clock hyperplane t = {t_l}")
    center = 0.5 * (lo + hi)
    radius = 0.5 * (hi - lo)
    # the slice pins the clock exactly
    center[clock_index] = t_l
    radius[clock_index] = 0.0
    return Zonotope.from_box(center, radius)


def _unit(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


@dataclass(frozen=True)
class RunConfig:
    dt: float
    t_end: float
    method: str = "trinal"
    sync_threshold: float | None = None  # default 2 dt
    sync_mode: str = "both"  # off | both | synced | unsynced
    max_jumps: int = 12
    max_order: float = 20.0
    max_hit_steps: int = 200
    max_alternatives: int = 8
    guard_tuning: dict = field(default_factory=dict)

    @property
    def effective_sync_threshold(self) -> float:
        return (2.0 * self.dt if self.sync_threshold is None
                else self.sync_threshold)


def run_automaton(ha: HybridAutomaton, X0: Zonotope, start_location: int,
                  im: InputModel, config: RunConfig) -> list[ReachSequence]:
    """Execute the reachability procedure; returns one ReachSequence per
    retained alternative (sync forks multiply alternatives, transitions to
    multiple targets stay within one alternative)."""
    if X0.ngen == 0 and X0.dim == 0:
        raise ValueError("empty initial set")
    start = ha.locations[start_location]
    for hs in start.invariant:
        lo, _ = X0.support_interval(hs.normal)
        if lo > hs.offset + 1e-9 * max(1.0, abs(hs.offset)):
            raise ValueError("initial set outside the start invariant")
    engine = _Engine(ha, im, config)
    alts = engine.explore(start_location, X0, depth=0)
    out = []
    for i, alt in enumerate(alts):
        tag = alt.tag or "root"
        out.append(ReachSequence(alt.entries, alt.intersections, tag))
    return out


@dataclass
class _Alt:
    entries: list
    intersections: list
    tag: str = ""


class _Engine:
    def __init__(self, ha, im, config):
        self.ha = ha
        self.im = im
        self.cfg = config
        self.clock = ha.clock_index
        self._props = {}
        self._expms = {}
        self._order_counter = itertools.count(1)

    def propagator_cache(self, loc_idx: int) -> dict:
        if loc_idx not in self._props:
            self._props[loc_idx] = {}
        return self._props[loc_idx]

    def propagate_in_location(self, loc_idx: int, X0: Zonotope, dt: float,
                              t_stop: float, detect_hits: bool = True):
        """Steps in one location until invariant exit or the horizon.

        Returns (entries, hit_events); hit_events carry the hit sets and the
        pre-window time-point set R_h.
        """
        loc = self.ha.locations[loc_idx]
        entries = []
        R = reduce_order(X0, self.cfg.max_order)
        R_cov = R  # like R but covering mid-crossing sample switches
        open_runs = {}
        events = []

        def close_run(tidx):
            run = open_runs.pop(tidx, None)
            if run is not None:
                if len(run["steps"]) > self.cfg.max_hit_steps:
                    raise HitWindowError(
                        f"hit window {len(run['steps'])} steps exceeds cap")
                events.append(run)

        while True:
            t_lo, _ = clock_projection(R, self.clock)
            if t_lo >= t_stop - 1e-12:
                break
            si = step_input(self.im, R, dt, self.clock)
            step = propagate_step_segments(
                loc.flow, R, si,
                propagator_cache=self.propagator_cache(loc_idx),
                extra_disturbance_radius=loc.slack,
                clock_index=self.clock,
                expm_cache=self._expms.setdefault(loc_idx, {}))
            tp_cov = step.time_point_set
            if step.carry_radius is not None:
                tp_cov = minkowski_sum(tp_cov, Zonotope.from_box(
                    np.zeros(tp_cov.dim), step.carry_radius))
            tp = reduce_order(tp_cov, self.cfg.max_order)
            ti = reduce_order(step.time_interval_set, self.cfg.max_order)
            entry = ReachEntry(loc_idx, tp, ti,
                               clock_projection(ti, self.clock))
            sidx = len(entries)
            entries.append(entry)
            if detect_hits:
                for tidx, tr in enumerate(loc.transitions):
                    if _touches_transition(ti, tr):
                        run = open_runs.get(tidx)
                        if run is None:
                            open_runs[tidx] = run = {
                                "transition": tidx, "steps": [],
                                "hit_sets": [], "R_h": R_cov}
                        run["steps"].append(sidx)
                        run["hit_sets"].append(ti)
                    else:
                        close_run(tidx)
            R = (tp if step.carry_radius is None
                 else reduce_order(step.time_point_set, self.cfg.max_order))
            R_cov = tp
            if not self._inside_invariant(R_cov, loc.invariant):
                break
        for tidx in list(open_runs):
            close_run(tidx)
        events.sort(key=lambda e: e["steps"][0])
        return entries, events

    def _inside_invariant(self, z, invariant):
        for hs in invariant:
            lo, _ = z.support_interval(hs.normal)
            if lo > hs.offset + SUPPORT_TOL * max(1.0, abs(hs.offset)):
                return False
        return True

    def explore(self, loc_idx: int, X0: Zonotope, depth: int) -> list[_Alt]:
        if depth > self.cfg.max_jumps:
            raise BranchCapError(f"jump depth exceeds cap {self.cfg.max_jumps}")
        from .guard import IntersectionJob, compute_intersection

        loc = self.ha.locations[loc_idx]
        entries, events = self.propagate_in_location(
            loc_idx, X0, self.cfg.dt, self.cfg.t_end)
        records = []
        successor_sets = []
        for ev in events:
            tr = loc.transitions[ev["transition"]]
            job = IntersectionJob(
                flow=loc.flow, guard=tr.guard, hit_sets=tuple(ev["hit_sets"]),
                pre_hit_set=ev["R_h"], input_model=self.im,
                clock_index=self.clock, dt=self.cfg.dt,
                invariant=loc.invariant, tuning=dict(self.cfg.guard_tuning))
            t0 = time.perf_counter()
            I = compute_intersection(self.cfg.method, job)
            elapsed = time.perf_counter() - t0
            if is_empty(I):
                continue
            measure_raw = _measure(I)
            pruned = prune_with_invariant(
                I, tuple(loc.invariant) + tuple(tr.side_conditions))
            if is_empty(pruned):
                continue
            t_window = clock_projection(pruned, self.clock)
            rec = IntersectionRecord(
                source=loc_idx, target=tr.target, transition_name=tr.name,
                order=next(self._order_counter), intersection_set=pruned,
                t_window=t_window, method=self.cfg.method,
                measure=measure_raw, wall_time=elapsed)
            records.append(rec)
            X0n = apply_jump(tr, pruned)
            successor_sets.append(self._descend(rec, tr, ev, X0n, depth))
        if not successor_sets:
            return [_Alt(entries, records)]
        combos = itertools.product(*successor_sets)
        alts = []
        for combo in combos:
            if len(alts) >= self.cfg.max_alternatives:
                break
            tag = "+".join(c.tag for c in combo if c.tag)
            alts.append(_Alt(
                entries + [e for c in combo for e in c.entries],
                records + [r for c in combo for r in c.intersections],
                tag))
        return alts

    def _descend(self, rec: IntersectionRecord, tr: Transition, ev: dict,
                 X0n: Zonotope, depth: int) -> list[_Alt]:
        t_h, t_l = clock_projection(X0n, self.clock)
        span = t_l - t_h
        want_sync = (span > self.cfg.effective_sync_threshold
                     and self.cfg.sync_mode != "off"
                     and t_l < self.cfg.t_end)
        from .guard import DisjointEnclosureError, GuardMethodError

        recoverable = (HitWindowError, BranchCapError, GuardMethodError,
                       DisjointEnclosureError)
        plain = None
        plain_error = None
        if not want_sync or self.cfg.sync_mode in ("both", "unsynced"):
            try:
                plain = self.explore(rec.target, X0n, depth + 1)
            except recoverable:
                # the unsynced continuation blew up (typically endless guard
                # grazing from the smeared clock); a synchronized alternative
                # covers the same trajectories, so it can stand alone
                if not want_sync or self.cfg.sync_mode == "unsynced":
                    raise
                plain_error = True
        if not want_sync:
            return plain
        try:
            synced = self._synced_alternatives(rec, tr, ev, t_l, depth)
        except recoverable:
            # the synchronized continuation blew up; the plain one covers
            # the same trajectories on its own
            synced = None
        if synced is None:
            if plain is not None:
                return plain
            if plain_error:
                raise HitWindowError(
                    "both synchronized and unsynchronized continuations "
                    "failed after a wide guard intersection")
            return self.explore(rec.target, X0n, depth + 1)
        if self.cfg.sync_mode == "synced" or plain is None:
            return synced
        for alt in plain:
            alt.tag = _join_tag(alt.tag, f"raw{rec.order}")
        return plain + synced

    def _synced_alternatives(self, rec, tr, ev, t_l, depth):
        """Per-step time synchronization at the hit-window end.

        Each hit-window step set is sliced on the guard individually (its
        clock width is only one step, so the slice stays tight), jumped,
        propagated in the target location up to t_l, and sliced at clock
        t_l; the union of the slices is the synchronized restart set.  A
        window-wide intersection box would decorrelate the clock from the
        state and smear fast coordinates by the whole window.  Returns None
        (fall back to unsynced) when a guard is hit while catching up or a
        slice run cannot reach t_l.
        """
        loc_idx = rec.target
        lo = hi = None
        pre_entries = []
        for z in ev["hit_sets"]:
            cz = intersect_hyperplane(
                ConstrainedZonotope.from_zonotope(z), tr.guard)
            S = prune_with_invariant(cz, tr.side_conditions)
            if is_empty(S):
                continue
            S = apply_jump(tr, S)
            c_lo, c_hi = clock_projection(S, self.clock)
            if c_lo > t_l + 1e-12:
                continue
            entries = [ReachEntry(loc_idx, S, S, (c_lo, c_hi))]
            span = t_l - c_lo
            if span > 1e-15:
                n_steps = max(1, int(np.ceil(span / self.cfg.dt)))
                dt_s = span / n_steps
                try:
                    sub_entries, sub_events = self.propagate_in_location(
                        loc_idx, S, dt_s, t_l + 0.5 * dt_s)
                except HitWindowError:
                    return None
                if sub_events:
                    return None
                if (not sub_entries
                        or sub_entries[-1].clock_interval[1] < t_l - 1e-12):
                    # left the location before catching up: cannot certify
                    return None
                entries += sub_entries
                pre_entries += sub_entries
            try:
                R_i = sync_time(entries, t_l, self.clock)
            except SyncError:
                return None
            h = interval_hull(R_i)
            lo = h.lower if lo is None else np.minimum(lo, h.lower)
            hi = h.upper if hi is None else np.maximum(hi, h.upper)
        if lo is None:
            return None
        R_tl = Zonotope.from_box(0.5 * (lo + hi), 0.5 * (hi - lo))
        sub = self.explore(loc_idx, R_tl, depth + 1)
        out = []
        for alt in sub:
            out.append(_Alt(pre_entries + alt.entries, alt.intersections,
                            _join_tag(alt.tag, f"sync{rec.order}")))
        return out


def _join_tag(tag, piece):
    return piece if not tag else f"{piece}+{tag}"


def _measure(z: Zonotope) -> float:
    from .sets import volume_measure

    return volume_measure(z)
