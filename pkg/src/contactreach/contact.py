"""Delayed robot-contact model: a four-location hybrid automaton for a
point mass under impedance control hitting a compliant surface, with
first-order Pade delay states and a clock.

State vector: [z, dz, z_hat, dz_hat, t] — position, velocity, their
delayed measurements, and the clock.  Input vector: [z_d, dz_d, ddz_d],
the delayed desired trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hybrid import HybridAutomaton, Location, Transition
from .inputs import InputModel
from .sets import HalfSpace, Hyperplane, Zonotope

# mass -> tuned impedance damping from the reference controller
DAMPING_TABLE = {1.5: 80.0, 4.5: 135.0, 8.0: 180.0}

IDX_Z, IDX_DZ, IDX_ZH, IDX_DZH, IDX_CLOCK, IDX_W = 0, 1, 2, 3, 4, 5
DIM = 6

# generator column of the constant input-uncertainty zonotope U_u; its
# coefficient is carried as the extra state w in [-1, 1] with zero
# dynamics so the per-trajectory constancy is tracked exactly
INPUT_UNCERTAINTY_GEN = np.array([5e-5, 0.0, 0.0])

L_FREE, L_CONTACT, L_REACT_CONTACT, L_REACT_FREE = 0, 1, 2, 3
LOCATION_NAMES = ("free", "contact", "reaction-contact", "reaction-free")
CONTACT_LOCATIONS = (L_CONTACT, L_REACT_CONTACT)

TRANSIENT_LIMIT = 280.0   # N, allowed during the first contact window
QUASI_STATIC_LIMIT = 120.0  # N, allowed after the window
TRANSIENT_WINDOW = 0.5    # s

# graze gating: surface crossings slower than GRAZE_SPEED are kept in the
# source location instead of branching; such a trajectory overshoots the
# surface by at most GRAZE_SPEED^2 / (2 GRAZE_PULL) before the controller
# (pull-back acceleration of at least GRAZE_PULL near the surface) returns
# it, and the dynamics mismatch over that band is absorbed by the location
# slack disturbance
GRAZE_SPEED = 1e-3   # m/s
GRAZE_PULL = 2.0     # m/s^2


def damping_for_mass(m: float, k_t: float = 1000.0) -> float:
    return DAMPING_TABLE.get(float(m), 2.0 * np.sqrt(m * k_t))


@dataclass(frozen=True)
class ContactParams:
    m: float = 1.5            # effective mass, kg
    k_t: float = 1000.0       # impedance stiffness, N/m
    d_t: float | None = None  # impedance damping, N s/m (table / 2 sqrt(m k_t))
    d_r: float = 380.0        # collision-reaction damping, N s/m
    f_t: float = 100.0        # detection force threshold, N
    k_e: float = 75000.0      # contact stiffness, N/m
    d_e: float = 0.0          # contact damping, N s/m
    l: float = 0.0            # surface level, m
    d1: float = 0.0013        # input (controller-to-robot) delay, s
    d2: float = 0.0019        # state round-trip delay, s

    def __post_init__(self):
        if self.m <= 0 or self.d2 <= 0:
            raise ValueError("mass and state delay must be positive")
        for name in ("k_t", "d_r", "f_t", "k_e", "d_e", "d1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.d_t is None:
            object.__setattr__(self, "d_t", damping_for_mass(self.m, self.k_t))
        elif self.d_t < 0:
            raise ValueError("d_t must be nonnegative")


@dataclass(frozen=True)
class TrajectorySpec:
    impact_speed: float       # v, m/s
    impact_time: float = 0.1  # s
    stop_position: float = -0.06  # m
    sample_rate: float = 1000.0   # Hz
    horizon: float = 0.8      # s

    def __post_init__(self):
        if self.impact_speed <= 0:
            raise ValueError("impact speed must be positive")
        if self.stop_position >= 0:
            raise ValueError("stop position must be below the surface")


def _assemble(A1, A2, B1, b_f, d2):
    """Full 5-state flow from the 2x2 physical blocks and the delay rows."""
    A = np.zeros((DIM, DIM))
    A[:2, :2] = A1
    A[:2, 2:4] = A2
    A[2:4, :2] = (2.0 / d2) * np.eye(2) - A1
    A[2:4, 2:4] = -(2.0 / d2) * np.eye(2) - A2
    B = np.zeros((DIM, 3))
    B[:2] = B1
    B[2:4] = -B1
    # the constant uncertainty acts like an extra input column scaled by w
    A[:2, IDX_W] = B1 @ INPUT_UNCERTAINTY_GEN
    A[2:4, IDX_W] = -B1 @ INPUT_UNCERTAINTY_GEN
    b = np.zeros(DIM)
    b[:2] = b_f
    b[2:4] = -b_f
    b[IDX_CLOCK] = 1.0
    from .linear import AffineFlow

    return AffineFlow(A, B, b)


def _blocks(p: ContactParams):
    free = np.array([[0.0, 1.0], [0.0, 0.0]])
    contact = np.array([[0.0, 1.0], [-p.k_e / p.m, -p.d_e / p.m]])
    imped = np.array([[0.0, 0.0], [-p.k_t / p.m, -p.d_t / p.m]])
    react = np.array([[0.0, 0.0], [0.0, -p.d_r / p.m]])
    B_imp = np.array([[0.0, 0.0, 0.0], [p.k_t / p.m, p.d_t / p.m, 1.0]])
    B_zero = np.zeros((2, 3))
    b_free = np.zeros(2)
    b_contact = np.array([0.0, p.k_e * p.l / p.m])
    return free, contact, imped, react, B_imp, B_zero, b_free, b_contact


def surface_guard(p: ContactParams) -> Hyperplane:
    n = np.zeros(DIM)
    n[IDX_Z] = 1.0
    return Hyperplane(n, p.l)


def force_guard(p: ContactParams) -> Hyperplane:
    """Delayed contact force hits the threshold:
    -k_e (z_hat - l) - d_e dz_hat = f_t."""
    n = np.zeros(DIM)
    n[IDX_ZH] = -p.k_e
    n[IDX_DZH] = -p.d_e
    return Hyperplane.normalized(n, p.f_t - p.k_e * p.l)


def _velocity_side(sign: float) -> HalfSpace:
    """sign=+1 keeps dz <= 0 (approaching), sign=-1 keeps dz >= 0."""
    n = np.zeros(DIM)
    n[IDX_DZ] = sign
    return HalfSpace(n, 0.0)


def _z_halfspace(p: ContactParams, above: bool) -> HalfSpace:
    n = np.zeros(DIM)
    n[IDX_Z] = -1.0 if above else 1.0
    return HalfSpace(n, -p.l if above else p.l)


def _force_halfspace(p: ContactParams) -> HalfSpace:
    n = np.zeros(DIM)
    n[IDX_ZH] = -p.k_e
    n[IDX_DZH] = -p.d_e
    return HalfSpace(n, p.f_t - p.k_e * p.l)


def _graze_slack(p: ContactParams) -> np.ndarray:
    """Disturbance rate radius covering the flow mismatch of gated grazes.

    A crossing slower than GRAZE_SPEED penetrates at most
    band = GRAZE_SPEED^2 / (2 GRAZE_PULL) beyond the surface, where the
    contact force differs from the modelled flow by at most
    k_e * band + d_e * GRAZE_SPEED; the mismatch enters the acceleration
    rows (dz and its delayed copy) divided by the mass."""
    band = GRAZE_SPEED ** 2 / (2.0 * GRAZE_PULL)
    s = (p.k_e * band + p.d_e * GRAZE_SPEED) / p.m
    slack = np.zeros(DIM)
    slack[IDX_DZ] = s
    slack[IDX_DZH] = s
    return slack


def build_automaton(p: ContactParams) -> HybridAutomaton:
    free, contact, imped, react, B_imp, B_zero, b_free, b_contact = _blocks(p)
    z_eq = surface_guard(p)
    f_eq = force_guard(p)
    approach = _velocity_side(+1.0)
    depart = _velocity_side(-1.0)
    gate = GRAZE_SPEED
    slack = _graze_slack(p)

    loc_free = Location(
        flow=_assemble(free, imped, B_imp, b_free, p.d2),
        invariant=(_z_halfspace(p, above=True),),
        transitions=(Transition.identity_jump(z_eq, (approach,),
                                              L_CONTACT, "touch", gate),),
        name=LOCATION_NAMES[L_FREE], slack=slack)
    loc_contact = Location(
        flow=_assemble(contact, imped, B_imp, b_contact, p.d2),
        invariant=(_z_halfspace(p, above=False), _force_halfspace(p)),
        transitions=(
            Transition.identity_jump(z_eq, (depart,), L_FREE, "release",
                                     gate),
            Transition.identity_jump(f_eq, (), L_REACT_CONTACT, "detect"),
        ),
        name=LOCATION_NAMES[L_CONTACT], slack=slack)
    loc_react_contact = Location(
        flow=_assemble(contact, react, B_zero, b_contact, p.d2),
        invariant=(_z_halfspace(p, above=False),),
        transitions=(Transition.identity_jump(z_eq, (depart,),
                                              L_REACT_FREE, "retract",
                                              gate),),
        name=LOCATION_NAMES[L_REACT_CONTACT], slack=slack)
    loc_react_free = Location(
        flow=_assemble(free, react, B_zero, b_free, p.d2),
        invariant=(_z_halfspace(p, above=True),),
        transitions=(Transition.identity_jump(z_eq, (approach,),
                                              L_REACT_CONTACT, "recontact",
                                              gate),),
        name=LOCATION_NAMES[L_REACT_FREE], slack=slack)
    return HybridAutomaton(
        (loc_free, loc_contact, loc_react_contact, loc_react_free), IDX_CLOCK)


def generate_trajectory(spec: TrajectorySpec) -> np.ndarray:
    """(k, 3) samples [z_d, dz_d, ddz_d] of the two-segment profile.

    Constant acceleration from rest at 0.05 v down to the surface, reaching
    speed -v at the impact time, then constant deceleration to a stop at
    the stop position; parked afterwards.  C1 at the joints.
    """
    v = spec.impact_speed
    t_imp = spec.impact_time
    a1 = v / t_imp
    z0 = 0.5 * a1 * t_imp ** 2
    depth = -spec.stop_position
    a2 = v ** 2 / (2.0 * depth)
    t_stop = t_imp + v / a2

    k = int(round(spec.horizon * spec.sample_rate)) + 1
    t = np.arange(k) / spec.sample_rate
    z = np.empty(k)
    dz = np.empty(k)
    ddz = np.empty(k)

    seg1 = t < t_imp
    z[seg1] = z0 - 0.5 * a1 * t[seg1] ** 2
    dz[seg1] = -a1 * t[seg1]
    ddz[seg1] = -a1

    seg2 = (~seg1) & (t < t_stop)
    s = t[seg2] - t_imp
    z[seg2] = -v * s + 0.5 * a2 * s ** 2
    dz[seg2] = -v + a2 * s
    ddz[seg2] = a2

    seg3 = t >= t_stop
    z[seg3] = spec.stop_position
    dz[seg3] = 0.0
    ddz[seg3] = 0.0
    return np.column_stack([z, dz, ddz])


def build_input_uncertainty() -> Zonotope:
    """The input-uncertainty set U_u in input space."""
    return Zonotope(np.zeros(3), INPUT_UNCERTAINTY_GEN.reshape(-1, 1))


def build_input_model(spec: TrajectorySpec, p: ContactParams) -> InputModel:
    # the uncertainty is carried exactly by the w state, so the input model
    # itself is deterministic
    return InputModel(generate_trajectory(spec), 1.0 / spec.sample_rate,
                      p.d1, Zonotope.point(np.zeros(3)))


def build_initial_set(samples: np.ndarray) -> Zonotope:
    """First trajectory sample replicated into the delayed states; fixed
    uncertainty radii; clock exactly zero; w spanning [-1, 1]."""
    z0, dz0 = samples[0, 0], samples[0, 1]
    center = np.array([z0, dz0, z0, dz0, 0.0, 0.0])
    return Zonotope.from_box(center, [1e-4, 2e-3, 1e-4, 2e-3, 0.0, 1.0])


def force_row(p: ContactParams) -> np.ndarray:
    row = np.zeros(DIM)
    row[IDX_Z] = -p.k_e
    row[IDX_DZ] = -p.d_e
    return row


def force_from_state(obj, p: ContactParams, location: int):
    """Contact force f_e; zero in the free locations, affine in the
    others.  Returns a float for points, an (lo, hi) tuple for sets."""
    if location not in CONTACT_LOCATIONS:
        return (0.0, 0.0) if isinstance(obj, Zonotope) else 0.0
    row = force_row(p)
    offset = p.k_e * p.l
    if isinstance(obj, Zonotope):
        lo, hi = obj.support_interval(row)
        return lo + offset, hi + offset
    x = np.asarray(obj, dtype=float).reshape(-1)
    return float(row @ x) + offset


@dataclass(frozen=True)
class SafetyLimits:
    transient: float = TRANSIENT_LIMIT
    quasi_static: float = QUASI_STATIC_LIMIT
    window: float = TRANSIENT_WINDOW


@dataclass(frozen=True)
class BranchSafety:
    tag: str
    status: str            # "safe" | "violated" | "unknown"
    contact_start: float | None
    peak_force: float
    first_violation_time: float | None


@dataclass(frozen=True)
class Verdict:
    verdict: str           # "SAFE" | "UNSAFE" | "UNKNOWN"
    branches: tuple

    @property
    def exit_code(self) -> int:
        return {"SAFE": 0, "UNSAFE": 1, "UNKNOWN": 1}[self.verdict]


def _branch_safety(branch, p: ContactParams, limits: SafetyLimits):
    start = None
    for rec in branch.intersections:
        if rec.transition_name == "touch":
            start = rec.t_window[0]
            break
    peak = 0.0
    safe = True
    definite = False
    first_violation = None
    if start is not None:
        cutoff = start + limits.window
        for e in branch.entries:
            if e.location not in CONTACT_LOCATIONS:
                continue
            f_lo, f_hi = force_from_state(e.time_interval_set, p, e.location)
            peak = max(peak, f_hi)
            t0, t1 = e.clock_interval
            # every limit whose regime this entry can touch must hold
            limit = limits.quasi_static if t1 > cutoff else limits.transient
            if f_hi > limit:
                safe = False
                if first_violation is None:
                    first_violation = t0
            # a definite violation needs the lower bound above the limit
            # for a whole-regime entry
            if t1 <= cutoff and f_lo > limits.transient:
                definite = True
            if t0 >= cutoff and f_lo > limits.quasi_static:
                definite = True
    status = "safe" if safe else ("violated" if definite else "unknown")
    return BranchSafety(branch.tag, status, start, peak, first_violation)


def unsafe_check(branches, p: ContactParams,
                 limits: SafetyLimits = SafetyLimits()) -> Verdict:
    """Verdict over all retained branches: SAFE when every branch's force
    envelope respects both limits, UNSAFE when every branch definitely
    violates them, UNKNOWN otherwise."""
    reports = tuple(_branch_safety(b, p, limits) for b in branches)
    if all(r.status == "safe" for r in reports):
        verdict = "SAFE"
    elif reports and all(r.status == "violated" for r in reports):
        verdict = "UNSAFE"
    else:
        verdict = "UNKNOWN"
    return Verdict(verdict, reports)
