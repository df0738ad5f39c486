"""Conservative reachability for guard-scaled dynamics.

The scaled flow g(x) * (A x + B u + b) is quadratic in (x, u) because the
scaling factor g is affine, so the Lagrange remainder of a per-step
linearization is an exactly bounded quadratic form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import AffineFlow, Propagator, StepResult, propagate_step
from .sets import Zonotope, interval_hull, volume_measure


class LinearizationDomainError(RuntimeError):
    """Quadratic remainder dominates the linear part; shrink the step."""


@dataclass(frozen=True)
class QuadraticFlow:
    """Scaled dynamics g(x) * f(x, u) with g affine in x.

    g(x) = scale_gain * side * (scale_normal . x - scale_offset), clamped at
    zero on the far side of the guard; side is +1/-1 so that g is positive
    on the approach side.
    """

    base_flow: AffineFlow
    scale_normal: np.ndarray
    scale_offset: float
    scale_gain: float
    side: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scale_normal",
                           np.asarray(self.scale_normal, dtype=float).reshape(-1))

    def scale_at(self, x) -> float:
        raw = self.scale_gain * self.side * (
            float(self.scale_normal @ np.asarray(x, float)) - self.scale_offset)
        return max(raw, 0.0)


def scaled_flow_eval(qf: QuadraticFlow, x, u) -> np.ndarray:
    return qf.scale_at(x) * qf.base_flow.eval(x, u)


def reach_quadratic_step(qf: QuadraticFlow, R_k: Zonotope, U: Zonotope,
                         dt: float) -> StepResult:
    """One conservative-linearization step of the scaled dynamics.

    Linearizes at the set/input centers; the quadratic remainder is bounded
    over the interval hulls of the deviations and added as a time-varying
    disturbance box.
    """
    flow = qf.base_flow
    x_c = R_k.c
    u_c = U.c
    grad_g = qf.scale_gain * qf.side * qf.scale_normal
    w_star = qf.scale_at(x_c)
    f_star = flow.eval(x_c, u_c)

    A_lin = w_star * flow.A + np.outer(f_star, grad_g)
    B_lin = w_star * flow.B
    b_lin = w_star * f_star - A_lin @ x_c - B_lin @ u_c
    lin_flow = AffineFlow(A_lin, B_lin, b_lin)

    # exact quadratic remainder: dw * (A dx + B du)
    rx = interval_hull(R_k).radius
    ru = interval_hull(U).radius
    dw = float(np.abs(grad_g) @ rx)
    dv = np.abs(flow.A) @ rx + np.abs(flow.B) @ ru
    remainder = dw * dv
    # clamping error when the set straddles the guard: the quadratic model
    # keeps flowing past the guard while the clamped flow is zero there
    raw_lo = qf.scale_gain * qf.side * (
        float(qf.scale_normal @ x_c) - qf.scale_offset) - dw
    if raw_lo < 0.0:
        overhang = -raw_lo
        remainder = remainder + overhang * (np.abs(f_star) + dv)

    step = propagate_step(lin_flow, R_k, U, dt,
                          extra_disturbance_radius=remainder)
    lin_measure = volume_measure(step.time_point_set)
    rem_measure = volume_measure(Zonotope.from_box(np.zeros(flow.dim), remainder))
    if rem_measure > lin_measure and lin_measure > 0:
        raise LinearizationDomainError(
            f"remainder measure {rem_measure:.3e} exceeds linear part "
            f"{lin_measure:.3e}; reduce dt")
    return step
