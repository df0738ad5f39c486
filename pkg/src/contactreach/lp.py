"""Small dense LP solver for interval hulls, containment and emptiness checks.

Problems here are tiny (at most ~100 box-bounded variables with a handful of
equality rows), so this is a thin wrapper around scipy's HiGHS backend rather
than a hand-rolled simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog as _scipy_linprog

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class LpProblem:
    """minimize objective . x  s.t.  Aeq x = beq,  lo <= x <= hi."""

    objective: np.ndarray
    equality_matrix: np.ndarray
    equality_vector: np.ndarray
    box_lower: np.ndarray
    box_upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        lo = np.asarray(self.box_lower, dtype=float).reshape(-1)
        hi = np.asarray(self.box_upper, dtype=float).reshape(-1)
        A = np.asarray(self.equality_matrix, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1) if A.size else A.reshape(0, c.shape[0])
        b = np.asarray(self.equality_vector, dtype=float).reshape(-1)
        if lo.shape != c.shape or hi.shape != c.shape:
            raise ValueError("bound dimension mismatch")
        if np.any(lo > hi):
            raise ValueError("box_lower exceeds box_upper")
        if A.shape != (b.shape[0], c.shape[0]):
            raise ValueError("equality dimension mismatch")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "equality_matrix", A)
        object.__setattr__(self, "equality_vector", b)
        object.__setattr__(self, "box_lower", lo)
        object.__setattr__(self, "box_upper", hi)


@dataclass(frozen=True)
class LpSolution:
    optimum: float
    solution: np.ndarray
    dual_equality: np.ndarray | None = None
    dual_lower: np.ndarray | None = None
    dual_upper: np.ndarray | None = None


def solve_lp(problem: LpProblem) -> LpSolution | None:
    """Solve the LP; None signals infeasibility.

    Unboundedness cannot occur under finite box bounds.
    """
    nrows = problem.equality_matrix.shape[0]
    A_eq = problem.equality_matrix if nrows else None
    b_eq = problem.equality_vector if nrows else None
    row_scale = None
    if nrows:
        # normalize equality rows; badly scaled guard constraints otherwise
        # push HiGHS into "model status unknown" territory
        row_scale = np.maximum(np.abs(A_eq).max(axis=1), 1e-30)
        A_eq = A_eq / row_scale[:, None]
        b_eq = b_eq / row_scale
    bounds = np.column_stack([problem.box_lower, problem.box_upper])
    res = None
    for method in ("highs", "highs-ds", "highs-ipm"):
        res = _scipy_linprog(problem.objective, A_eq=A_eq, b_eq=b_eq,
                             bounds=bounds, method=method)
        if res.status == 2:
            return None
        if res.success:
            break
    if not res.success:
        raise RuntimeError(f"LP solver failure: {res.message}")
    dual_eq = dual_lo = dual_hi = None
    if hasattr(res, "eqlin") and nrows:
        dual_eq = np.asarray(res.eqlin.marginals, dtype=float) / row_scale
    if hasattr(res, "lower"):
        dual_lo = np.asarray(res.lower.marginals, dtype=float)
        dual_hi = np.asarray(res.upper.marginals, dtype=float)
    return LpSolution(float(res.fun), np.asarray(res.x, dtype=float),
                      dual_eq, dual_lo, dual_hi)
