"""Zonotope and constrained-zonotope set arithmetic.

All set values are immutable after construction; operations return new
objects and are safe to share across concurrent runs.
"""

from __future__ import annotations

import numpy as np

from .lp import LpProblem, solve_lp

NORMAL_TOL = 1e-12
EMPTY_TOL = 1e-9


class EmptySetType:
    """Explicit empty-set sentinel (singleton EMPTY_SET)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY_SET"


EMPTY_SET = EmptySetType()


def is_empty(obj) -> bool:
    return obj is EMPTY_SET


class Zonotope:
    """Z = { c + G beta : beta in [-1,1]^p }.

    c: (n,) center, G: (n,p) generator matrix.
    """

    def __init__(self, center, generators):
        c = np.asarray(center, dtype=float).reshape(-1)
        G = np.asarray(generators, dtype=float)
        if G.ndim == 1:
            G = G.reshape(-1, 1) if G.size else G.reshape(c.shape[0], 0)
        if G.shape[0] != c.shape[0]:
            raise ValueError(
                f"center length {c.shape[0]} != generator rows {G.shape[0]}")
        self.c = c
        self.G = G
        self.c.flags.writeable = False
        self.G.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def ngen(self) -> int:
        return self.G.shape[1]

    @property
    def order(self) -> float:
        return self.ngen / self.dim

    @classmethod
    def point(cls, x) -> "Zonotope":
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls(x, np.zeros((x.shape[0], 0)))

    @classmethod
    def from_box(cls, center, radius) -> "Zonotope":
        """Axis-aligned box with given center and per-axis radii."""
        center = np.asarray(center, dtype=float).reshape(-1)
        radius = np.asarray(radius, dtype=float).reshape(-1)
        keep = radius > 0
        G = np.diag(radius)[:, keep]
        return cls(center, G)

    @classmethod
    def from_interval(cls, iv: "IntervalVector") -> "Zonotope":
        return cls.from_box(iv.center, iv.radius)

    def support(self, direction) -> float:
        """Support function h(l) = max_{x in Z} l.x (exact)."""
        l = np.asarray(direction, dtype=float).reshape(-1)
        return float(l @ self.c + np.abs(l @ self.G).sum())

    def support_interval(self, direction) -> tuple[float, float]:
        """[min, max] of l.x over the set."""
        l = np.asarray(direction, dtype=float).reshape(-1)
        mid = float(l @ self.c)
        rad = float(np.abs(l @ self.G).sum())
        return mid - rad, mid + rad

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """(n, dim) array of points in the set."""
        beta = rng.uniform(-1.0, 1.0, size=(n, self.ngen))
        return self.c + beta @ self.G.T

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, ngen={self.ngen})"


class IntervalVector:
    """Axis-aligned box [lower, upper], lower <= upper componentwise."""

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("bound shape mismatch")
        if np.any(lo > hi + 1e-15 * np.maximum(1.0, np.abs(hi))):
            raise ValueError("lower bound exceeds upper bound")
        self.lower = lo
        self.upper = np.maximum(lo, hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def intersect(self, other: "IntervalVector"):
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        if np.any(lo > hi + 1e-12 * scale):
            return EMPTY_SET
        return IntervalVector(lo, np.maximum(lo, hi))

    def __repr__(self):
        return f"IntervalVector({self.lower}, {self.upper})"


class Hyperplane:
    """{ x : normal.x = offset } with a unit normal."""

    def __init__(self, normal, offset):
        n = np.asarray(normal, dtype=float).reshape(-1)
        nrm = np.linalg.norm(n)
        if abs(nrm - 1.0) > NORMAL_TOL:
            raise ValueError("hyperplane normal must be unit length")
        self.normal = n
        self.offset = float(offset)

    @classmethod
    def normalized(cls, normal, offset) -> "Hyperplane":
        """Build from an unnormalized (normal, offset) pair."""
        n = np.asarray(normal, dtype=float).reshape(-1)
        nrm = np.linalg.norm(n)
        if nrm == 0.0:
            raise ValueError("zero normal")
        return cls(n / nrm, float(offset) / nrm)

    def signed_dist(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float).reshape(-1)) - self.offset

    def __repr__(self):
        return f"Hyperplane(normal={self.normal}, offset={self.offset})"


class HalfSpace:
    """{ x : normal.x <= offset }; normal need not be unit length."""

    def __init__(self, normal, offset):
        self.normal = np.asarray(normal, dtype=float).reshape(-1)
        self.offset = float(offset)

    def __repr__(self):
        return f"HalfSpace(normal={self.normal}, offset={self.offset})"


class ConstrainedZonotope:
    """CZ = { c + G beta : A beta = b, beta in [-1,1]^p }."""

    def __init__(self, center, generators, constraint_matrix=None,
                 constraint_vector=None):
        c = np.asarray(center, dtype=float).reshape(-1)
        G = np.asarray(generators, dtype=float)
        if G.ndim == 1:
            G = G.reshape(-1, 1) if G.size else G.reshape(c.shape[0], 0)
        if G.shape[0] != c.shape[0]:
            raise ValueError("center/generator dimension mismatch")
        p = G.shape[1]
        if constraint_matrix is None:
            A = np.zeros((0, p))
            b = np.zeros(0)
        else:
            A = np.asarray(constraint_matrix, dtype=float)
            b = np.asarray(constraint_vector, dtype=float).reshape(-1)
            if A.shape != (b.shape[0], p):
                raise ValueError("constraint dimension mismatch")
        self.c = c
        self.G = G
        self.A = A
        self.b = b

    @classmethod
    def from_zonotope(cls, z: Zonotope) -> "ConstrainedZonotope":
        return cls(z.c, z.G)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def ngen(self) -> int:
        return self.G.shape[1]

    def is_feasible(self) -> bool:
        """One feasibility LP over the constraint polytope."""
        p = self.ngen
        if self.A.shape[0] == 0:
            return True
        prob = LpProblem(np.zeros(p), self.A, self.b,
                         -np.ones(p), np.ones(p))
        return solve_lp(prob) is not None


def minkowski_sum(a: Zonotope, b: Zonotope) -> Zonotope:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    return Zonotope(a.c + b.c, np.hstack([a.G, b.G]))


def linear_map(M, z: Zonotope) -> Zonotope:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.shape[1] != z.dim:
        raise ValueError(f"matrix columns {M.shape[1]} != set dim {z.dim}")
    return Zonotope(M @ z.c, M @ z.G)


def affine_map(M, z: Zonotope, offset) -> Zonotope:
    out = linear_map(M, z)
    return Zonotope(out.c + np.asarray(offset, dtype=float).reshape(-1), out.G)


def interval_hull(z: Zonotope) -> IntervalVector:
    r = np.abs(z.G).sum(axis=1)
    return IntervalVector(z.c - r, z.c + r)


def volume_measure(z: Zonotope) -> float:
    """n-th root of the interval-hull volume over all n axes."""
    w = interval_hull(z).width
    if np.any(w == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(w))))


def reduce_order(z: Zonotope, max_order: float) -> Zonotope:
    """Over-approximate z with at most max_order * dim generators.

    Keeps the longest generators and boxes the rest per-axis.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    n = z.dim
    target = int(np.floor(max_order * n))
    if z.ngen <= target:
        return z
    norms = np.linalg.norm(z.G, ord=1, axis=0)
    nkeep = max(target - n, 0)
    idx = np.argsort(norms)
    boxed, kept = idx[:z.ngen - nkeep], idx[z.ngen - nkeep:]
    box_rad = np.abs(z.G[:, boxed]).sum(axis=1)
    keep_nz = box_rad > 0
    Gbox = np.diag(box_rad)[:, keep_nz]
    return Zonotope(z.c, np.hstack([z.G[:, kept], Gbox]))


def enclose_hull(a: Zonotope, b: Zonotope) -> Zonotope:
    """Zonotope enclosing conv(a, b).

    Standard construction: midpoint center, half-sums of matched generators
    plus half-differences as fresh generators.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    pa, pb = a.ngen, b.ngen
    p = max(pa, pb)
    Ga = np.hstack([a.G, np.zeros((a.dim, p - pa))])
    Gb = np.hstack([b.G, np.zeros((b.dim, p - pb))])
    c = 0.5 * (a.c + b.c)
    Gsum = 0.5 * (Ga + Gb)
    Gdiff = np.hstack([0.5 * (a.c - b.c).reshape(-1, 1), 0.5 * (Ga - Gb)])
    return Zonotope(c, np.hstack([Gsum, Gdiff]))


def slice_zonotope(z: Zonotope, h: Hyperplane):
    """Zonotope on the hyperplane enclosing z's slice, keeping correlations.

    Eliminates the generator with the largest guard-normal component by
    substituting the plane equation; the result is the projection of z onto
    the plane along that generator, which contains the exact slice.  Unlike
    the constrained-zonotope slice this stays a plain zonotope whose
    remaining generators keep their cross-coordinate correlations.
    """
    n = np.asarray(h.normal, dtype=float).reshape(-1)
    a = z.G.T @ n if z.ngen else np.zeros(0)
    s = h.offset - float(n @ z.c)
    reach = np.abs(a).sum()
    scale = max(1.0, abs(h.offset))
    if reach <= 1e-14 * scale:
        return z if abs(s) <= 1e-9 * scale else EMPTY_SET
    if abs(s) > reach * (1.0 + 1e-12) + 1e-14 * scale:
        return EMPTY_SET
    j = int(np.argmax(np.abs(a)))
    gj = z.G[:, j]
    c = z.c + gj * (s / a[j])
    keep = np.ones(z.ngen, dtype=bool)
    keep[j] = False
    G = z.G[:, keep] - np.outer(gj / a[j], a[keep])
    return Zonotope(c, G)


def tighten_halfspace(z: Zonotope, hs: HalfSpace, passes: int = 3):
    """Zonotope superset of z cut by a half-space, keeping correlations.

    Interval constraint propagation on the generator coefficients: each
    beta_i interval is shrunk using the half-space row with the remaining
    coefficients at their current bounds, so every point of the true
    intersection is retained while the cross-coordinate correlations stay
    intact (unlike boxing the constrained-zonotope hull).  Returns z itself
    when the half-space is inactive and EMPTY_SET when provably disjoint.
    """
    n = np.asarray(hs.normal, dtype=float).reshape(-1)
    a = z.G.T @ n if z.ngen else np.zeros(0)
    r = hs.offset - float(n @ z.c)
    scale = max(1.0, abs(hs.offset))
    total = np.abs(a).sum()
    if total <= r:
        return z
    if -total > r + 1e-12 * scale:
        return EMPTY_SET
    lo = -np.ones(z.ngen)
    hi = np.ones(z.ngen)
    active = np.abs(a) > 1e-14 * max(1.0, total)
    for _ in range(passes):
        contrib_lo = np.minimum(a * lo, a * hi)
        rest_lo = contrib_lo.sum() - contrib_lo
        for i in np.flatnonzero(active):
            bound = (r - rest_lo[i]) / a[i]
            if a[i] > 0:
                hi[i] = min(hi[i], bound)
            else:
                lo[i] = max(lo[i], bound)
            if lo[i] > hi[i] + 1e-12:
                return EMPTY_SET
            lo[i] = min(lo[i], hi[i])
            hi[i] = max(hi[i], lo[i])
    mid = 0.5 * (lo + hi)
    rad = 0.5 * (hi - lo)
    return Zonotope(z.c + z.G @ mid, z.G * rad)


def contains_point(z: Zonotope, x, tol: float = 1e-9) -> bool:
    """True iff x = c + G beta for some beta in [-1,1]^p (feasibility LP)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != z.dim:
        raise ValueError("dimension mismatch")
    if not interval_hull(z).contains(x, tol=tol):
        return False
    if z.ngen == 0:
        return bool(np.allclose(x, z.c, atol=tol))
    p = z.ngen
    prob = LpProblem(np.zeros(p), z.G, x - z.c,
                     -(1 + tol) * np.ones(p), (1 + tol) * np.ones(p))
    return solve_lp(prob) is not None


def intersect_hyperplane(cz: ConstrainedZonotope, h: Hyperplane) -> ConstrainedZonotope:
    """Exact intersection of a constrained zonotope with a hyperplane.

    Appends one constraint row; may yield an (LP-detectable) empty set.
    """
    row = (h.normal @ cz.G).reshape(1, -1)
    rhs = np.array([h.offset - float(h.normal @ cz.c)])
    A = np.vstack([cz.A, row]) if cz.A.size else row
    b = np.concatenate([cz.b, rhs])
    return ConstrainedZonotope(cz.c, cz.G, A, b)


def intersect_halfspace(cz: ConstrainedZonotope, hs: HalfSpace) -> ConstrainedZonotope:
    """Intersection with a half-space via one slack generator."""
    mid = float(hs.normal @ cz.c)
    rad = float(np.abs(hs.normal @ cz.G).sum())
    lo = mid - rad
    if mid + rad <= hs.offset:
        return cz
    # slack in [0, offset - lo]: normal.x + slack = offset
    half = 0.5 * (hs.offset - lo)
    p = cz.ngen
    G = np.hstack([cz.G, np.zeros((cz.dim, 1))])
    row = np.concatenate([hs.normal @ cz.G, [half]]).reshape(1, -1)
    rhs = np.array([hs.offset - mid - half])
    if cz.A.size:
        A = np.hstack([cz.A, np.zeros((cz.A.shape[0], 1))])
        A = np.vstack([A, row])
        b = np.concatenate([cz.b, rhs])
    else:
        A, b = row, rhs
    return ConstrainedZonotope(cz.c, G, A, b)


def cz_interval_hull(cz: ConstrainedZonotope):
    """Tightest axis-aligned enclosure via 2n LPs; EMPTY_SET if infeasible."""
    n, p = cz.dim, cz.ngen
    if cz.A.shape[0] == 0:
        return interval_hull(Zonotope(cz.c, cz.G))
    if not cz.is_feasible():
        return EMPTY_SET
    lo = np.empty(n)
    hi = np.empty(n)
    box_lo, box_hi = -np.ones(p), np.ones(p)
    for i in range(n):
        g = cz.G[i]
        if not np.any(g):
            lo[i] = hi[i] = cz.c[i]
            continue
        try:
            res_min = solve_lp(LpProblem(g, cz.A, cz.b, box_lo, box_hi))
            res_max = solve_lp(LpProblem(-g, cz.A, cz.b, box_lo, box_hi))
        except RuntimeError:
            # solver gave up on a badly conditioned but feasible problem;
            # the unconstrained support bound is a sound fallback
            lo[i] = cz.c[i] - np.abs(g).sum()
            hi[i] = cz.c[i] + np.abs(g).sum()
            continue
        if res_min is None or res_max is None:
            return EMPTY_SET
        lo[i] = cz.c[i] + res_min.optimum
        hi[i] = cz.c[i] - res_max.optimum
    hi = np.maximum(lo, hi)
    return IntervalVector(lo, hi)
