"""Exact 2-D zonotope projection outlines.

A zonotope projected onto two coordinates is again a zonotope; its
boundary is obtained by the standard construction of sorting the
(sign-normalized) generators by angle and walking them in order, which
is exact for any number of generators.
"""

from __future__ import annotations

import numpy as np

ZERO_TOL = 0.0


def project(c: np.ndarray, G: np.ndarray, axes) -> tuple[np.ndarray, np.ndarray]:
    i, j = axes
    n = c.shape[0]
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ValueError(f"invalid projection axes ({i}, {j}) for "
                         f"dimension {n}")
    idx = np.array([i, j])
    return c[idx], G[idx, :]


def vertices_2d(c2: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """Counter-clockwise vertex ring of the 2-D zonotope (c2, G2)."""
    c2 = np.asarray(c2, dtype=float)
    G2 = np.asarray(G2, dtype=float)
    keep = np.linalg.norm(G2, axis=0) > ZERO_TOL
    G2 = G2[:, keep]
    p = G2.shape[1]
    if p == 0:
        return c2[None, :]
    # normalize every generator into the upper half plane
    flip = (G2[1] < 0) | ((G2[1] == 0) & (G2[0] < 0))
    G2 = np.where(flip, -G2, G2)
    order = np.argsort(np.arctan2(G2[1], G2[0]))
    G2 = G2[:, order]
    # walk from the lowest vertex adding 2 g_k in angle order: this traces
    # half the boundary; the other half is the point reflection through c2
    start = c2 - G2.sum(axis=1)
    half = [start]
    for k in range(p):
        half.append(half[-1] + 2.0 * G2[:, k])
    half = np.array(half)
    other = 2.0 * c2 - half[1:-1]
    return np.vstack([half, other])


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a closed vertex ring."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
