"""Figure construction: force-envelope panels and set projections."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import project, vertices_2d
from .reader import EnvelopeSeries

TRANSIENT_LIMIT = 280.0
QUASI_STATIC_LIMIT = 120.0

LOCATION_COLORS = ("tab:blue", "tab:red", "tab:orange", "tab:green")
BRANCH_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                 "tab:purple", "tab:brown")


def _branch_polyline(entries):
    """Step-shaped (t, lo, hi) arrays covering the entry time windows."""
    t, lo, hi = [], [], []
    for e in entries:
        t += [e.t_lo, e.t_hi]
        lo += [e.force_lo, e.force_lo]
        hi += [e.force_hi, e.force_hi]
    return np.array(t), np.array(lo), np.array(hi)


def _panel(ax, series: EnvelopeSeries, limits=(TRANSIENT_LIMIT,
                                               QUASI_STATIC_LIMIT)):
    for k, bid in enumerate(series.branches):
        entries = series.branch_entries(bid)
        t, lo, hi = _branch_polyline(entries)
        color = BRANCH_COLORS[k % len(BRANCH_COLORS)]
        ax.fill_between(t, lo, hi, alpha=0.35, color=color, linewidth=0)
        ax.plot(t, hi, color=color, linewidth=0.8, label=f"branch {bid}")
    for limit in limits:
        ax.axhline(limit, linestyle="--", color="black", linewidth=0.8)
    ax.set_title(series.label, fontsize=9)
    ax.set_xlabel("t [s]", fontsize=8)
    ax.set_ylabel("force [N]", fontsize=8)
    ax.tick_params(labelsize=7)


def _grid_shape(cases):
    """Rows by mass, columns by speed when every case is labelled; a near
    square layout otherwise."""
    masses = sorted({s.mass for s in cases})
    speeds = sorted({s.speed for s in cases})
    if None not in masses and None not in speeds \
            and len(masses) * len(speeds) >= len(cases):
        pos = {(s.mass, s.speed): s for s in cases}
        return len(masses), len(speeds), \
            [[pos.get((m, v)) for v in speeds] for m in masses]
    ncols = int(np.ceil(np.sqrt(len(cases))))
    nrows = int(np.ceil(len(cases) / ncols))
    grid = [[None] * ncols for _ in range(nrows)]
    for k, s in enumerate(cases):
        grid[k // ncols][k % ncols] = s
    return nrows, ncols, grid


def plot_force_envelopes(cases, limits=(TRANSIENT_LIMIT,
                                        QUASI_STATIC_LIMIT)):
    """One shaded envelope panel per case, arranged on the (mass, speed)
    grid; dashed transient and quasi-static limit lines in every panel."""
    nrows, ncols, grid = _grid_shape(cases)
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.2 * ncols, 2.4 * nrows))
    for r in range(nrows):
        for c in range(ncols):
            ax = axes[r][c]
            series = grid[r][c]
            if series is None:
                ax.axis("off")
                continue
            _panel(ax, series, limits)
    fig.tight_layout()
    return fig


def plot_state_projection(branches, axes_pair, axis_names=None):
    """Zonotope outlines of every dump entry projected on two coordinates,
    colored by location."""
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    seen = set()
    for br in branches:
        for e in br["entries"]:
            c2, G2 = project(e["c"], e["G"], axes_pair)
            ring = vertices_2d(c2, G2)
            ring = np.vstack([ring, ring[:1]])
            loc = e["location"]
            label = f"location {loc}" if loc not in seen else None
            seen.add(loc)
            ax.plot(ring[:, 0], ring[:, 1], linewidth=0.6,
                    color=LOCATION_COLORS[loc % len(LOCATION_COLORS)],
                    label=label)
    i, j = axes_pair
    names = axis_names or (f"x[{i}]", f"x[{j}]")
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    if seen:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
