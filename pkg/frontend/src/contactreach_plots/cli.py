"""Command-line entry points.

  plot-forces FILES... --out DIR      force-envelope panel figure
  plot-sets DUMP --axes i j --out F   zonotope projection of a set dump
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import (
    QUASI_STATIC_LIMIT,
    TRANSIENT_LIMIT,
    plot_force_envelopes,
    plot_state_projection,
)
from .reader import ParseError, read_dump, read_envelope

STATE_NAMES = ("z", "dz", "z_hat", "dz_hat", "clock", "w")


def main_forces(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot-forces",
        description="Render reachable contact-force envelopes from "
                    "exported envelope CSV files.")
    ap.add_argument("files", nargs="+", help="envelope CSV files")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--transient-limit", type=float, default=TRANSIENT_LIMIT)
    ap.add_argument("--quasi-static-limit", type=float,
                    default=QUASI_STATIC_LIMIT)
    args = ap.parse_args(argv)
    try:
        cases = [read_envelope(path) for path in args.files]
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fig = plot_force_envelopes(
        cases, limits=(args.transient_limit, args.quasi_static_limit))
    os.makedirs(args.out, exist_ok=True)
    target = os.path.join(args.out, "forces.png")
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")
    return 0


def main_sets(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot-sets",
        description="Draw 2-D zonotope projections of a reach-set dump.")
    ap.add_argument("dump", help="set dump file")
    ap.add_argument("--axes", nargs=2, type=int, default=(4, 0),
                    metavar=("I", "J"), help="state indices to project on")
    ap.add_argument("--out", required=True, help="output image file")
    args = ap.parse_args(argv)
    try:
        branches = read_dump(args.dump)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    i, j = args.axes
    names = None
    if max(i, j) < len(STATE_NAMES):
        names = (STATE_NAMES[i], STATE_NAMES[j])
    try:
        fig = plot_state_projection(branches, (i, j), names)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = os.path.dirname(args.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0
