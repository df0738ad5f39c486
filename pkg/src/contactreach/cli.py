"""Command-line front end.

Verbs:
  run    one scenario -> envelope CSV, metadata, optional set dump
  grid   (mass x speed) sweep -> per-cell exports + aggregate CSV
  check  Monte-Carlo containment suite against the computed sets
  bench  guard-intersection measure/time tables across methods

Exit codes: 0 verified safe / success, 1 not verified safe, 2 error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import export
from .scenario import (
    DEFAULT_MASSES,
    DEFAULT_SPEEDS,
    Scenario,
    load_scenario,
    run_grid,
    run_scenario,
)

EXIT_SAFE = 0
EXIT_NOT_VERIFIED = 1
EXIT_ERROR = 2


def _load(args) -> Scenario:
    s = load_scenario(args.scenario) if args.scenario else Scenario()
    if getattr(args, "method", None):
        s = replace(s, method=args.method)
    return s


def _export_run(out, tag, result, dump: bool):
    os.makedirs(out, exist_ok=True)
    p = result.scenario.params()
    export.write_envelope_csv(os.path.join(out, f"{tag}_envelope.csv"),
                              result.branches, p)
    export.write_metadata(os.path.join(out, f"{tag}_metadata.txt"), result)
    if dump:
        export.write_dump(os.path.join(out, f"{tag}_sets.txt"),
                          result.branches)


def cmd_run(args) -> int:
    s = _load(args)
    result = run_scenario(s)
    if args.out:
        _export_run(args.out, "run", result, args.dump)
    print(f"verdict: {result.verdict.verdict}")
    for r in result.verdict.branches:
        print(f"  branch {r.tag}: {r.status}, peak force {r.peak_force:.1f} N")
    return result.exit_code


def cmd_grid(args) -> int:
    base = _load(args)
    masses = [float(x) for x in args.masses.split(",")]
    speeds = [float(x) for x in args.speeds.split(",")]
    cells = run_grid(masses, speeds, base.method, base)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        export.write_grid_csv(os.path.join(args.out, "grid.csv"), cells)
        for cell in cells:
            if cell["failed"]:
                continue
            tag = f"m{cell['mass']:g}_v{cell['speed']:g}"
            _export_run(args.out, tag, cell["result"], args.dump)
    failed = [c for c in cells if c["failed"]]
    for cell in cells:
        status = (cell["error"] if cell["failed"]
                  else cell["result"].verdict.verdict)
        print(f"m={cell['mass']:g} v={cell['speed']:g}: {status}")
    if failed:
        return EXIT_ERROR
    if all(c["result"].verdict.verdict == "SAFE" for c in cells):
        return EXIT_SAFE
    return EXIT_NOT_VERIFIED


def cmd_check(args) -> int:
    from .contact import build_automaton, build_initial_set, build_input_model
    from .simulate import containment_test, simulate_batch

    s = _load(args)
    if args.samples:
        s = replace(s, samples=args.samples)
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    result = run_scenario(s)
    p = s.params()
    ha = build_automaton(p)
    im = build_input_model(s.trajectory_spec(), p)
    X0 = build_initial_set(im.samples)
    rng = np.random.default_rng(s.seed)
    batch = simulate_batch(ha, X0, 0, im, s.samples, s.dt / 20.0,
                           s.horizon, rng)
    report = containment_test(result.branches, batch)
    print(f"checked {report['nChecked']} states, "
          f"{report['nViolations']} outside the reachable sets "
          f"(pass rate {report['passRate']:.6f})")
    for i, t in report["violations"][:20]:
        print(f"  trajectory {i} at t = {t:.6f}")
    return EXIT_SAFE if report["nViolations"] == 0 else EXIT_NOT_VERIFIED


def cmd_bench(args) -> int:
    methods = args.methods.split(",")
    masses = [float(x) for x in args.masses.split(",")]
    speeds = [float(x) for x in args.speeds.split(",")]
    base = _load(args)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for method in methods:
        cells = run_grid(masses, speeds, method, base)
        for cell in cells:
            if cell["failed"]:
                rows.append((cell["mass"], cell["speed"], method, None,
                             cell["error"]))
            else:
                rows.append((cell["mass"], cell["speed"], method,
                             cell["result"], ""))
    with open(os.path.join(args.out, "bench.csv"), "w") as fh:
        fh.write("mass,speed,method,order,transition,measure_x1e3,"
                 "wall_time_s,error\n")
        for m, v, method, res, err in rows:
            if res is None:
                fh.write(f"{m:g},{v:g},{method},,,,,\"{err}\"\n")
                continue
            for rec in res.records:
                fh.write(f"{m:g},{v:g},{method},{rec.order},"
                         f"{rec.transition_name},{rec.measure * 1e3:.6g},"
                         f"{rec.wall_time:.6g},\n")
    print(f"wrote {os.path.join(args.out, 'bench.csv')}")
    return EXIT_SAFE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="contactreach",
        description="Set-based verification of robotic contact forces.")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="verify one scenario")
    p.add_argument("--scenario", help="flat key = value scenario file")
    p.add_argument("--method", choices=("geometric", "mapping", "scaling",
                                        "tsm", "trinal"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump", action="store_true", help="write full set dump")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="verify a mass x speed grid")
    p.add_argument("--scenario")
    p.add_argument("--method", default="trinal")
    p.add_argument("--masses", default=",".join(str(m) for m in DEFAULT_MASSES))
    p.add_argument("--speeds", default=",".join(str(v) for v in DEFAULT_SPEEDS))
    p.add_argument("--out")
    p.add_argument("--dump", action="store_true")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("check", help="Monte-Carlo containment suite")
    p.add_argument("--scenario")
    p.add_argument("--method")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="intersection measure/time tables")
    p.add_argument("--scenario")
    p.add_argument("--method")
    p.add_argument("--methods", default="geometric,mapping,scaling,tsm,trinal")
    p.add_argument("--masses", default="1.5,4.5,8.0")
    p.add_argument("--speeds", default="0.35")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
