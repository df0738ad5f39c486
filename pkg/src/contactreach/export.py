"""Deterministic text export of run results: force-envelope CSV, run
metadata, and a line-oriented full set dump with a matching reader.

All numbers are written with 17 significant digits so re-parsed values are
bit-identical to the originals.
"""

from __future__ import annotations

import numpy as np

from .contact import force_from_state
from .sets import Zonotope

FMT = "%.17g"

ENVELOPE_HEADER = (
    "t_lo,t_hi,location,branch,"
    "z_lo,z_hi,dz_lo,dz_hi,zh_lo,zh_hi,dzh_lo,dzh_hi,clock_lo,clock_hi,"
    "w_lo,w_hi,force_lo,force_hi")


def _f(x: float) -> str:
    return FMT % x


def write_envelope_csv(path, branches, params) -> None:
    """One row per reach entry: time window, location, branch id, per-state
    interval bounds, and the contact-force interval."""
    from .sets import interval_hull

    with open(path, "w") as fh:
        fh.write(ENVELOPE_HEADER + "\n")
        for bid, br in enumerate(branches):
            for e in br.entries:
                h = interval_hull(e.time_interval_set)
                f_lo, f_hi = force_from_state(e.time_interval_set, params,
                                              e.location)
                cols = [_f(e.clock_interval[0]), _f(e.clock_interval[1]),
                        str(e.location), str(bid)]
                for i in range(h.lower.shape[0]):
                    cols.append(_f(h.lower[i]))
                    cols.append(_f(h.upper[i]))
                cols.append(_f(f_lo))
                cols.append(_f(f_hi))
                fh.write(",".join(cols) + "\n")


def write_metadata(path, result, extra=None) -> None:
    """Structured text: scenario echo, verdict, intersections, timings."""
    from dataclasses import fields

    s = result.scenario
    with open(path, "w") as fh:
        fh.write("[scenario]\n")
        for f in fields(s):
            v = getattr(s, f.name)
            fh.write(f"{f.name} = {'none' if v is None else v}\n")
        fh.write("\n[result]\n")
        fh.write(f"verdict = {result.verdict.verdict}\n")
        fh.write(f"wall_time_s = {_f(result.wall_time)}\n")
        fh.write(f"branches = {len(result.branches)}\n")
        for r in result.verdict.branches:
            fh.write(f"branch {r.tag}: status={r.status} "
                     f"contact_start={r.contact_start} "
                     f"peak_force={_f(r.peak_force)}\n")
        fh.write("\n[intersections]\n")
        for rec in result.records:
            fh.write(f"order={rec.order} transition={rec.transition_name} "
                     f"source={rec.source} target={rec.target} "
                     f"method={rec.method} measure={_f(rec.measure)} "
                     f"t_window=[{_f(rec.t_window[0])},{_f(rec.t_window[1])}] "
                     f"wall_time={_f(rec.wall_time)}\n")
        if extra:
            fh.write("\n[extra]\n")
            for k, v in extra.items():
                fh.write(f"{k} = {v}\n")


def write_dump(path, branches) -> None:
    """Line-oriented full set dump.

    Layout per branch:
      branch <id> <tag>
      entry <location> <t_lo> <t_hi>
      c <n floats>            time-interval set center
      g <n floats>            one line per generator column
      end                     closes the entry
    """
    with open(path, "w") as fh:
        for bid, br in enumerate(branches):
            fh.write(f"branch {bid} {br.tag}\n")
            for e in br.entries:
                z = e.time_interval_set
                fh.write(f"entry {e.location} {_f(e.clock_interval[0])} "
                         f"{_f(e.clock_interval[1])}\n")
                fh.write("c " + " ".join(_f(x) for x in z.c) + "\n")
                for j in range(z.ngen):
                    fh.write("g " + " ".join(_f(x) for x in z.G[:, j]) + "\n")
                fh.write("end\n")


def read_dump(path):
    """Inverse of write_dump: list of {tag, entries: [{location, t_lo,
    t_hi, set: Zonotope}]}."""
    branches = []
    entry = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            kind = parts[0]
            if kind == "branch":
                branches.append({"tag": " ".join(parts[2:]), "entries": []})
            elif kind == "entry":
                entry = {"location": int(parts[1]), "t_lo": float(parts[2]),
                         "t_hi": float(parts[3]), "c": None, "g": []}
            elif kind == "c":
                entry["c"] = np.array([float(x) for x in parts[1:]])
            elif kind == "g":
                entry["g"].append([float(x) for x in parts[1:]])
            elif kind == "end":
                G = (np.array(entry["g"]).T if entry["g"]
                     else np.zeros((entry["c"].shape[0], 0)))
                branches[-1]["entries"].append({
                    "location": entry["location"], "t_lo": entry["t_lo"],
                    "t_hi": entry["t_hi"],
                    "set": Zonotope(entry["c"], G)})
                entry = None
            else:
                raise ValueError(f"{path}:{lineno}: unknown record {kind!r}")
    return branches


def write_grid_csv(path, cells) -> None:
    """Aggregate grid summary; intersection measures scaled by 1e3."""
    with open(path, "w") as fh:
        fh.write("mass,speed,method,failed,verdict,wall_time,"
                 "intersections,measures_x1e3,error\n")
        for cell in cells:
            res = cell["result"]
            if cell["failed"]:
                fh.write(f"{_f(cell['mass'])},{_f(cell['speed'])},"
                         f"{cell['method']},1,,,,,\"{cell['error']}\"\n")
                continue
            measures = ";".join(_f(r.measure * 1e3) for r in res.records)
            fh.write(f"{_f(cell['mass'])},{_f(cell['speed'])},"
                     f"{cell['method']},0,{res.verdict.verdict},"
                     f"{_f(res.wall_time)},{len(res.records)},"
                     f"{measures},\n")
