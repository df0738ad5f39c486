"""Parsers for the contactreach export formats.

Envelope CSV: one row per reach entry with a time window, location id,
branch id, per-state interval bounds, and a contact-force interval.

Set dump: line-oriented zonotope sequences,
    branch <id> <tag> / entry <loc> <t_lo> <t_hi> / c ... / g ... / end
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

ENVELOPE_HEADER = (
    "t_lo,t_hi,location,branch,"
    "z_lo,z_hi,dz_lo,dz_hi,zh_lo,zh_hi,dzh_lo,dzh_hi,clock_lo,clock_hi,"
    "w_lo,w_hi,force_lo,force_hi")
_N_COLS = len(ENVELOPE_HEADER.split(","))

_CASE_RE = re.compile(r"m(?P<mass>[0-9.]+)_v(?P<speed>[0-9.]+)")


class ParseError(ValueError):
    """Malformed export file; message carries path and line number."""


@dataclass
class EnvelopeEntry:
    t_lo: float
    t_hi: float
    location: int
    branch: int
    force_lo: float
    force_hi: float
    states: np.ndarray  # (6, 2) lower/upper per state column


@dataclass
class EnvelopeSeries:
    """All entries of one exported case plus its (mass, speed) label."""

    label: str
    entries: list[EnvelopeEntry] = field(default_factory=list)
    mass: float | None = None
    speed: float | None = None

    @property
    def branches(self) -> list[int]:
        return sorted({e.branch for e in self.entries})

    def branch_entries(self, branch: int) -> list[EnvelopeEntry]:
        return sorted((e for e in self.entries if e.branch == branch),
                      key=lambda e: e.t_lo)


def case_label(path) -> tuple[str, float | None, float | None]:
    """Derive the (mass, speed) label from the export file name."""
    stem = os.path.basename(str(path))
    m = _CASE_RE.search(stem)
    if m:
        mass, speed = float(m.group("mass")), float(m.group("speed"))
        return f"m = {mass:g} kg, v = {speed:g} m/s", mass, speed
    return stem.split(".")[0], None, None


def read_envelope(path) -> EnvelopeSeries:
    label, mass, speed = case_label(path)
    series = EnvelopeSeries(label, mass=mass, speed=speed)
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != ENVELOPE_HEADER:
            raise ParseError(f"{path}:1: not an envelope CSV "
                             f"(unexpected header {header[:40]!r}...)")
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            cols = raw.rstrip("\n").split(",")
            if len(cols) != _N_COLS:
                raise ParseError(f"{path}:{lineno}: expected {_N_COLS} "
                                 f"columns, got {len(cols)}")
            try:
                vals = [float(x) for x in cols]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            states = np.array(vals[4:16]).reshape(6, 2)
            entry = EnvelopeEntry(vals[0], vals[1], int(vals[2]),
                                  int(vals[3]), vals[16], vals[17], states)
            if entry.force_lo > entry.force_hi or entry.t_lo > entry.t_hi:
                raise ParseError(f"{path}:{lineno}: interval bounds "
                                 "out of order")
            series.entries.append(entry)
    return series


def read_dump(path):
    """List of {tag, entries: [{location, t_lo, t_hi, c, G}]}."""
    branches = []
    entry = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            kind = parts[0]
            try:
                if kind == "branch":
                    branches.append({"tag": " ".join(parts[2:]),
                                     "entries": []})
                elif kind == "entry":
                    entry = {"location": int(parts[1]),
                             "t_lo": float(parts[2]),
                             "t_hi": float(parts[3]), "c": None, "g": []}
                elif kind == "c":
                    entry["c"] = np.array([float(x) for x in parts[1:]])
                elif kind == "g":
                    entry["g"].append([float(x) for x in parts[1:]])
                elif kind == "end":
                    G = (np.array(entry["g"]).T if entry["g"]
                         else np.zeros((entry["c"].shape[0], 0)))
                    entry["G"] = G
                    del entry["g"]
                    branches[-1]["entries"].append(entry)
                    entry = None
                else:
                    raise ParseError(
                        f"{path}:{lineno}: unknown record {kind!r}")
            except (TypeError, AttributeError, IndexError):
                raise ParseError(f"{path}:{lineno}: record out of "
                                 "sequence") from None
    return branches
