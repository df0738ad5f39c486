"""Sweep the full (effective mass x collision speed) verification grid.

Runs the trinal pipeline over masses {1.5, 4.5, 8} kg and speeds
{0.1, 0.2, 0.35, 0.45, 0.55} m/s and prints a verdict table.  Heavier
and faster contacts push the transient force toward (and past) the
280 N limit; the m = 8 kg high-speed cells are genuinely unsafe.

Writes the aggregate CSV and per-cell envelope exports under out/grid/.

Usage: python demos/grid_sweep.py        (full grid, several minutes)
       python demos/grid_sweep.py quick  (single row, m = 1.5)
"""

import os
import sys

from contactreach.export import write_envelope_csv, write_grid_csv
from contactreach.scenario import DEFAULT_MASSES, DEFAULT_SPEEDS, run_grid

masses = (1.5,) if "quick" in sys.argv[1:] else DEFAULT_MASSES
speeds = DEFAULT_SPEEDS

cells = run_grid(masses, speeds)

print(f"\n{'':>8s}" + "".join(f"{v:>9.2f}" for v in speeds) + "  m/s")
for m in masses:
    row = [c for c in cells if c["mass"] == m]
    line = f"{m:5.1f} kg"
    for c in row:
        line += f"{'FAIL' if c['failed'] else c['result'].verdict.verdict:>9s}"
    print(line)

out = os.path.join("out", "grid")
os.makedirs(out, exist_ok=True)
write_grid_csv(os.path.join(out, "grid.csv"), cells)
for c in cells:
    if c["failed"]:
        continue
    tag = f"m{c['mass']:g}_v{c['speed']:g}"
    res = c["result"]
    write_envelope_csv(os.path.join(out, f"{tag}_envelope.csv"),
                       res.branches, res.scenario.params())
print(f"\nwrote {out}/grid.csv and per-cell envelope CSVs")
