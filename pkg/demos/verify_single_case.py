"""Verify one contact scenario end to end and walk through the result.

A delayed impedance-controlled robot approaches a surface, impacts at
t = 0.1 s, and presses until force control takes over.  The script runs
set-based reachability over the hybrid contact automaton and reports the
guard intersections, the branch structure produced by time
synchronization, and the final safety verdict against the 280 N
transient / 120 N quasi-static force limits.

Usage: python demos/verify_single_case.py [mass] [speed]
"""

import sys

from contactreach.contact import LOCATION_NAMES, force_from_state
from contactreach.scenario import Scenario, run_scenario

mass = float(sys.argv[1]) if len(sys.argv) > 1 else 4.5
speed = float(sys.argv[2]) if len(sys.argv) > 2 else 0.55

s = Scenario(mass=mass, speed=speed)
print(f"effective mass {mass} kg, collision speed {speed} m/s")
print(f"reachability step {s.dt * 1e3:.3g} ms, horizon {s.horizon} s,"
      f" method {s.method}")

result = run_scenario(s)
p = s.params()

print(f"\ncompleted in {result.wall_time:.1f} s,"
      f" {len(result.branches)} branch(es)")

print("\nguard intersections (order, transition, time window, measure):")
for r in result.records:
    print(f"  #{r.order} {r.transition_name:9s}"
          f" [{r.t_window[0]:.4f}, {r.t_window[1]:.4f}] s"
          f"  measure {r.measure * 1e3:.3g}e-3"
          f"  ({r.wall_time * 1e3:.0f} ms)")

print("\nper-branch outcome:")
for b in result.verdict.branches:
    tag = b.tag or "single"
    print(f"  {tag:20s} {b.status:10s} peak force {b.peak_force:7.1f} N")

print(f"\nverdict: {result.verdict.verdict}")

# peak force per location, to see where the transient lives
peaks = {}
for br in result.branches:
    for e in br.entries:
        _, hi = force_from_state(e.time_interval_set, p, e.location)
        peaks[e.location] = max(peaks.get(e.location, 0.0), hi)
print("\npeak force upper bound by location:")
for loc, peak in sorted(peaks.items()):
    print(f"  {LOCATION_NAMES[loc]:15s} {peak:7.1f} N")
