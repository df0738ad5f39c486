"""Cross-check the reachable sets against event-detected simulation.

The reachability engine over-approximates; simulation under-approximates.
If a simulated trajectory ever leaves the union of computed reach sets at
a matching time, the enclosure is wrong.  This script samples initial
states and input disturbances, integrates each trajectory with RK4 plus
guard-event bisection, and tests every recorded state for membership in
the reach-set branches.

Usage: python demos/monte_carlo_check.py [mass] [speed] [samples]
"""

import sys

import numpy as np

from contactreach.contact import build_automaton, build_initial_set, build_input_model
from contactreach.scenario import Scenario, run_scenario
from contactreach.simulate import containment_test, simulate_batch

mass = float(sys.argv[1]) if len(sys.argv) > 1 else 8.0
speed = float(sys.argv[2]) if len(sys.argv) > 2 else 0.55
n = int(sys.argv[3]) if len(sys.argv) > 3 else 200

s = Scenario(mass=mass, speed=speed, samples=n)
print(f"mass {mass} kg, speed {speed} m/s, {n} trajectories")

result = run_scenario(s)
print(f"reachability: {result.verdict.verdict} in {result.wall_time:.1f} s,"
      f" {len(result.branches)} branch(es)")

p = s.params()
ha = build_automaton(p)
im = build_input_model(s.trajectory_spec(), p)
X0 = build_initial_set(im.samples)
rng = np.random.default_rng(s.seed)
batch = simulate_batch(ha, X0, 0, im, n, 5e-5, s.horizon, rng)
print(f"simulated {n} trajectories on a"
      f" {batch.times.shape[0]}-point coarse grid")

report = containment_test(result.branches, batch)
print(f"checked {report['nChecked']} states:"
      f" {report['nViolations']} outside the enclosure"
      f" (pass rate {report['passRate']:.6f})")
for i, t in report["violations"][:10]:
    print(f"  trajectory {i} escaped at t = {t:.4f} s")
if report["nViolations"] == 0:
    print("every simulated state is covered by the reachable sets")
