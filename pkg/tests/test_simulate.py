import numpy as np
import pytest

from contactreach.hybrid import (
    HybridAutomaton,
    Location,
    RunConfig,
    Transition,
    run_automaton,
)
from contactreach.inputs import InputModel
from contactreach.linear import AffineFlow
from contactreach.sets import Hyperplane, Zonotope
from contactreach.simulate import (
    ChatterError,
    containment_test,
    simulate_batch,
    simulate_trajectory,
)


def _const_model(dim=1):
    return InputModel(np.zeros((1, dim)), 1.0, 0.0,
                      Zonotope.point(np.zeros(dim)))


def _decay_automaton():
    # (x, t) with x' = -x, no transitions
    flow = AffineFlow([[-1.0, 0.0], [0.0, 0.0]], np.zeros((2, 1)), [0.0, 1.0])
    return HybridAutomaton((Location(flow, (), (), "decay"),), 1)


def _bounce_automaton():
    # x' = 1 until x = 1, then x' = -1
    up = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [1.0, 1.0])
    down = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [-1.0, 1.0])
    tr = Transition.identity_jump(Hyperplane([1.0, 0.0], 1.0), (), 1, "top")
    return HybridAutomaton((Location(up, (), (tr,), "up"),
                            Location(down, (), (), "down")), 1)


class TestSimulateTrajectory:
    def test_affine_closed_form(self):
        ha = _decay_automaton()
        times, states, locs = simulate_trajectory(
            ha, [1.0, 0.0], 0, _const_model(), [0.0], 1e-3, 2.0)
        assert np.all(locs == 0)
        assert np.max(np.abs(states[:, 0] - np.exp(-times))) < 1e-8

    def test_bounce_event_time(self):
        ha = _bounce_automaton()
        x0 = 0.3
        times, states, locs = simulate_trajectory(
            ha, [x0, 0.0], 0, _const_model(), [0.0], 1e-3, 2.0)
        # after the bounce x(t) = 1 - (t - t_ev) exactly, so the event time
        # is recoverable from the final state to bisection accuracy
        t_ev = times[-1] - (1.0 - states[-1, 0])
        assert t_ev == pytest.approx(1.0 - x0, abs=1e-9)
        assert locs[-1] == 1

    def test_contact_nominal_event_time(self):
        from contactreach.contact import (
            ContactParams,
            TrajectorySpec,
            build_automaton,
            build_initial_set,
            build_input_model,
        )

        p = ContactParams(m=8.0)
        im = build_input_model(TrajectorySpec(impact_speed=0.55), p)
        ha = build_automaton(p)
        x0 = build_initial_set(im.samples).c
        times, states, locs = simulate_trajectory(
            ha, x0, 0, im, np.zeros(3), 5e-5, 0.15)
        k = int(np.argmax(locs != 0))
        assert k > 0
        assert 0.1 - 2e-3 <= times[k] <= 0.1 + 2e-3

    def test_chatter_raises(self):
        # self-loop whose jump resets x behind the guard, so the transition
        # re-fires every millisecond and exceeds the jump cap
        a = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [1.0, 1.0])
        g = Hyperplane([1.0, 0.0], 0.0)
        tr = Transition(g, (), np.eye(2), np.array([-1e-3, 0.0]), 0, "loop")
        ha = HybridAutomaton((Location(a, (), (tr,), "a"),), 1)
        with pytest.raises(ChatterError):
            simulate_trajectory(ha, [-5e-4, 0.0], 0, _const_model(), [0.0],
                                1e-3, 1.0, max_jumps=10)


class TestSimulateBatch:
    def test_matches_single_trajectory(self):
        ha = _bounce_automaton()
        X0 = Zonotope.from_box([0.3, 0.0], [0.1, 0.0])
        rng = np.random.default_rng(2)
        batch = simulate_batch(ha, X0, 0, _const_model(), 8, 1e-3, 1.5, rng,
                               record_stride=10)
        assert batch.states.shape == (8, batch.times.shape[0], 2)
        for i in range(8):
            x0 = batch.states[i, 0]
            times, states, locs = simulate_trajectory(
                ha, x0, 0, _const_model(), [0.0], 1e-3, 1.5,
                record_stride=10)
            assert np.allclose(states, batch.states[i], atol=1e-9)
            assert np.all(locs == batch.locations[i])


class TestContainment:
    def _reach_and_batch(self, shrink=1.0):
        ha = _decay_automaton()
        X0 = Zonotope.from_box([1.0, 0.0], [0.05, 0.0])
        cfg = RunConfig(dt=0.02, t_end=1.0)
        branches = run_automaton(ha, X0, 0, _const_model(), cfg)
        if shrink != 1.0:
            from contactreach.hybrid import ReachEntry, ReachSequence

            mutated = []
            for br in branches:
                entries = [
                    ReachEntry(e.location,
                               Zonotope(e.time_point_set.c,
                                        shrink * e.time_point_set.G),
                               Zonotope(e.time_interval_set.c,
                                        shrink * e.time_interval_set.G),
                               e.clock_interval)
                    for e in br.entries]
                mutated.append(ReachSequence(entries, br.intersections, br.tag))
            branches = mutated
        rng = np.random.default_rng(7)
        batch = simulate_batch(ha, X0, 0, _const_model(), 50, 1e-3, 1.0, rng)
        return branches, batch

    def test_full_containment(self):
        branches, batch = self._reach_and_batch()
        report = containment_test(branches, batch)
        assert report["nViolations"] == 0
        assert report["passRate"] == 1.0

    def test_point_initial_set_single_location(self):
        ha = _decay_automaton()
        X0 = Zonotope.point([1.0, 0.0])
        cfg = RunConfig(dt=0.02, t_end=1.0)
        branches = run_automaton(ha, X0, 0, _const_model(), cfg)
        rng = np.random.default_rng(9)
        batch = simulate_batch(ha, X0, 0, _const_model(), 5, 1e-3, 1.0, rng)
        report = containment_test(branches, batch)
        assert report["nViolations"] == 0

    def test_mutation_detected(self):
        # deliberately shrunk sets must produce violations
        branches, batch = self._reach_and_batch(shrink=0.01)
        report = containment_test(branches, batch)
        assert report["nViolations"] > 0
        assert report["violations"][0][1] >= 0.0

    def test_uncovered_time_counts_all(self):
        branches, batch = self._reach_and_batch()
        # drop every entry: all checked states become violations
        for br in branches:
            br.entries.clear()
        report = containment_test(branches, batch)
        assert report["nViolations"] == report["nChecked"]
        assert report["passRate"] == 0.0
