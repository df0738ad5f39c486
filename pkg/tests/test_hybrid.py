import numpy as np
import pytest

from contactreach.hybrid import (
    HybridAutomaton,
    Location,
    ReachEntry,
    RunConfig,
    Transition,
    apply_jump,
    clock_projection,
    detect_guard_hits,
    prune_with_invariant,
    run_automaton,
    sync_time,
)
from contactreach.inputs import InputModel
from contactreach.linear import AffineFlow
from contactreach.sets import (
    ConstrainedZonotope,
    HalfSpace,
    Hyperplane,
    Zonotope,
    contains_point,
    interval_hull,
    is_empty,
)


def _const_input_model(dim=1):
    return InputModel(np.zeros((1, dim)), 1.0, 0.0,
                      Zonotope.point(np.zeros(dim)))


class TestPruneWithInvariant:
    def test_inside_unchanged(self):
        z = Zonotope([0.0, 0.0], np.eye(2))
        out = prune_with_invariant(z, [HalfSpace([1.0, 0.0], 5.0)])
        hull_in, hull_out = interval_hull(z), interval_hull(out)
        assert np.allclose(hull_in.lower, hull_out.lower)
        assert np.allclose(hull_in.upper, hull_out.upper)

    def test_fully_outside_empty(self):
        z = Zonotope([5.0, 0.0], np.eye(2))
        assert is_empty(prune_with_invariant(z, [HalfSpace([1.0, 0.0], 0.0)]))

    def test_box_cut(self):
        z = Zonotope([0.0, 0.0], np.eye(2))
        out = prune_with_invariant(z, [HalfSpace([0.0, 1.0], 0.0)])
        hull = interval_hull(out)
        assert np.allclose(hull.lower, [-1.0, -1.0], atol=1e-9)
        assert np.allclose(hull.upper, [1.0, 0.0], atol=1e-9)

    def test_constrained_zonotope_exact_cut(self):
        cz = ConstrainedZonotope.from_zonotope(Zonotope([0.0, 0.0], np.eye(2)))
        out = prune_with_invariant(cz, [HalfSpace([1.0, 0.0], -0.5)])
        hull = interval_hull(out)
        assert hull.upper[0] == pytest.approx(-0.5, abs=1e-8)
        assert hull.lower[1] == pytest.approx(-1.0, abs=1e-8)


class TestApplyJump:
    def test_identity(self):
        z = Zonotope([1.0, 2.0], np.eye(2))
        tr = Transition.identity_jump(Hyperplane([1.0, 0.0], 0.0), (), 0)
        assert apply_jump(tr, z) is z

    def test_affine_point(self):
        M = np.array([[2.0, 0.0], [0.0, 0.5]])
        o = np.array([1.0, -1.0])
        tr = Transition(Hyperplane([1.0, 0.0], 0.0), (), M, o, 0)
        out = apply_jump(tr, Zonotope.point([3.0, 4.0]))
        assert np.allclose(out.c, [7.0, 1.0])

    def test_sampled_images_contained(self):
        rng = np.random.default_rng(41)
        z = Zonotope(rng.normal(size=3), rng.normal(size=(3, 5)))
        M = rng.normal(size=(3, 3))
        o = rng.normal(size=3)
        tr = Transition(Hyperplane([1.0, 0.0, 0.0], 0.0), (), M, o, 0)
        out = apply_jump(tr, z)
        for x in z.sample(rng, 500)[::17]:
            assert contains_point(out, M @ x + o, tol=1e-9)


class TestSyncTime:
    def test_zero_width_projection(self):
        z = Zonotope.point([1.0, 0.3])
        assert clock_projection(z, 1) == (0.3, 0.3)

    def test_clock_generator_projection(self):
        z = Zonotope([0.0, 0.5], [[0.0], [0.01]])
        lo, hi = clock_projection(z, 1)
        assert lo == pytest.approx(0.49) and hi == pytest.approx(0.51)

    def test_constant_state_pins_clock(self):
        # two-state system (x, t) with x independent of t: the sync slice
        # returns the x-projection unchanged and clock width zero
        z = Zonotope([2.0, 0.5], [[0.3, 0.0], [0.0, 0.1]])
        e = ReachEntry(0, z, z, clock_projection(z, 1))
        out = sync_time([e], 0.5, 1)
        hull = interval_hull(out)
        assert hull.radius[1] == 0.0
        assert hull.center[1] == 0.5
        assert hull.lower[0] == pytest.approx(1.7, abs=1e-8)
        assert hull.upper[0] == pytest.approx(2.3, abs=1e-8)

    def test_correlated_state_tightens(self):
        # x fully correlated with the clock: slicing at one time leaves a
        # point in x, much tighter than the hull
        z = Zonotope([0.0, 0.5], [[1.0], [0.1]])
        e = ReachEntry(0, z, z, clock_projection(z, 1))
        out = sync_time([e], 0.5, 1)
        hull = interval_hull(out)
        assert hull.radius[0] < 1e-8
        assert hull.radius[1] == 0.0

    def test_no_cover_raises(self):
        from contactreach.hybrid import SyncError

        z = Zonotope.point([0.0, 0.5])
        e = ReachEntry(0, z, z, (0.5, 0.5))
        with pytest.raises(SyncError):
            sync_time([e], 0.9, 1)


class TestDetectGuardHits:
    def _tr(self):
        return Transition.identity_jump(Hyperplane([1.0], 0.0), (), 0)

    def test_no_hit_when_one_sided(self):
        sets = [Zonotope.from_box([0.5], [0.1]), Zonotope.from_box([0.3], [0.1])]
        assert detect_guard_hits(sets, (self._tr(),)) == []

    def test_single_step_crossing(self):
        sets = [Zonotope.from_box([0.15], [0.05]),
                Zonotope.from_box([-0.05], [0.05]),
                Zonotope.from_box([-0.2], [0.05])]
        hits = detect_guard_hits(sets, (self._tr(),))
        assert hits == [{"transition": 0, "steps": [1]}]

    def test_window_cap(self):
        from contactreach.hybrid import HitWindowError

        sets = [Zonotope.from_box([0.0], [0.1])] * 10
        with pytest.raises(HitWindowError):
            detect_guard_hits(sets, (self._tr(),), max_hit_steps=5)


def _toy_automaton():
    """L0: x' = 1 until x = 1, then L1: x' = -1 (no further transitions).

    State (x, t) with t the clock.
    """
    up = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [1.0, 1.0])
    down = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [-1.0, 1.0])
    guard = Hyperplane([1.0, 0.0], 1.0)
    l0 = Location(up, (HalfSpace([1.0, 0.0], 1.0),),
                  (Transition.identity_jump(guard, (), 1, "top"),), "up")
    l1 = Location(down, (), (), "down")
    return HybridAutomaton((l0, l1), 1)


class TestRunAutomaton:
    def test_clock_row_validated(self):
        bad = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [1.0, 0.0])
        with pytest.raises(ValueError):
            HybridAutomaton((Location(bad, (), (), "x"),), 1)

    def test_invalid_target_rejected(self):
        up = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [1.0, 1.0])
        tr = Transition.identity_jump(Hyperplane([1.0, 0.0], 1.0), (), 7)
        with pytest.raises(ValueError):
            HybridAutomaton((Location(up, (), (tr,), "x"),), 1)

    def test_initial_set_outside_invariant_rejected(self):
        ha = _toy_automaton()
        X0 = Zonotope.point([2.0, 0.0])
        cfg = RunConfig(dt=0.05, t_end=1.0)
        with pytest.raises(ValueError):
            run_automaton(ha, X0, 0, _const_input_model(), cfg)

    def test_single_location_no_transitions(self):
        # degenerate automaton: plain affine propagation
        down = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), [-1.0, 1.0])
        ha = HybridAutomaton((Location(down, (), (), "d"),), 1)
        X0 = Zonotope.point([0.0, 0.0])
        cfg = RunConfig(dt=0.1, t_end=1.0)
        seqs = run_automaton(ha, X0, 0, _const_input_model(), cfg)
        assert len(seqs) == 1
        last = seqs[0].entries[-1].time_point_set
        assert last.c[0] == pytest.approx(-1.0, abs=1e-9)

    def test_two_location_toy_closed_form(self):
        ha = _toy_automaton()
        x0 = 0.25
        X0 = Zonotope.point([x0, 0.0])
        cfg = RunConfig(dt=0.05, t_end=2.0, sync_mode="off")
        seqs = run_automaton(ha, X0, 0, _const_input_model(), cfg)
        assert len(seqs) == 1
        seq = seqs[0]
        assert len(seq.intersections) == 1
        rec = seq.intersections[0]
        # crossing at t = 1 - x0 = 0.75
        assert rec.t_window[0] <= 0.75 + 1e-9
        assert rec.t_window[1] >= 0.75 - 1e-9
        assert rec.t_window[1] - rec.t_window[0] <= 0.1 + 1e-9
        # reachable x never exceeds the guard by more than slop, and the
        # closed-form trajectory is covered by some entry at every time
        for e in seq.entries:
            assert interval_hull(e.time_interval_set).upper[0] <= 1.0 + 0.06
        for t in np.linspace(0.0, 1.9, 39):
            x_true = x0 + t if t <= 0.75 else 1.0 - (t - 0.75)
            covered = False
            for e in seq.entries:
                t0, t1 = e.clock_interval
                if t0 - 1e-9 <= t <= t1 + 1e-9:
                    hull = interval_hull(e.time_interval_set)
                    if hull.lower[0] - 1e-7 <= x_true <= hull.upper[0] + 1e-7:
                        covered = True
                        break
            assert covered, f"trajectory escaped the enclosure at t = {t}"

    def test_guard_gate_blocks_slow_crossings(self):
        # state (x, v, t), x' = v with tiny constant v: the gated transition
        # requires a guard-slice point with v at least speed_gate below the
        # side-condition offset, so a graze never fires; ungated it does
        def build(gate):
            A = np.zeros((3, 3))
            A[0, 1] = 1.0
            up = AffineFlow(A, np.zeros((3, 1)), [0.0, 0.0, 1.0])
            guard = Hyperplane([1.0, 0.0, 0.0], 1.0)
            side = HalfSpace([0.0, 1.0, 0.0], 1.0)  # v <= 1, wide margin
            tr = Transition.identity_jump(guard, (side,), 1, "slow",
                                          speed_gate=gate)
            l0 = Location(up, (), (tr,), "up",
                          slack=np.array([1e-4, 0.0, 0.0]))
            l1 = Location(AffineFlow(np.zeros((3, 3)), np.zeros((3, 1)),
                                     [-1.0, 0.0, 1.0]), (), (), "down")
            return HybridAutomaton((l0, l1), 2)

        X0 = Zonotope.point([1.0 - 1e-5, 1e-4, 0.0])
        cfg = RunConfig(dt=0.05, t_end=0.5, sync_mode="off")
        gated = run_automaton(build(1.0), X0, 0, _const_input_model(), cfg)
        assert len(gated) == 1 and gated[0].intersections == []
        open_ = run_automaton(build(0.0), X0, 0, _const_input_model(), cfg)
        assert open_[0].intersections != []
