import numpy as np
import pytest

from contactreach.linear import (
    AffineFlow,
    Propagator,
    StepSizeError,
    matrix_exponential,
    propagate_step,
    propagate_step_segments,
    reach_affine_until,
)
from contactreach.inputs import InputModel, step_input
from contactreach.sets import (
    HalfSpace,
    Zonotope,
    contains_point,
    interval_hull,
    minkowski_sum,
)


def expm_oracle(A, t, order=30, squarings=8):
    """Independent scaling-and-squaring oracle: high-order Taylor at t/2^s,
    then s squarings (few squarings, so rounding is not amplified)."""
    S = np.asarray(A, float) * (t / 2.0 ** squarings)
    n = S.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    for i in range(1, order + 1):
        term = term @ S / i
        total = total + term
    for _ in range(squarings):
        total = total @ total
    return total


class TestMatrixExponential:
    def test_nilpotent_exact(self):
        out = matrix_exponential(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.1)
        assert np.allclose(out["value"], [[1.0, 0.1], [0.0, 1.0]], atol=1e-15)
        assert out["remainderRadius"] < 1e-12

    def test_zero_matrix_identity(self):
        out = matrix_exponential(np.zeros((3, 3)), 2.0)
        assert np.allclose(out["value"], np.eye(3))

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            matrix_exponential(np.eye(2), -1.0)

    def test_random_stable_vs_scaling_squaring_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            M = rng.normal(size=(4, 4))
            A = -(M @ M.T) - 0.5 * np.eye(4)  # negative definite: stable
            t = 0.3
            out = matrix_exponential(A, t)
            ref = expm_oracle(A, t)
            err = np.abs(out["value"] - ref).max()
            assert err < 1e-10
            # the remainder radius must honestly bound the truncation error
            assert err <= out["remainderRadius"] + 1e-12

    def test_diverging_series_raises(self):
        with pytest.raises(StepSizeError):
            matrix_exponential(1e6 * np.ones((3, 3)), 1.0, max_order=10)


def _double_integrator():
    return AffineFlow([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [0.0, 0.0])


class TestPropagateStep:
    def test_zero_dynamics_identity(self):
        flow = AffineFlow(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros(2))
        R = Zonotope([1.0, -2.0], [[0.5, 0.1], [0.0, 0.3]])
        U = Zonotope.point([0.0])
        step = propagate_step(flow, R, U, 0.1)
        assert np.allclose(step.time_point_set.c, R.c)
        h_r, h_i = interval_hull(R), interval_hull(step.time_interval_set)
        assert np.all(h_i.lower <= h_r.lower + 1e-12)
        assert np.all(h_i.upper >= h_r.upper - 1e-12)

    def test_double_integrator_point_closed_form(self):
        flow = _double_integrator()
        U = Zonotope.point([0.0])
        s1 = propagate_step(flow, Zonotope.point([1.0, 0.0]), U, 0.1)
        assert np.allclose(s1.time_point_set.c, [1.0, 0.0], atol=1e-14)
        s2 = propagate_step(flow, Zonotope.point([0.0, 1.0]), U, 0.1)
        assert np.allclose(s2.time_point_set.c, [0.1, 1.0], atol=1e-14)

    def test_double_integrator_multistep_analytic(self):
        # constant input u: x = x0 + v0 t + u t^2/2, v = v0 + u t
        flow = _double_integrator()
        u = 0.7
        x0, v0 = 0.3, -0.2
        dt, n = 0.05, 40
        R = Zonotope.point([x0, v0])
        prop = Propagator(flow.A, dt)
        for k in range(1, n + 1):
            R = propagate_step(flow, R, Zonotope.point([u]), dt,
                               propagator=prop).time_point_set
            t = k * dt
            assert abs(R.c[0] - (x0 + v0 * t + 0.5 * u * t * t)) < 1e-8
            assert abs(R.c[1] - (v0 + u * t)) < 1e-8

    def test_contact_flow_simulation_containment(self):
        # stiff second-order flow with delayed-measurement rows: simulated
        # trajectories stay inside every time-interval set over 100 steps
        from contactreach.contact import ContactParams, build_automaton

        ha = build_automaton(ContactParams(m=4.5))
        flow = ha.locations[1].flow
        rng = np.random.default_rng(5)
        dt, n_steps = 6.5e-4, 100
        c0 = np.array([-1e-4, -0.2, -1e-4, -0.2, 0.0, 0.0])
        r0 = np.array([5e-5, 1e-3, 5e-5, 1e-3, 0.0, 1.0])
        R = Zonotope.from_box(c0, r0)
        u_c = np.array([0.0, -0.2, 2.0])
        u_r = np.array([1e-4, 1e-3, 0.0])
        U = Zonotope.from_box(u_c, u_r)
        n_traj = 30
        X = rng.uniform(c0 - r0, c0 + r0, size=(n_traj, 6))
        u_draw = rng.uniform(u_c - u_r, u_c + u_r, size=(n_traj, 3))
        prop = Propagator(flow.A, dt)
        fine = 20
        h = dt / fine
        for _ in range(n_steps):
            step = propagate_step(flow, R, U, dt, propagator=prop)
            ti = step.time_interval_set
            for _ in range(fine):  # classic RK4 at h = dt/20
                k1 = X @ flow.A.T + u_draw @ flow.B.T + flow.b
                k2 = (X + 0.5 * h * k1) @ flow.A.T + u_draw @ flow.B.T + flow.b
                k3 = (X + 0.5 * h * k2) @ flow.A.T + u_draw @ flow.B.T + flow.b
                k4 = (X + h * k3) @ flow.A.T + u_draw @ flow.B.T + flow.b
                X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            hull = interval_hull(ti)
            assert np.all(X >= hull.lower - 1e-9)
            assert np.all(X <= hull.upper + 1e-9)
            for x in X[::7]:
                assert contains_point(ti, x, tol=1e-7)
            R = step.time_point_set


class TestPropagateStepSegments:
    def _clock_flow(self):
        # state [x, t], x' = u(t), t' = 1
        return AffineFlow([[0.0, 0.0], [0.0, 0.0]],
                          [[1.0], [0.0]], [0.0, 1.0])

    def test_segments_follow_sample_switch(self):
        # zero clock width: the hold switch is honored exactly in the center
        flow = self._clock_flow()
        im = InputModel(np.array([[0.0], [1.0]]), 0.005, 0.0,
                        Zonotope.point([0.0]))
        R = Zonotope.point([0.0, 0.004])
        si = step_input(im, R, 0.002, clock_index=1)
        step = propagate_step_segments(flow, R, si, clock_index=1)
        # x integrates u: 0.001 at u=0, then 0.001 at u=1
        assert step.time_point_set.c[0] == pytest.approx(0.001, abs=1e-12)
        assert step.time_point_set.c[1] == pytest.approx(0.006, abs=1e-12)
        assert step.carry_radius is None

    def test_switch_deviation_two_trajectory_oracle(self):
        # clock spread w: a trajectory delta ahead of the center crosses the
        # switch delta early and ends with x offset by delta * du; the
        # propagated set must contain both extreme trajectories after the
        # switch is fully crossed, with the deviation tied to the clock
        flow = self._clock_flow()
        du = 1.0
        im = InputModel(np.array([[0.0], [du]]), 0.005, 0.0,
                        Zonotope.point([0.0]))
        w = 5e-4
        R = Zonotope([0.0, 0.0], [[0.0], [w]])
        dt = 1e-3
        cache = {}
        states = {+1: np.array([0.0, +w]), -1: np.array([0.0, -w])}
        for k in range(8):
            si = step_input(im, R, dt, clock_index=1)
            step = propagate_step_segments(flow, R, si, clock_index=1,
                                           expm_cache=cache)
            # exact per-trajectory integration of x' = u(t), u piecewise const
            for s, x in states.items():
                t0, t1 = x[1], x[1] + dt
                on = max(0.0, t1 - max(t0, 0.005))
                states[s] = np.array([x[0] + du * on, t1])
            cov = step.time_point_set
            if step.carry_radius is not None:
                cov = minkowski_sum(cov, Zonotope.from_box(
                    np.zeros(2), step.carry_radius))
            for x in states.values():
                assert contains_point(cov, x, tol=1e-9)
            R = step.time_point_set
        # fully crossed by now: the deviation is booked exactly, so the set
        # stays thin (no noise accumulation): x-width ~ w * du, not k * w * du
        hull = interval_hull(R)
        assert hull.upper[0] - hull.lower[0] < 2.5 * w * du
        # end states sit at x = (0.0052 - switch crossing): delta early
        # crossing gives delta more integration of du
        assert states[+1][0] - states[-1][0] == pytest.approx(2 * w * du)


class TestReachAffineUntil:
    def test_invariant_violated_halts_immediately(self):
        flow = AffineFlow([[-1.0]], np.zeros((1, 1)), [0.0])
        R0 = Zonotope.point([5.0])
        inv = [HalfSpace([1.0], 1.0)]  # x <= 1, violated
        steps, halted = reach_affine_until(
            flow, R0, lambda R, h: Zonotope.point([0.0]), inv, 0.1, 1.0)
        assert steps == [] and halted

    def test_stable_scalar_analytic(self):
        flow = AffineFlow([[-1.0]], np.zeros((1, 1)), [0.0])
        R0 = Zonotope.from_box([1.0], [0.1])
        steps, halted = reach_affine_until(
            flow, R0, lambda R, h: Zonotope.point([0.0]), None, 0.01, 5.0)
        assert not halted
        hull = interval_hull(steps[-1].time_point_set)
        lo, hi = np.exp(-5.0) * 0.9, np.exp(-5.0) * 1.1
        assert hull.lower[0] == pytest.approx(lo, abs=1e-6)
        assert hull.upper[0] == pytest.approx(hi, abs=1e-6)
        assert hull.lower[0] <= lo + 1e-12 and hull.upper[0] >= hi - 1e-12
