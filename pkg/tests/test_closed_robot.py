"""Closed-architecture robot emulation: inner-loop torque arithmetic,
integrator order, velocity-servo behavior, command-offset bookkeeping and
energy sanity."""

import numpy as np
import pytest

from telesim.closed_robot import (ClosedRobotState, InnerGains,
                                  SimulationDiverged, inner_torque,
                                  read_inner_command, step_closed_robot,
                                  step_open_robot)
from telesim.dynamics import gravity_vector, mass_matrix

GAINS = InnerGains(kd=[2.0, 2.0], kp=[20.0, 20.0], ki=[1.0, 1.0])


def rest_state(q0=(0.1, -0.2), **kw):
    return ClosedRobotState.at_rest(np.asarray(q0, dtype=float), **kw)


class TestInnerTorque:
    def test_zero_error_servo(self, model):
        st = rest_state()
        tau = inner_torque(st, GAINS, model, qdot_c=np.zeros(2))
        assert np.all(tau == 0.0)

    def test_derivative_term_only(self, model):
        st = rest_state()
        st.qd = np.array([1.0, 0.0])
        tau = inner_torque(st, GAINS, model, qdot_c=np.zeros(2))
        assert np.allclose(tau, [-2.0, 0.0])

    def test_pid_arithmetic(self, model):
        st = rest_state((0.0, 0.0))
        st.q = np.array([0.1, 0.0])
        st.pid_integral = np.array([0.05, 0.0])
        tau = inner_torque(st, GAINS, model, qdot_c=np.zeros(2))
        assert np.allclose(tau, [-2.05, 0.0], atol=1e-15)

    def test_gravity_feedforward(self, model_g):
        st = rest_state((0.3, 0.4), gravity_precompensated=True)
        tau = inner_torque(st, GAINS, model_g, qdot_c=np.zeros(2))
        assert np.allclose(tau, gravity_vector(model_g, st.q))

    def test_open_arch_rejected(self, model):
        st = rest_state(arch="open_torque")
        with pytest.raises(ValueError):
            inner_torque(st, GAINS, model, qdot_c=np.zeros(2))


class TestClosedStep:
    def test_rest_equilibrium(self, model):
        st = rest_state()
        q0 = st.q.copy()
        for _ in range(1000):
            st = step_closed_robot(st, GAINS, model, np.zeros(2), np.zeros(2), 1e-3)
        assert np.allclose(st.q, q0, atol=1e-14)
        assert np.allclose(st.qd, 0.0, atol=1e-14)

    def test_rk4_order(self, model_g):
        # smooth but fast run (uncompensated gravity, stiff inner gains,
        # large initial velocity) so truncation error clears the rounding
        # floor; the command stays held over the whole window
        gains = InnerGains(kd=[5, 5], kp=[80, 80], ki=[10, 10])
        cmd = np.array([1.5, -1.0])
        tau = np.array([0.5, 0.3])

        def integrate(dt, t_end=0.5):
            st = rest_state(gravity_precompensated=False)
            st.qd = np.array([2.0, -3.0])
            for _ in range(int(round(t_end / dt))):
                st = step_closed_robot(st, gains, model_g, tau, cmd, dt)
            return np.concatenate([st.q, st.qd])

        ref = integrate(1e-5)
        dts = np.array([4e-3, 2e-3, 1e-3, 5e-4])
        errs = np.array([np.max(np.abs(integrate(dt) - ref)) for dt in dts])
        order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert order >= 3.8

    def test_velocity_servo_tracks(self, model):
        st = rest_state((0.0, 0.0))
        cmd = np.array([0.1, 0.0])
        for _ in range(5000):
            st = step_closed_robot(st, GAINS, model, np.zeros(2), cmd, 1e-3)
        assert abs(st.qd[0] - 0.1) < 0.002
        assert abs(st.qd[1]) < 0.002

    def test_pd_equals_pid_with_zero_ki(self, model):
        pd = InnerGains(kd=[2, 2], kp=[20, 20], ki=[0, 0], mode="pd")
        pid0 = InnerGains(kd=[2, 2], kp=[20, 20], ki=[0, 0], mode="pd")
        a, b = rest_state(), rest_state()
        cmd = np.array([0.2, -0.1])
        for _ in range(500):
            a = step_closed_robot(a, pd, model, np.zeros(2), cmd, 1e-3)
            b = step_closed_robot(b, pid0, model, np.zeros(2), cmd, 1e-3)
        assert np.array_equal(a.q, b.q) and np.array_equal(a.qd, b.qd)

    def test_divergence_detected(self, model):
        st = rest_state()
        with pytest.raises(SimulationDiverged):
            step_closed_robot(st, GAINS, model, np.array([np.nan, 0.0]),
                              np.zeros(2), 1e-3)

    def test_command_offset_constant(self, model):
        # outer integrator and inner command position track the same
        # held commands; their difference stays at the initial offset
        st = rest_state((0.0, 0.0))
        offset = np.array([0.15, -0.05])
        qc_star = st.q_c + offset
        rng = np.random.default_rng(7)
        for _ in range(2000):
            cmd = rng.uniform(-0.5, 0.5, 2)
            st = step_closed_robot(st, GAINS, model, np.zeros(2), cmd, 1e-3)
            qc_star = qc_star + 1e-3 * cmd
        assert np.allclose(qc_star - st.q_c, offset, atol=1e-12)


class TestReadInnerCommand:
    def test_readable(self):
        st = rest_state((0.3, 0.1))
        assert np.allclose(read_inner_command(st), [0.3, 0.1])

    def test_unavailable(self):
        st = rest_state(command_readable=False)
        assert read_inner_command(st) is None

    def test_integrates_commanded_velocity(self, model):
        st = rest_state((0.0, 0.0))
        cmd = np.array([1.0, 0.0])
        for _ in range(1000):
            st = step_closed_robot(st, GAINS, model, np.zeros(2), cmd, 1e-3)
        assert np.allclose(read_inner_command(st), [1.0, 0.0], atol=1e-12)


class TestOpenStep:
    def test_gravity_hold_equilibrium(self, model_g):
        st = rest_state((0.4, -0.3), arch="open_torque")
        hold = gravity_vector(model_g, st.q)
        for _ in range(1000):
            st = step_open_robot(st, model_g, hold, np.zeros(2), 1e-3)
        assert np.allclose(st.q, [0.4, -0.3], atol=1e-12)

    def test_energy_conserved_without_torque(self, model):
        st = rest_state((0.2, 0.5), arch="open_torque")
        st.qd = np.array([1.0, 0.0])

        def kinetic(s):
            return 0.5 * s.qd @ mass_matrix(model, s.q) @ s.qd

        e0 = kinetic(st)
        for _ in range(1000):
            st = step_open_robot(st, model, np.zeros(2), np.zeros(2), 1e-3)
        assert abs(kinetic(st) - e0) < 1e-6

    def test_rk4_order(self, model_g):
        tau = np.array([0.5, 0.3])

        def integrate(dt, t_end=0.5):
            st = rest_state((0.1, 0.2), arch="open_torque")
            st.qd = np.array([3.0, -4.0])
            for _ in range(int(round(t_end / dt))):
                st = step_open_robot(st, model_g, tau, np.zeros(2), dt)
            return np.concatenate([st.q, st.qd])

        ref = integrate(1e-5)
        dts = np.array([4e-3, 2e-3, 1e-3, 5e-4])
        errs = np.array([np.max(np.abs(integrate(dt) - ref)) for dt in dts])
        order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert order >= 3.8

    def test_closed_arch_rejected(self, model):
        with pytest.raises(ValueError):
            step_open_robot(rest_state(), model, np.zeros(2), np.zeros(2), 1e-3)


class TestInnerGainsValidation:
    def test_pd_requires_zero_ki(self):
        with pytest.raises(ValueError):
            InnerGains(kd=[2, 2], kp=[20, 20], ki=[1, 1], mode="pd")

    def test_positive_entries(self):
        with pytest.raises(ValueError):
            InnerGains(kd=[0, 2], kp=[20, 20], ki=[1, 1])
        with pytest.raises(ValueError):
            InnerGains(kd=[2, 2], kp=[20, 20], ki=[0, 1], mode="pid")
