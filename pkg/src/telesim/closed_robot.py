"""Emulation of a robot with a closed control architecture.

The plant is the rigid-body arm driven by a manufacturer inner PD/PID
position loop whose gains are hidden from outer-loop controllers; the only
actuation channel is the joint velocity command, held constant across each
plant step.  An open-torque mode exposes the raw torque interface for
hybrid setups.

Plant, inner loop, command position and the PID integral integrate
monolithically with classical fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from telesim.dynamics import ArmModel, JointVec, gravity_vector


class SimulationDiverged(RuntimeError):
    """Raised when a stepped state stops being finite."""


@dataclass(frozen=True)
class InnerGains:
    """Diagonal inner-loop gains (entries of KD, KP, KI).

    mode = "pd" forces the integral gain to zero; otherwise all entries must
    be strictly positive.
    """

    kd: np.ndarray
    kp: np.ndarray
    ki: np.ndarray
    mode: str = "pid"

    def __post_init__(self):
        for name in ("kd", "kp", "ki"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.mode not in ("pd", "pid"):
            raise ValueError("mode must be 'pd' or 'pid'")
        if np.any(self.kd <= 0) or np.any(self.kp <= 0):
            raise ValueError("KD and KP entries must be > 0")
        if self.mode == "pd":
            if np.any(self.ki != 0):
                raise ValueError("pd mode requires KI = 0")
        elif np.any(self.ki <= 0):
            raise ValueError("pid mode requires KI entries > 0")


@dataclass
class ClosedRobotState:
    """Plant state plus the inner loop's internals.

    pid_integral is the running integral of q - q_c under the plant
    integrator's quadrature.  In open_torque mode the inner-loop fields are
    carried but unused.
    """

    q: np.ndarray
    qd: np.ndarray
    q_c: np.ndarray
    pid_integral: np.ndarray
    arch: str = "closed"
    gravity_precompensated: bool = True
    command_readable: bool = True

    @classmethod
    def at_rest(cls, q0, arch: str = "closed", gravity_precompensated: bool = True,
                command_readable: bool = True) -> "ClosedRobotState":
        """Manufacturer power-on convention: q_c(0) = q(0), zero integral."""
        q0 = np.asarray(q0, dtype=float)
        z = np.zeros_like(q0)
        return cls(q=q0.copy(), qd=z.copy(), q_c=q0.copy(), pid_integral=z.copy(),
                   arch=arch, gravity_precompensated=gravity_precompensated,
                   command_readable=command_readable)

    def copy(self) -> "ClosedRobotState":
        return replace(self, q=self.q.copy(), qd=self.qd.copy(),
                       q_c=self.q_c.copy(), pid_integral=self.pid_integral.copy())


@dataclass(frozen=True)
class CommandOffset:
    """Constant offset theta between outer and inner command origins."""

    theta: np.ndarray


def inner_torque(state: ClosedRobotState, gains: InnerGains, model: ArmModel,
                 qdot_c: JointVec) -> JointVec:
    """Torque produced by the hidden inner loop for command velocity qdot_c.

    Includes the manufacturer's exact gravity feedforward when the state is
    flagged gravity_precompensated.
    """
    if state.arch != "closed":
        raise ValueError("inner_torque is only defined for closed architecture")
    tau = (-gains.kd * (state.qd - qdot_c)
           - gains.kp * (state.q - state.q_c)
           - gains.ki * state.pid_integral)
    if state.gravity_precompensated and model.g0 != 0.0:
        tau = tau + gravity_vector(model, state.q)
    return tau


def step_closed_robot(state: ClosedRobotState, gains: InnerGains, model: ArmModel,
                      tau_ext: JointVec, qdot_c_star: JointVec,
                      dt: float) -> ClosedRobotState:
    """Advance plant + inner loop by one RK4 step of length dt.

    qdot_c_star and tau_ext are held constant across the step (zero-order
    hold).  tau_ext carries the externally applied torque with its sign
    already resolved (+operator torque on the master, -environment torque on
    the slave).  Internals run on plain floats: this is the innermost loop
    of every scenario.
    """
    if state.arch != "closed":
        raise ValueError("step_closed_robot requires closed architecture")
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    a1, a2, a3, b1, b2 = model.theta_tuple
    kd0, kd1 = float(gains.kd[0]), float(gains.kd[1])
    kp0, kp1 = float(gains.kp[0]), float(gains.kp[1])
    ki0, ki1 = float(gains.ki[0]), float(gains.ki[1])
    u0, u1 = float(qdot_c_star[0]), float(qdot_c_star[1])
    te0, te1 = float(tau_ext[0]), float(tau_ext[1])
    with_g = (b1 != 0.0 or b2 != 0.0) and not state.gravity_precompensated

    def acc(q0, q1, v0, v1, c0, c1, i0, i1):
        s2 = math.sin(q1)
        c2 = math.cos(q1)
        h = -a2 * s2
        rhs0 = (-kd0 * (v0 - u0) - kp0 * (q0 - c0) - ki0 * i0 + te0
                - h * (v1 * v0 + (v0 + v1) * v1))
        rhs1 = (-kd1 * (v1 - u1) - kp1 * (q1 - c1) - ki1 * i1 + te1
                + h * v0 * v0)
        if with_g:
            c12 = math.cos(q0 + q1)
            rhs0 -= b1 * math.cos(q0) + b2 * c12
            rhs1 -= b2 * c12
        m11 = a1 + 2.0 * a2 * c2
        m12 = a3 + a2 * c2
        det = m11 * a3 - m12 * m12
        return (a3 * rhs0 - m12 * rhs1) / det, (m11 * rhs1 - m12 * rhs0) / det

    q0, q1 = float(state.q[0]), float(state.q[1])
    v0, v1 = float(state.qd[0]), float(state.qd[1])
    c0, c1 = float(state.q_c[0]), float(state.q_c[1])
    i0, i1 = float(state.pid_integral[0]), float(state.pid_integral[1])
    h2 = 0.5 * dt

    a10, a11 = acc(q0, q1, v0, v1, c0, c1, i0, i1)
    e10, e11 = q0 - c0, q1 - c1
    qb0, qb1 = q0 + h2 * v0, q1 + h2 * v1
    vb0, vb1 = v0 + h2 * a10, v1 + h2 * a11
    cb0, cb1 = c0 + h2 * u0, c1 + h2 * u1
    a20, a21 = acc(qb0, qb1, vb0, vb1, cb0, cb1, i0 + h2 * e10, i1 + h2 * e11)
    e20, e21 = qb0 - cb0, qb1 - cb1
    qc0_, qc1_ = q0 + h2 * vb0, q1 + h2 * vb1
    vc0, vc1 = v0 + h2 * a20, v1 + h2 * a21
    a30, a31 = acc(qc0_, qc1_, vc0, vc1, cb0, cb1, i0 + h2 * e20, i1 + h2 * e21)
    e30, e31 = qc0_ - cb0, qc1_ - cb1
    qd0_, qd1_ = q0 + dt * vc0, q1 + dt * vc1
    vd0, vd1 = v0 + dt * a30, v1 + dt * a31
    cd0, cd1 = c0 + dt * u0, c1 + dt * u1
    a40, a41 = acc(qd0_, qd1_, vd0, vd1, cd0, cd1, i0 + dt * e30, i1 + dt * e31)
    e40, e41 = qd0_ - cd0, qd1_ - cd1

    w = dt / 6.0
    nq0 = q0 + w * (v0 + 2.0 * (vb0 + vc0) + vd0)
    nq1 = q1 + w * (v1 + 2.0 * (vb1 + vc1) + vd1)
    nv0 = v0 + w * (a10 + 2.0 * (a20 + a30) + a40)
    nv1 = v1 + w * (a11 + 2.0 * (a21 + a31) + a41)
    ni0 = i0 + w * (e10 + 2.0 * (e20 + e30) + e40)
    ni1 = i1 + w * (e11 + 2.0 * (e21 + e31) + e41)
    if not (math.isfinite(nq0) and math.isfinite(nq1)
            and math.isfinite(nv0) and math.isfinite(nv1)):
        raise SimulationDiverged(
            f"non-finite state after step: q=({nq0}, {nq1}), qd=({nv0}, {nv1})")
    return ClosedRobotState(
        q=np.array([nq0, nq1]), qd=np.array([nv0, nv1]),
        q_c=np.array([cd0, cd1]), pid_integral=np.array([ni0, ni1]),
        arch=state.arch, gravity_precompensated=state.gravity_precompensated,
        command_readable=state.command_readable)


def read_inner_command(state: ClosedRobotState) -> JointVec | None:
    """Inner-loop command position q_c, or None when not exposed."""
    if state.command_readable:
        return state.q_c.copy()
    return None


def step_open_robot(state: ClosedRobotState, model: ArmModel, tau_cmd: JointVec,
                    tau_ext: JointVec, dt: float) -> ClosedRobotState:
    """Advance an open-torque-interface robot by one RK4 step.

    Dynamics: M qdd = -C qd - g + tau_cmd + tau_ext, both torques held over
    the step.
    """
    if state.arch != "open_torque":
        raise ValueError("step_open_robot requires open_torque architecture")
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    a1, a2, a3, b1, b2 = model.theta_tuple
    t0 = float(tau_cmd[0]) + float(tau_ext[0])
    t1 = float(tau_cmd[1]) + float(tau_ext[1])
    with_g = b1 != 0.0 or b2 != 0.0

    def acc(q0, q1, v0, v1):
        s2 = math.sin(q1)
        c2 = math.cos(q1)
        h = -a2 * s2
        rhs0 = t0 - h * (v1 * v0 + (v0 + v1) * v1)
        rhs1 = t1 + h * v0 * v0
        if with_g:
            c12 = math.cos(q0 + q1)
            rhs0 -= b1 * math.cos(q0) + b2 * c12
            rhs1 -= b2 * c12
        m11 = a1 + 2.0 * a2 * c2
        m12 = a3 + a2 * c2
        det = m11 * a3 - m12 * m12
        return (a3 * rhs0 - m12 * rhs1) / det, (m11 * rhs1 - m12 * rhs0) / det

    q0, q1 = float(state.q[0]), float(state.q[1])
    v0, v1 = float(state.qd[0]), float(state.qd[1])
    h2 = 0.5 * dt
    a10, a11 = acc(q0, q1, v0, v1)
    qb0, qb1 = q0 + h2 * v0, q1 + h2 * v1
    vb0, vb1 = v0 + h2 * a10, v1 + h2 * a11
    a20, a21 = acc(qb0, qb1, vb0, vb1)
    qc0, qc1 = q0 + h2 * vb0, q1 + h2 * vb1
    vc0, vc1 = v0 + h2 * a20, v1 + h2 * a21
    a30, a31 = acc(qc0, qc1, vc0, vc1)
    qd0, qd1 = q0 + dt * vc0, q1 + dt * vc1
    vd0, vd1 = v0 + dt * a30, v1 + dt * a31
    a40, a41 = acc(qd0, qd1, vd0, vd1)
    w = dt / 6.0
    nq0 = q0 + w * (v0 + 2.0 * (vb0 + vc0) + vd0)
    nq1 = q1 + w * (v1 + 2.0 * (vb1 + vc1) + vd1)
    nv0 = v0 + w * (a10 + 2.0 * (a20 + a30) + a40)
    nv1 = v1 + w * (a11 + 2.0 * (a21 + a31) + a41)
    if not (math.isfinite(nq0) and math.isfinite(nq1)
            and math.isfinite(nv0) and math.isfinite(nv1)):
        raise SimulationDiverged(
            f"non-finite state after step: q=({nq0}, {nq1}), qd=({nv0}, {nv1})")
    new = state.copy()
    new.q = np.array([nq0, nq1])
    new.qd = np.array([nv0, nv1])
    return new
