"""Outer-loop controllers for the teleoperator system.

Four families:

- KinematicController: joint velocity command from the delayed peer
  position plus inner-loop tracking error and its integral; works with the
  readable inner command position or falls back to its own command origin.
- DynSepController: command generator with second-order internal dynamics
  (z, zdot); the emitted command is zdot, which stays continuous even when
  the channel delay jumps.
- AdaptiveController: same z dynamics plus dynamic compensation of the
  arm and of the hidden inner-loop gain ratios, with gradient adaptation
  driven by the velocity reference error s.
- OpenTorqueMaster: torque-interface controller for hybrid setups where
  the master exposes raw joint torques.

All integrals advance by trapezoid at the controller update rate; the
(z, zdot) internal dynamics advance by RK4 with the measured inputs held
across the update interval.  Estimate adaptation uses explicit Euler, as
the driving signals are only available at the sampled instants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from telesim.dynamics import JointVec, _regressor_raw


class ConfigurationError(ValueError):
    """Scenario wiring is inconsistent (e.g. adaptive mode without a
    readable inner command position)."""


# ---------------------------------------------------------------------------
# kinematic control

@dataclass(frozen=True)
class KinematicGains:
    """lam couples to the delayed peer; lam_p and lam_m act on the inner
    tracking error and its integral (positive signs: they oppose the inner
    loop's pull so a constant operator torque keeps drifting the pair).

    lam_m = 0 is allowed: it disables the integral term and is exactly the
    configuration whose manipulability collapses to finite.
    """

    lam: float
    lam_p: float
    lam_m: float


@dataclass
class KinematicState:
    integral_psi: np.ndarray
    qc_star: np.ndarray
    prev_psi: np.ndarray | None = None


class KinematicController:
    """Velocity-command law with inner-error feedback.

    readable=True uses the robot's inner command position as the tracking
    reference; otherwise the controller integrates its own command origin
    qc_star (which generally differs from the inner one by an unknown
    constant offset).
    """

    def __init__(self, gains: KinematicGains, qc_star0, readable: bool = True,
                 flip_lam_p: bool = False):
        qc_star0 = np.asarray(qc_star0, dtype=float)
        self.gains = gains
        self.readable = readable
        # fault-injection hook for the residual mutation check; never set in
        # regular scenarios
        self._lam_p = -gains.lam_p if flip_lam_p else gains.lam_p
        self._prev_cmd: np.ndarray | None = None
        self.state = KinematicState(integral_psi=np.zeros_like(qc_star0),
                                    qc_star=qc_star0.copy())

    def command(self, q: JointVec, q_inner_c: JointVec | None,
                q_peer_delayed: JointVec, dt: float) -> JointVec:
        st = self.state
        # the outer command origin integrates the previously held command,
        # the same recurrence the inner loop runs, so their offset is fixed
        if self._prev_cmd is not None:
            st.qc_star = st.qc_star + dt * self._prev_cmd
        if self.readable:
            if q_inner_c is None:
                raise ConfigurationError("readable mode requires the inner command position")
            q_ref = q_inner_c
        else:
            q_ref = st.qc_star
        psi = q - q_ref
        if st.prev_psi is not None:
            st.integral_psi = st.integral_psi + 0.5 * dt * (st.prev_psi + psi)
        st.prev_psi = psi
        g = self.gains
        cmd = (-g.lam * (q - q_peer_delayed) + self._lam_p * psi
               + g.lam_m * st.integral_psi)
        self._prev_cmd = cmd
        return cmd


# ---------------------------------------------------------------------------
# dynamic separation: shared z dynamics

@dataclass(frozen=True)
class AdaptiveGains:
    """Design constants for the z dynamics, reference signals and adaptation.

    Lambda_* are the diagonals of the z-dynamics PID-like action; gamma and
    gamma_star shape the velocity reference; Gamma* are adaptation rates.
    """

    alpha: float
    lam: float
    Lambda_D: np.ndarray
    Lambda_P: np.ndarray
    Lambda_I: np.ndarray
    gamma: float = 0.0
    gamma_star: float = 0.0
    Gamma: np.ndarray = None
    Gamma_star: np.ndarray = None
    Gamma_P_star: np.ndarray = None
    Gamma_I_star: np.ndarray = None

    def __post_init__(self):
        for name in ("Lambda_D", "Lambda_P", "Lambda_I"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.Gamma is not None:
            g = np.asarray(self.Gamma, dtype=float)
            if g.ndim == 0:
                g = g * np.eye(5)
            object.__setattr__(self, "Gamma", g)
        for name in ("Gamma_star", "Gamma_P_star", "Gamma_I_star"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))


def zdd_dynamics(z, zd, int_qz, q, qd, xi_peer_delayed, gains: AdaptiveGains):
    """Instantaneous second derivative of z (the command-generator core)."""
    xi = qd + gains.alpha * q
    return (-gains.alpha * qd - gains.lam * (xi - xi_peer_delayed)
            + gains.Lambda_D * (qd - zd) + gains.Lambda_P * (q - z)
            + gains.Lambda_I * int_qz)


def dynsep_z_step(z, zd, int_qz, q, qd, xi_peer_delayed, gains: AdaptiveGains,
                  dt: float):
    """Advance (z, zdot) one RK4 step with held measurements.

    (q, qd, xi_peer_delayed) and the tracking-error integral int_qz are all
    treated as held inputs; the integral itself is maintained by the caller
    from measured samples, so it stays consistent with the plant-side
    integral of the same error.  Returns (z, zd, zdd) at the end of the
    step, zdd evaluated with the same held inputs.
    """
    g = gains
    xi = qd + g.alpha * q
    base = (-g.alpha * qd - g.lam * (xi - xi_peer_delayed)
            + g.Lambda_D * qd + g.Lambda_P * q + g.Lambda_I * int_qz)
    ld, lp = g.Lambda_D, g.Lambda_P

    def acc(z_, zd_):
        return base - ld * zd_ - lp * z_

    h2 = dt / 2.0
    a1 = acc(z, zd)
    zb, vb = z + h2 * zd, zd + h2 * a1
    a2 = acc(zb, vb)
    zc, vc = z + h2 * vb, zd + h2 * a2
    a3 = acc(zc, vc)
    zl, vl = z + dt * vc, zd + dt * a3
    a4 = acc(zl, vl)
    w = dt / 6.0
    z_n = z + w * (zd + 2.0 * (vb + vc) + vl)
    zd_n = zd + w * (a1 + 2.0 * (a2 + a3) + a4)
    zdd_n = acc(z_n, zd_n)
    return z_n, zd_n, zdd_n


def reference_signals(q, qd, z, zd, int_psi_star, gains: AdaptiveGains):
    """(psi_star, zeta_star, s, xi) from the current measurements and z."""
    psi_star = q - z
    zeta_star = zd - gains.gamma * psi_star - gains.gamma_star * int_psi_star
    s = qd - zeta_star
    xi = qd + gains.alpha * q
    return psi_star, zeta_star, s, xi


class DynSepController:
    """Kinematic control through the z dynamics: the command is zdot.

    z plays the role of the inner command position, so when the robot
    exposes q_c the controller identifies z with the measured value and
    integrates the measured tracking error; that pins the command generator
    to the inner loop exactly (the two would only drift apart through hold
    discretization).  Without a readable q_c it integrates its own copy of
    z, the continuous-time-equivalent construction.  No estimates are
    involved.
    """

    def __init__(self, gains: AdaptiveGains, z0, readable: bool = True):
        z0 = np.asarray(z0, dtype=float)
        self.gains = gains
        self.readable = readable
        self.z = z0.copy()
        self.zd = np.zeros_like(z0)
        self.int_qz = np.zeros_like(z0)
        self.last_zdd = np.zeros_like(z0)
        self._prev_psi: np.ndarray | None = None

    def command(self, q: JointVec, qd: JointVec, q_inner_c: JointVec | None,
                xi_peer_delayed: JointVec, dt: float) -> JointVec:
        g = self.gains
        if self.readable and q_inner_c is not None:
            self.z = np.asarray(q_inner_c, dtype=float)
            psi = q - self.z
            if self._prev_psi is not None:
                self.int_qz = self.int_qz + 0.5 * dt * (self._prev_psi + psi)
            self._prev_psi = psi
            cmd = self.zd.copy()
            self.last_zdd = zdd_dynamics(self.z, self.zd, self.int_qz, q, qd,
                                         xi_peer_delayed, g)
            # advance zdot with everything else held at the measured values
            a = (-g.alpha * qd - g.lam * (qd + g.alpha * q - xi_peer_delayed)
                 + g.Lambda_D * qd + g.Lambda_P * psi + g.Lambda_I * self.int_qz)
            ld = g.Lambda_D
            v = self.zd
            k1 = a - ld * v
            k2 = a - ld * (v + 0.5 * dt * k1)
            k3 = a - ld * (v + 0.5 * dt * k2)
            k4 = a - ld * (v + dt * k3)
            self.zd = v + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            return cmd
        psi = q - self.z
        if self._prev_psi is not None:
            self.int_qz = self.int_qz + 0.5 * dt * (self._prev_psi + psi)
        self._prev_psi = psi
        cmd = self.zd.copy()
        self.last_zdd = zdd_dynamics(self.z, self.zd, self.int_qz, q, qd,
                                     xi_peer_delayed, self.gains)
        self.z, self.zd, _ = dynsep_z_step(
            self.z, self.zd, self.int_qz, q, qd, xi_peer_delayed,
            self.gains, dt)
        return cmd


# ---------------------------------------------------------------------------
# adaptive dynamic control

@dataclass
class AdaptiveState:
    """Controller memory: z dynamics, integrals, and all estimates."""

    z: np.ndarray
    zd: np.ndarray
    int_psi_star: np.ndarray
    int_qc_minus_z: np.ndarray
    theta_hat: np.ndarray
    w_hat: np.ndarray
    wP_hat: np.ndarray
    wI_hat: np.ndarray
    prev_qcz: np.ndarray | None = None
    prev_psi_star: np.ndarray | None = None

    @classmethod
    def initial(cls, z0, theta_hat0=None, w_hat0=None, wP_hat0=None, wI_hat0=None):
        z0 = np.asarray(z0, dtype=float)
        m = z0.shape[0]
        def vec(v, default, n):
            if v is None:
                return np.full(n, float(default))
            return np.asarray(v, dtype=float).copy()
        return cls(z=z0.copy(), zd=np.zeros(m), int_psi_star=np.zeros(m),
                   int_qc_minus_z=np.zeros(m),
                   theta_hat=vec(theta_hat0, 0.0, 5),
                   w_hat=vec(w_hat0, 0.0, m),
                   wP_hat=vec(wP_hat0, 3.0, m),
                   wI_hat=vec(wI_hat0, 0.5, m))


def adaptive_command(zd, wP_hat, wI_hat, w_hat, qc_minus_z, int_qc_minus_z,
                     Y, theta_hat) -> JointVec:
    """Velocity command: feedforward zdot, correction toward z with the
    estimated inner gain ratios, and estimated dynamic compensation."""
    return (zd - wP_hat * qc_minus_z - wI_hat * int_qc_minus_z
            + w_hat * (Y @ theta_hat))


def adaptation_step(state: AdaptiveState, s, Y, z, q_c, gains: AdaptiveGains,
                    dt: float) -> None:
    """Explicit-Euler update of all estimates (gradient laws driven by s).

    The gain-ratio laws use z - q_c (note: the negative of the command-side
    integrand) and its integral.
    """
    y_theta = Y @ state.theta_hat
    state.theta_hat = state.theta_hat - (gains.Gamma @ (Y.T @ s)) * dt
    state.w_hat = state.w_hat - gains.Gamma_star * y_theta * s * dt
    state.wP_hat = state.wP_hat - gains.Gamma_P_star * (z - q_c) * s * dt
    state.wI_hat = state.wI_hat - gains.Gamma_I_star * (-state.int_qc_minus_z) * s * dt


class AdaptiveController:
    """Adaptive dynamic control of one closed-architecture robot.

    Requires the inner command position to be readable; there is no
    adaptive fallback without it.

    With adapt_gravity=False (the default) the gravity columns of the
    regressor are excluded from compensation and adaptation: gravity is
    assumed compensated a priori, and columns that persist at rest would
    otherwise keep integrating the estimates whenever contact holds the
    velocity reference error away from zero.
    """

    def __init__(self, gains: AdaptiveGains, state: AdaptiveState,
                 adapt_gravity: bool = False):
        for name in ("Gamma", "Gamma_star", "Gamma_P_star", "Gamma_I_star"):
            if getattr(gains, name) is None:
                raise ConfigurationError(f"adaptive control requires {name}")
        self.gains = gains
        self.state = state
        self.adapt_gravity = adapt_gravity
        self.diag: dict[str, np.ndarray] = {}

    def command(self, q: JointVec, qd: JointVec, q_inner_c: JointVec | None,
                xi_peer_delayed: JointVec, dt: float) -> JointVec:
        if q_inner_c is None:
            raise ConfigurationError(
                "adaptive control requires a readable inner command position")
        st, g = self.state, self.gains
        # both integrals advance by trapezoid on the measured samples, so
        # they stay consistent with the plant-side integral of q - q_c
        psi_star_now = q - st.z
        if st.prev_psi_star is not None:
            st.int_psi_star = st.int_psi_star + 0.5 * dt * (st.prev_psi_star
                                                            + psi_star_now)
        st.prev_psi_star = psi_star_now
        zdd = zdd_dynamics(st.z, st.zd, st.int_psi_star, q, qd,
                           xi_peer_delayed, g)
        psi_star, zeta_star, s, _ = reference_signals(q, qd, st.z, st.zd,
                                                      st.int_psi_star, g)
        # analytic chaining, no numerical differentiation
        zeta_star_dot = zdd - g.gamma * (qd - st.zd) - g.gamma_star * psi_star
        Y = _regressor_raw(q, qd, zeta_star, zeta_star_dot)
        if not self.adapt_gravity:
            Y[:, 3:] = 0.0

        qcz = q_inner_c - st.z
        if st.prev_qcz is not None:
            st.int_qc_minus_z = st.int_qc_minus_z + 0.5 * dt * (st.prev_qcz + qcz)
        st.prev_qcz = qcz

        cmd = adaptive_command(st.zd, st.wP_hat, st.wI_hat, st.w_hat, qcz,
                               st.int_qc_minus_z, Y, st.theta_hat)

        # state updates below rebind rather than mutate, so plain references
        # snapshot the values the command was computed from
        self.diag = {
            "z": st.z, "zd": st.zd, "zdd": zdd,
            "psi_star": psi_star, "int_psi_star": st.int_psi_star,
            "s": s, "zeta_star": zeta_star, "zeta_star_dot": zeta_star_dot,
            "int_qc_minus_z": st.int_qc_minus_z,
            "theta_hat": st.theta_hat, "w_hat": st.w_hat,
            "wP_hat": st.wP_hat, "wI_hat": st.wI_hat,
        }

        adaptation_step(st, s, Y, st.z, q_inner_c, g, dt)
        st.z, st.zd, _ = dynsep_z_step(
            st.z, st.zd, st.int_psi_star, q, qd, xi_peer_delayed, g, dt)
        return cmd


# ---------------------------------------------------------------------------
# open-torque master (hybrid setups)

@dataclass(frozen=True)
class OpenMasterParams:
    alpha: float
    lam: float
    lam_m: float
    K1: np.ndarray
    Gamma1: np.ndarray
    adapt_gravity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "K1", np.asarray(self.K1, dtype=float))
        g = np.asarray(self.Gamma1, dtype=float)
        if g.ndim == 0:
            g = g * np.eye(5)
        object.__setattr__(self, "Gamma1", g)


class OpenTorqueMaster:
    """Torque controller for a master with an open torque interface.

    Here z is a velocity-like auxiliary state (s = qdot - z); gravity is
    compensated upstream, not adaptively, so the drift behavior of the pair
    is preserved.
    """

    def __init__(self, params: OpenMasterParams, dim: int = 2,
                 theta_hat0=None, z0=None):
        self.params = params
        self.z = np.zeros(dim) if z0 is None else np.asarray(z0, dtype=float).copy()
        self.theta_hat = (np.zeros(5) if theta_hat0 is None
                          else np.asarray(theta_hat0, dtype=float).copy())
        self.diag: dict[str, np.ndarray] = {}

    def zdot(self, z, q, qd, xi_peer_delayed):
        p = self.params
        xi = qd + p.alpha * q
        return -p.alpha * qd - p.lam * (xi - xi_peer_delayed) + p.lam_m * (qd - z)

    def command(self, q: JointVec, qd: JointVec, xi_peer_delayed: JointVec,
                dt: float) -> JointVec:
        p = self.params
        zd = self.zdot(self.z, q, qd, xi_peer_delayed)
        s = qd - self.z
        Y = _regressor_raw(q, qd, self.z, zd)
        if not p.adapt_gravity:
            Y[:, 3:] = 0.0
        tau = -p.K1 * s + Y @ self.theta_hat
        self.diag = {"z": self.z.copy(), "zd": zd, "s": s,
                     "theta_hat": self.theta_hat.copy()}
        self.theta_hat = self.theta_hat - (p.Gamma1 @ (Y.T @ s)) * dt

        def f(z_):
            return self.zdot(z_, q, qd, xi_peer_delayed)

        k1 = f(self.z)
        k2 = f(self.z + 0.5 * dt * k1)
        k3 = f(self.z + 0.5 * dt * k2)
        k4 = f(self.z + dt * k3)
        self.z = self.z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return tau
