"""Scenario orchestration: two robots, two delay lines, a controller pair,
operator and environment torque models, advanced on a deterministic fixed
plant step.

Controller commands are recomputed only at their own update instants and
held (zero-order) in between; plant, inner loop and command position
integrate at the plant step.  A (Scenario, seed) pair fully determines the
produced Trace, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from telesim.channel import DelayLine, DelayProfile, delay_at
from telesim.closed_robot import (ClosedRobotState, InnerGains, SimulationDiverged,
                                  read_inner_command, step_closed_robot,
                                  step_open_robot)
from telesim.control import (AdaptiveController, AdaptiveGains, AdaptiveState,
                             ConfigurationError, DynSepController,
                             KinematicController, KinematicGains,
                             OpenMasterParams, OpenTorqueMaster)
from telesim.dynamics import ArmModel

CONTROLLER_MODES = ("kinematic", "kinematic_fallback", "dynsep", "adaptive",
                    "hybrid_open_master")


# ---------------------------------------------------------------------------
# exogenous torque models

@dataclass(frozen=True)
class OperatorModel:
    """Torque exerted by the operator on the master.

    kinds: none | constant{tau} | pulse{tau, t_on, t_off} |
    spring_pull{K_h, D_h, q_target} | interactive (value injected by the
    bridge each step).
    """

    kind: str = "none"
    tau: np.ndarray | None = None
    t_on: float = 0.0
    t_off: float = 0.0
    K_h: np.ndarray | None = None
    D_h: np.ndarray | None = None
    q_target: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "constant", "pulse", "spring_pull", "interactive"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        for name in ("tau", "K_h", "D_h", "q_target"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))
        for name in ("K_h", "D_h"):
            v = getattr(self, name)
            if v is not None and np.any(v < 0):
                raise ValueError(f"{name} entries must be >= 0")


@dataclass(frozen=True)
class EnvironmentModel:
    """Torque exerted by the slave on the environment (one-sided joint wall)."""

    kind: str = "none"
    q_wall: np.ndarray | None = None
    K_e: np.ndarray | None = None
    D_e: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "joint_wall"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        for name in ("q_wall", "K_e", "D_e"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))
        for name in ("K_e", "D_e"):
            v = getattr(self, name)
            if v is not None and np.any(v < 0):
                raise ValueError(f"{name} entries must be >= 0")


def operator_torque(model: OperatorModel, t: float, q1, qd1) -> np.ndarray:
    """Evaluate the operator torque model (interactive handled by the caller)."""
    m = len(q1)
    if model.kind == "none" or model.kind == "interactive":
        return np.zeros(m)
    if model.kind == "constant":
        return model.tau.copy()
    if model.kind == "pulse":
        if model.t_on <= t < model.t_off:
            return model.tau.copy()
        return np.zeros(m)
    # spring_pull
    return model.K_h * (model.q_target - q1) - model.D_h * qd1


def environment_torque(model: EnvironmentModel, q2, qd2) -> np.ndarray:
    """One-sided spring-damper wall; damping acts only while moving inward."""
    if model.kind == "none":
        return np.zeros(len(q2))
    pen = q2 - model.q_wall
    tau = model.K_e * pen + model.D_e * np.maximum(qd2, 0.0)
    return np.where(pen > 0.0, tau, 0.0)


# ---------------------------------------------------------------------------
# scenario

@dataclass(frozen=True)
class RobotSpec:
    arch: str = "closed"
    model: ArmModel = field(default_factory=ArmModel.canonical)
    inner: InnerGains | None = None
    command_readable: bool = True
    gravity_precompensated: bool = True
    q0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    qd0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    qc_star_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("q0", "qd0", "qc_star_offset"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.arch not in ("closed", "open_torque"):
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.arch == "closed" and self.inner is None:
            raise ValueError("closed architecture requires inner gains")


@dataclass(frozen=True)
class AdaptiveSetup:
    gains: AdaptiveGains
    theta_hat0: np.ndarray | None = None
    w_hat0: np.ndarray | None = None
    wP_hat0: np.ndarray | None = None
    wI_hat0: np.ndarray | None = None
    adapt_gravity: bool = False


@dataclass(frozen=True)
class Scenario:
    master: RobotSpec
    slave: RobotSpec
    controller_mode: str
    duration: float
    plant_dt: float = 1e-3
    master_cmd_dt: float = 1e-3
    slave_cmd_dt: float = 8e-3
    seed: int = 42
    decimation: int = 1
    kinematic: KinematicGains | None = None
    dynsep: AdaptiveGains | None = None
    adaptive_master: AdaptiveSetup | None = None
    adaptive_slave: AdaptiveSetup | None = None
    open_master: OpenMasterParams | None = None
    channel_fwd: DelayProfile = DelayProfile(kind="piecewise_uniform", lo=0.3,
                                             hi=0.9, update_period=0.096)
    channel_bwd: DelayProfile = DelayProfile(kind="piecewise_uniform", lo=0.3,
                                             hi=0.9, update_period=0.100)
    operator: OperatorModel = OperatorModel()
    environment: EnvironmentModel = EnvironmentModel()
    fault: str | None = None

    def __post_init__(self):
        if self.controller_mode not in CONTROLLER_MODES:
            raise ValueError(f"unknown controller_mode {self.controller_mode!r}")
        if self.duration <= 0 or self.plant_dt <= 0:
            raise ValueError("duration and plant_dt must be > 0")
        for name in ("master_cmd_dt", "slave_cmd_dt"):
            ratio = getattr(self, name) / self.plant_dt
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError(f"{name} must be a positive integer multiple of plant_dt")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")


def seeded_profile(profile: DelayProfile, scenario_seed: int, tag: int) -> DelayProfile:
    """Give a piecewise profile a concrete seed derived from the scenario seed
    unless it already carries an explicit nonzero one."""
    if profile.kind != "piecewise_uniform" or profile.seed != 0:
        return profile
    return replace(profile, seed=scenario_seed * 1000003 + tag)


# ---------------------------------------------------------------------------
# trace

class Trace:
    """Columnar time series on a uniform grid, plus scenario metadata."""

    def __init__(self, columns: dict[str, np.ndarray], meta: dict):
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError("all trace columns must have equal length")
        self.columns = columns
        self.meta = meta

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def vec(self, prefix: str) -> np.ndarray:
        """Stack prefix_0, prefix_1, ... into an (n, m) array."""
        cols = []
        j = 0
        while f"{prefix}_{j}" in self.columns:
            cols.append(self.columns[f"{prefix}_{j}"])
            j += 1
        if not cols:
            raise KeyError(f"no columns with prefix {prefix!r}")
        return np.stack(cols, axis=1)

    @property
    def column_order(self) -> list[str]:
        return list(self.columns.keys())


class SimulationAbort(RuntimeError):
    """Numeric abort; carries the trace logged up to the last good step."""

    def __init__(self, message: str, trace: Trace | None):
        super().__init__(message)
        self.trace = trace


class _DelayEval:
    """Monotone-query memo over a delay profile (one window at a time)."""

    def __init__(self, profile: DelayProfile):
        self.profile = profile
        self._key = None
        self._val = None

    def at(self, t: float) -> float:
        p = self.profile
        if p.kind == "constant":
            return p.T
        if p.kind == "piecewise_uniform":
            k = int(math.floor(t / p.update_period + 1e-9))
            if k != self._key:
                self._key = k
                self._val = delay_at(p, t)
            return self._val
        return delay_at(p, t)


class TeleopSim:
    """Incremental stepper for one scenario; run_scenario drives it to the end.

    The bridge drives it step by step, injecting operator torque when the
    scenario's operator model is interactive.
    """

    def __init__(self, sc: Scenario, record: bool = True):
        self.sc = sc
        m = len(sc.master.q0)
        self.m = m
        self.t = 0.0
        self.k = 0
        self.steps = int(round(sc.duration / sc.plant_dt))
        self.master_every = int(round(sc.master_cmd_dt / sc.plant_dt))
        self.slave_every = int(round(sc.slave_cmd_dt / sc.plant_dt))

        self.master_state = ClosedRobotState.at_rest(
            sc.master.q0, arch=sc.master.arch,
            gravity_precompensated=sc.master.gravity_precompensated,
            command_readable=sc.master.command_readable)
        self.master_state.qd = sc.master.qd0.copy()
        self.slave_state = ClosedRobotState.at_rest(
            sc.slave.q0, arch=sc.slave.arch,
            gravity_precompensated=sc.slave.gravity_precompensated,
            command_readable=sc.slave.command_readable)
        self.slave_state.qd = sc.slave.qd0.copy()

        fwd = seeded_profile(sc.channel_fwd, sc.seed, 101)
        bwd = seeded_profile(sc.channel_bwd, sc.seed, 202)
        self._fwd_delay = _DelayEval(fwd)
        self._bwd_delay = _DelayEval(bwd)
        horizon = max(fwd.max_delay, bwd.max_delay) + 1.0
        self.fwd_line = DelayLine(horizon)   # master -> slave, delayed by T1
        self.bwd_line = DelayLine(horizon)   # slave -> master, delayed by T2

        self._build_controllers()
        self.cmd_master = np.zeros(m)    # velocity command (closed master)
        self.tau_cmd_master = np.zeros(m)  # torque command (open master)
        self.cmd_slave = np.zeros(m)
        self.tau_op = np.zeros(m)
        self.tau_env = np.zeros(m)
        self.interactive_tau = np.zeros(m)
        self.T1 = self._fwd_delay.at(0.0)
        self.T2 = self._bwd_delay.at(0.0)

        self.record = record
        if record:
            self._alloc_trace()
        self.trace: Trace | None = None

    # -- construction -----------------------------------------------------

    def _build_controllers(self):
        sc = self.sc
        mode = sc.controller_mode
        flip = sc.fault == "flip_lam_p"
        if mode != "hybrid_open_master":
            # velocity-command controllers have nothing to say to a robot
            # that only accepts torques
            for name, spec in (("master", sc.master), ("slave", sc.slave)):
                if spec.arch != "closed":
                    raise ConfigurationError(
                        f"{mode} mode requires a closed-architecture {name}")
        if mode in ("kinematic", "kinematic_fallback"):
            if sc.kinematic is None:
                raise ConfigurationError("kinematic mode requires kinematic gains")
            readable = (mode == "kinematic"
                        and sc.master.command_readable,
                        mode == "kinematic"
                        and sc.slave.command_readable)
            self.ctrl_master = KinematicController(
                sc.kinematic, sc.master.q0 + sc.master.qc_star_offset,
                readable=readable[0], flip_lam_p=flip)
            self.ctrl_slave = KinematicController(
                sc.kinematic, sc.slave.q0 + sc.slave.qc_star_offset,
                readable=readable[1], flip_lam_p=flip)
        elif mode == "dynsep":
            if sc.dynsep is None:
                raise ConfigurationError("dynsep mode requires dynsep gains")
            self.ctrl_master = DynSepController(sc.dynsep, sc.master.q0,
                                                readable=sc.master.command_readable)
            self.ctrl_slave = DynSepController(sc.dynsep, sc.slave.q0,
                                               readable=sc.slave.command_readable)
        elif mode == "adaptive":
            for name, spec in (("adaptive_master", sc.adaptive_master),
                               ("adaptive_slave", sc.adaptive_slave)):
                if spec is None:
                    raise ConfigurationError(f"adaptive mode requires {name}")
            if not (sc.master.command_readable and sc.slave.command_readable):
                raise ConfigurationError(
                    "adaptive control requires readable inner command positions")
            self.ctrl_master = self._adaptive(sc.adaptive_master, sc.master.q0)
            self.ctrl_slave = self._adaptive(sc.adaptive_slave, sc.slave.q0)
        elif mode == "hybrid_open_master":
            if sc.open_master is None or sc.adaptive_slave is None:
                raise ConfigurationError(
                    "hybrid mode requires open_master params and adaptive_slave")
            if sc.master.arch != "open_torque":
                raise ConfigurationError("hybrid mode requires an open-torque master")
            if not sc.slave.command_readable:
                raise ConfigurationError(
                    "adaptive control requires a readable inner command position")
            self.ctrl_master = OpenTorqueMaster(sc.open_master, dim=self.m)
            self.ctrl_slave = self._adaptive(sc.adaptive_slave, sc.slave.q0)

    @staticmethod
    def _adaptive(setup: AdaptiveSetup, q0) -> AdaptiveController:
        state = AdaptiveState.initial(q0, theta_hat0=setup.theta_hat0,
                                      w_hat0=setup.w_hat0,
                                      wP_hat0=setup.wP_hat0,
                                      wI_hat0=setup.wI_hat0)
        return AdaptiveController(setup.gains, state,
                                  adapt_gravity=setup.adapt_gravity)

    def _alloc_trace(self):
        sc = self.sc
        n = self.steps // sc.decimation + 1
        m = self.m
        names = ["t", "T1", "T2"]

        def vec(prefix):
            names.extend(f"{prefix}_{j}" for j in range(m))

        for p in ("q1", "q2", "qd1", "qd2", "qc1", "qc2", "qdot_c1", "qdot_c2",
                  "tau1_star", "tau2_star"):
            vec(p)
        mode = sc.controller_mode
        if mode in ("kinematic", "kinematic_fallback"):
            for p in ("int_psi1", "int_psi2", "qc_star1", "qc_star2"):
                vec(p)
        elif mode == "dynsep":
            for p in ("z1", "zd1", "zdd1", "int_psistar1",
                      "z2", "zd2", "zdd2", "int_psistar2"):
                vec(p)
        elif mode == "adaptive":
            for r in ("1", "2"):
                for p in (f"z{r}", f"zd{r}", f"zdd{r}", f"int_psistar{r}",
                          f"s{r}", f"zeta_star{r}", f"zeta_star_dot{r}",
                          f"int_qcz{r}", f"w_hat{r}", f"wP_hat{r}", f"wI_hat{r}"):
                    vec(p)
                names.extend(f"th_hat{r}_{j}" for j in range(5))
        elif mode == "hybrid_open_master":
            for p in ("tau_cmd1", "mz1", "ms1"):
                vec(p)
            names.extend(f"th_hat1_{j}" for j in range(5))
            for p in ("z2", "zd2", "zdd2", "int_psistar2", "s2", "zeta_star2",
                      "zeta_star_dot2", "int_qcz2", "w_hat2", "wP_hat2", "wI_hat2"):
                vec(p)
            names.extend(f"th_hat2_{j}" for j in range(5))
        self._cols = {name: np.zeros(n) for name in names}
        self._row = 0

    # -- one plant step ----------------------------------------------------

    def _controller_update(self, which: str):
        sc = self.sc
        mode = sc.controller_mode
        t = self.t
        if which == "master":
            state, line, ctrl = self.master_state, self.bwd_line, self.ctrl_master
            T = self._bwd_delay.at(t)
            self.T2 = T
        else:
            state, line, ctrl = self.slave_state, self.fwd_line, self.ctrl_slave
            T = self._fwd_delay.at(t)
            self.T1 = T
        peer = line.sample_delayed(t, T)
        q_peer_d, xi_peer_d = peer[:self.m], peer[self.m:]
        dt = sc.master_cmd_dt if which == "master" else sc.slave_cmd_dt
        if mode in ("kinematic", "kinematic_fallback"):
            cmd = ctrl.command(state.q, read_inner_command(state), q_peer_d, dt)
        elif mode == "dynsep":
            cmd = ctrl.command(state.q, state.qd, read_inner_command(state),
                               xi_peer_d, dt)
        elif mode == "adaptive":
            cmd = ctrl.command(state.q, state.qd, read_inner_command(state),
                               xi_peer_d, dt)
        else:  # hybrid
            if which == "master":
                self.tau_cmd_master = ctrl.command(state.q, state.qd, xi_peer_d, dt)
                return
            cmd = ctrl.command(state.q, state.qd, read_inner_command(state),
                               xi_peer_d, dt)
        if which == "master":
            self.cmd_master = cmd
        else:
            self.cmd_slave = cmd

    def _log(self):
        c = self._cols
        r = self._row
        m = self.m
        c["t"][r] = self.t
        c["T1"][r] = self.T1
        c["T2"][r] = self.T2

        def put(prefix, v):
            for j in range(m):
                c[f"{prefix}_{j}"][r] = v[j]

        put("q1", self.master_state.q)
        put("q2", self.slave_state.q)
        put("qd1", self.master_state.qd)
        put("qd2", self.slave_state.qd)
        put("qc1", self.master_state.q_c)
        put("qc2", self.slave_state.q_c)
        put("qdot_c1", self.cmd_master)
        put("qdot_c2", self.cmd_slave)
        put("tau1_star", self.tau_op)
        put("tau2_star", self.tau_env)
        mode = self.sc.controller_mode
        if mode in ("kinematic", "kinematic_fallback"):
            put("int_psi1", self.ctrl_master.state.integral_psi)
            put("int_psi2", self.ctrl_slave.state.integral_psi)
            put("qc_star1", self.ctrl_master.state.qc_star)
            put("qc_star2", self.ctrl_slave.state.qc_star)
        elif mode == "dynsep":
            for r_, ctrl in (("1", self.ctrl_master), ("2", self.ctrl_slave)):
                put(f"z{r_}", ctrl.z)
                put(f"zd{r_}", ctrl.zd)
                put(f"zdd{r_}", ctrl.last_zdd)
                put(f"int_psistar{r_}", ctrl.int_qz)
        elif mode == "adaptive":
            for r_, ctrl in (("1", self.ctrl_master), ("2", self.ctrl_slave)):
                self._log_adaptive(r_, ctrl)
        elif mode == "hybrid_open_master":
            put("tau_cmd1", self.tau_cmd_master)
            d = self.ctrl_master.diag
            if d:
                put("mz1", d["z"])
                put("ms1", d["s"])
                for j in range(5):
                    c[f"th_hat1_{j}"][r] = d["theta_hat"][j]
            self._log_adaptive("2", self.ctrl_slave)
        self._row += 1

    def _log_adaptive(self, r_: str, ctrl: AdaptiveController):
        c = self._cols
        r = self._row
        d = ctrl.diag
        if not d:
            return
        m = self.m

        def put(prefix, v):
            for j in range(m):
                c[f"{prefix}_{j}"][r] = v[j]

        put(f"z{r_}", d["z"])
        put(f"zd{r_}", d["zd"])
        put(f"zdd{r_}", d["zdd"])
        put(f"int_psistar{r_}", d["int_psi_star"])
        put(f"s{r_}", d["s"])
        put(f"zeta_star{r_}", d["zeta_star"])
        put(f"zeta_star_dot{r_}", d["zeta_star_dot"])
        put(f"int_qcz{r_}", d["int_qc_minus_z"])
        put(f"w_hat{r_}", d["w_hat"])
        put(f"wP_hat{r_}", d["wP_hat"])
        put(f"wI_hat{r_}", d["wI_hat"])
        for j in range(5):
            c[f"th_hat{r_}_{j}"][r] = d["theta_hat"][j]

    def step(self):
        """Advance one plant step (push signals, update controllers at their
        instants, evaluate torques, log, integrate both robots)."""
        sc = self.sc
        t = self.t
        alpha = self._signal_alpha()
        xi1 = self.master_state.qd + alpha * self.master_state.q
        xi2 = self.slave_state.qd + alpha * self.slave_state.q
        self.fwd_line.push(t, np.concatenate([self.master_state.q, xi1]))
        self.bwd_line.push(t, np.concatenate([self.slave_state.q, xi2]))

        if self.k % self.master_every == 0:
            self._controller_update("master")
        if self.k % self.slave_every == 0:
            self._controller_update("slave")

        if sc.operator.kind == "interactive":
            self.tau_op = self.interactive_tau.copy()
        else:
            self.tau_op = operator_torque(sc.operator, t, self.master_state.q,
                                          self.master_state.qd)
        self.tau_env = environment_torque(sc.environment, self.slave_state.q,
                                          self.slave_state.qd)

        if self.record and self.k % sc.decimation == 0:
            self._log()

        if sc.master.arch == "closed":
            self.master_state = step_closed_robot(
                self.master_state, sc.master.inner, sc.master.model,
                self.tau_op, self.cmd_master, sc.plant_dt)
        else:
            tau_cmd = self.tau_cmd_master
            if sc.master.gravity_precompensated and sc.master.model.g0 != 0.0:
                from telesim.dynamics import gravity_vector
                tau_cmd = tau_cmd + gravity_vector(sc.master.model, self.master_state.q)
            self.master_state = step_open_robot(
                self.master_state, sc.master.model, tau_cmd, self.tau_op,
                sc.plant_dt)
        self.slave_state = step_closed_robot(
            self.slave_state, sc.slave.inner, sc.slave.model,
            -self.tau_env, self.cmd_slave, sc.plant_dt)

        self.k += 1
        self.t = self.k * sc.plant_dt

    def _signal_alpha(self) -> float:
        sc = self.sc
        if sc.controller_mode == "dynsep":
            return sc.dynsep.alpha
        if sc.controller_mode == "adaptive":
            return sc.adaptive_slave.gains.alpha
        if sc.controller_mode == "hybrid_open_master":
            return sc.adaptive_slave.gains.alpha
        return 0.0   # kinematic modes only use the position channel

    def finalize(self, refresh: bool = True) -> Trace:
        """Log the final sample (with a last controller/torque refresh, so
        the closing row follows the same conventions as every other row)
        and assemble the Trace."""
        if self.record:
            if self.k % self.sc.decimation == 0:
                if refresh:
                    t = self.t
                    alpha = self._signal_alpha()
                    xi1 = self.master_state.qd + alpha * self.master_state.q
                    xi2 = self.slave_state.qd + alpha * self.slave_state.q
                    self.fwd_line.push(t, np.concatenate([self.master_state.q, xi1]))
                    self.bwd_line.push(t, np.concatenate([self.slave_state.q, xi2]))
                    if self.k % self.master_every == 0:
                        self._controller_update("master")
                    if self.k % self.slave_every == 0:
                        self._controller_update("slave")
                if self.sc.operator.kind == "interactive":
                    self.tau_op = self.interactive_tau.copy()
                else:
                    self.tau_op = operator_torque(self.sc.operator, self.t,
                                                  self.master_state.q,
                                                  self.master_state.qd)
                self.tau_env = environment_torque(self.sc.environment,
                                                  self.slave_state.q,
                                                  self.slave_state.qd)
                self._log()
            cols = {k: v[:self._row] for k, v in self._cols.items()}
            self.trace = Trace(cols, meta=scenario_to_dict(self.sc))
        return self.trace

    def run(self) -> Trace:
        try:
            while self.k < self.steps:
                self.step()
        except SimulationDiverged as exc:
            trace = self.finalize(refresh=False) if self.record else None
            raise SimulationAbort(f"numeric abort at t={self.t:.6f}: {exc}",
                                  trace) from exc
        return self.finalize()


def run_scenario(sc: Scenario, record: bool = True) -> Trace:
    """Run a scenario end to end and return its Trace.

    Gain-condition checks are evaluated first; failures are recorded as
    warnings in the trace metadata, never fatal.
    """
    sim = TeleopSim(sc, record=record)
    trace = sim.run()
    if trace is not None:
        trace.meta["warnings"] = scenario_warnings(sc)
    return trace


def scenario_warnings(sc: Scenario) -> list[str]:
    """Advisory stability-condition checks for a scenario's gain choices."""
    from telesim import analysis
    warnings = []
    for name, setup in (("master", sc.adaptive_master), ("slave", sc.adaptive_slave)):
        if setup is None:
            continue
        g = setup.gains
        rep = analysis.check_cubic_stability(g.Lambda_D, g.Lambda_P, g.Lambda_I)
        if not rep.passed:
            warnings.append(f"{name}: z-dynamics cubic not exponentially stable")
        spec = sc.master if name == "master" else sc.slave
        if spec.inner is not None:
            rep = analysis.check_gain_condition(
                spec.inner.kd, spec.inner.kp, spec.inner.ki,
                g.gamma, g.gamma_star, epsilon=1e-3)
            if not rep.passed:
                warnings.append(f"{name}: gain condition on (gamma, gamma_star) fails")
    if sc.dynsep is not None:
        g = sc.dynsep
        rep = analysis.check_cubic_stability(g.Lambda_D, g.Lambda_P, g.Lambda_I)
        if not rep.passed:
            warnings.append("dynsep: z-dynamics cubic not exponentially stable")
    return warnings


# ---------------------------------------------------------------------------
# scenario <-> dict codec (the config document mirrors Scenario field for
# field; unknown keys are rejected at every level)

class ConfigError(ValueError):
    pass


def _reject_unknown(d: dict, allowed, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _vec(d, key, where, m=2, default=None, nonneg=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        v = np.asarray(default, dtype=float)
    else:
        raw = d[key]
        if np.isscalar(raw):
            v = np.full(m, float(raw))
        else:
            v = np.asarray(raw, dtype=float)
    if v.shape != (m,):
        raise ConfigError(f"{where}.{key} must be a length-{m} vector")
    if nonneg and np.any(v < 0):
        raise ConfigError(f"{where}.{key} entries must be >= 0")
    return v


def _num(d, key, where, default=None, positive=False, nonneg=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key} is required")
        return default
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a number")
    v = float(v)
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key} must be > 0")
    if nonneg and v < 0:
        raise ConfigError(f"{where}.{key} must be >= 0")
    return v


_MODEL_KEYS = ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2", "g0")


def _model_from(d, where) -> ArmModel:
    if isinstance(d, str):
        if d == "canonical":
            return ArmModel.canonical()
        if d == "haptic":
            return ArmModel.haptic()
        raise ConfigError(f"{where} must be 'canonical', 'haptic', or a parameter map")
    _reject_unknown(d, _MODEL_KEYS, where)
    base = {k: getattr(ArmModel.canonical(), k) for k in _MODEL_KEYS}
    base.update({k: float(v) for k, v in d.items()})
    try:
        return ArmModel(**base)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _model_to(m: ArmModel) -> dict:
    return {k: getattr(m, k) for k in _MODEL_KEYS}


def _robot_from(d: dict, where: str, default_q0) -> RobotSpec:
    _reject_unknown(d, ("arch", "model", "inner_gains", "command_readable",
                        "gravity_precompensated", "q0", "qd0", "qc_star_offset"),
                    where)
    arch = d.get("arch", "closed")
    model = _model_from(d.get("model", "canonical"), f"{where}.model")
    inner = None
    if arch == "closed":
        gd = d.get("inner_gains", {})
        _reject_unknown(gd, ("kd", "kp", "ki", "mode"), f"{where}.inner_gains")
        mode = gd.get("mode", "pid")
        kd = _vec(gd, "kd", f"{where}.inner_gains", default=[2.0, 2.0])
        kp = _vec(gd, "kp", f"{where}.inner_gains", default=[20.0, 20.0])
        default_ki = [0.0, 0.0] if mode == "pd" else [1.0, 1.0]
        ki = _vec(gd, "ki", f"{where}.inner_gains", default=default_ki)
        try:
            inner = InnerGains(kd=kd, kp=kp, ki=ki, mode=mode)
        except ValueError as exc:
            raise ConfigError(f"{where}.inner_gains: {exc}") from exc
    try:
        return RobotSpec(
            arch=arch, model=model, inner=inner,
            command_readable=bool(d.get("command_readable", True)),
            gravity_precompensated=bool(d.get("gravity_precompensated", True)),
            q0=_vec(d, "q0", where, default=default_q0),
            qd0=_vec(d, "qd0", where, default=[0.0, 0.0]),
            qc_star_offset=_vec(d, "qc_star_offset", where, default=[0.0, 0.0]))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _robot_to(r: RobotSpec) -> dict:
    d = {"arch": r.arch, "model": _model_to(r.model),
         "command_readable": r.command_readable,
         "gravity_precompensated": r.gravity_precompensated,
         "q0": r.q0.tolist(), "qd0": r.qd0.tolist(),
         "qc_star_offset": r.qc_star_offset.tolist()}
    if r.inner is not None:
        d["inner_gains"] = {"kd": r.inner.kd.tolist(), "kp": r.inner.kp.tolist(),
                            "ki": r.inner.ki.tolist(), "mode": r.inner.mode}
    return d


def _profile_from(d: dict, where: str) -> DelayProfile:
    _reject_unknown(d, ("kind", "T", "T0", "amplitude", "period", "lo", "hi",
                        "update_period", "seed"), where)
    kind = d.get("kind")
    if kind is None:
        raise ConfigError(f"{where}.kind is required")
    try:
        if kind == "constant":
            return DelayProfile(kind="constant", T=_num(d, "T", where, nonneg=True))
        if kind == "sinusoid":
            return DelayProfile(kind="sinusoid", T0=_num(d, "T0", where),
                                amplitude=_num(d, "amplitude", where, default=0.0),
                                period=_num(d, "period", where, positive=True))
        if kind == "piecewise_uniform":
            return DelayProfile(
                kind="piecewise_uniform",
                lo=_num(d, "lo", where, nonneg=True),
                hi=_num(d, "hi", where, nonneg=True),
                update_period=_num(d, "update_period", where, positive=True),
                seed=int(d.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind must be constant | sinusoid | piecewise_uniform")


def _profile_to(p: DelayProfile) -> dict:
    if p.kind == "constant":
        return {"kind": "constant", "T": p.T}
    if p.kind == "sinusoid":
        return {"kind": "sinusoid", "T0": p.T0, "amplitude": p.amplitude,
                "period": p.period}
    return {"kind": "piecewise_uniform", "lo": p.lo, "hi": p.hi,
            "update_period": p.update_period, "seed": p.seed}


def _adaptive_from(d: dict, where: str) -> AdaptiveSetup:
    _reject_unknown(d, ("alpha", "lam", "Lambda_D", "Lambda_P", "Lambda_I",
                        "gamma", "gamma_star", "Gamma", "Gamma_star",
                        "Gamma_P_star", "Gamma_I_star", "theta_hat0", "w_hat0",
                        "wP_hat0", "wI_hat0", "adapt_gravity"), where)
    gains = AdaptiveGains(
        alpha=_num(d, "alpha", where, default=1.5, positive=True),
        lam=_num(d, "lam", where, default=20.0, positive=True),
        Lambda_D=_vec(d, "Lambda_D", where, default=[15.0, 15.0]),
        Lambda_P=_vec(d, "Lambda_P", where, default=[75.0, 75.0]),
        Lambda_I=_vec(d, "Lambda_I", where, default=[125.0, 125.0]),
        gamma=_num(d, "gamma", where, default=30.0, positive=True),
        gamma_star=_num(d, "gamma_star", where, default=30.0, nonneg=True),
        Gamma=np.asarray(d.get("Gamma", 0.3), dtype=float),
        Gamma_star=_vec(d, "Gamma_star", where, default=[0.005, 0.005]),
        Gamma_P_star=_vec(d, "Gamma_P_star", where, default=[10.0, 10.0]),
        Gamma_I_star=_vec(d, "Gamma_I_star", where, default=[10.0, 10.0]))
    def opt_vec(key, n):
        if key not in d:
            return None
        v = np.asarray(d[key], dtype=float)
        if np.isscalar(d[key]):
            v = np.full(n, float(d[key]))
        if v.shape != (n,):
            raise ConfigError(f"{where}.{key} must be a length-{n} vector")
        return v
    return AdaptiveSetup(gains=gains, theta_hat0=opt_vec("theta_hat0", 5),
                         w_hat0=opt_vec("w_hat0", 2),
                         wP_hat0=opt_vec("wP_hat0", 2),
                         wI_hat0=opt_vec("wI_hat0", 2),
                         adapt_gravity=bool(d.get("adapt_gravity", False)))


def _adaptive_to(a: AdaptiveSetup) -> dict:
    g = a.gains
    d = {"alpha": g.alpha, "lam": g.lam, "Lambda_D": g.Lambda_D.tolist(),
         "Lambda_P": g.Lambda_P.tolist(), "Lambda_I": g.Lambda_I.tolist(),
         "gamma": g.gamma, "gamma_star": g.gamma_star,
         "Gamma": g.Gamma.tolist(), "Gamma_star": g.Gamma_star.tolist(),
         "Gamma_P_star": g.Gamma_P_star.tolist(),
         "Gamma_I_star": g.Gamma_I_star.tolist()}
    for key, v in (("theta_hat0", a.theta_hat0), ("w_hat0", a.w_hat0),
                   ("wP_hat0", a.wP_hat0), ("wI_hat0", a.wI_hat0)):
        if v is not None:
            d[key] = np.asarray(v).tolist()
    d["adapt_gravity"] = a.adapt_gravity
    return d


_TOP_KEYS = ("controller_mode", "duration", "plant_dt", "master_cmd_dt",
             "slave_cmd_dt", "seed", "decimation", "master", "slave",
             "kinematic", "dynsep", "adaptive_master", "adaptive_slave",
             "open_master", "channel_fwd", "channel_bwd", "operator",
             "environment")


def scenario_from_dict(d: dict) -> Scenario:
    """Validate a config document and build the Scenario it describes.

    Omitted fields take documented defaults drawn from the hardware-style
    parameter set (piecewise-uniform delays in [0.3, 0.9] s updated every
    96/100 ms, 1 ms master and 8 ms slave command periods, the stock inner
    gains, and the stock controller constants)."""
    if not isinstance(d, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(d, _TOP_KEYS, "config")
    mode = d.get("controller_mode")
    if mode not in CONTROLLER_MODES:
        raise ConfigError(
            f"controller_mode must be one of {CONTROLLER_MODES}, got {mode!r}")
    duration = _num(d, "duration", "config", positive=True)

    default_master_arch = "open_torque" if mode == "hybrid_open_master" else "closed"
    md = dict(d.get("master", {}))
    md.setdefault("arch", default_master_arch)
    if mode == "hybrid_open_master" and "model" not in md:
        md["model"] = "haptic"
    master = _robot_from(md, "master", default_q0=[0.2, -0.1])
    slave = _robot_from(dict(d.get("slave", {})), "slave", default_q0=[-0.1, 0.1])

    kinematic = None
    if mode in ("kinematic", "kinematic_fallback"):
        kd = dict(d.get("kinematic", {}))
        _reject_unknown(kd, ("lambda", "lambda_P", "lambda_M"), "kinematic")
        lam = _num(kd, "lambda", "kinematic", default=1.0)
        lam_p = _num(kd, "lambda_P", "kinematic", default=2.0)
        lam_m = _num(kd, "lambda_M", "kinematic", default=0.5)
        if lam <= 0:
            raise ConfigError("kinematic.lambda must be > 0")
        if lam_p <= 0:
            raise ConfigError("kinematic.lambda_P must be > 0")
        if lam_m < 0:
            raise ConfigError("kinematic.lambda_M must be > 0 (or 0 to disable "
                              "the drift-restoring integral term)")
        kinematic = KinematicGains(lam=lam, lam_p=lam_p, lam_m=lam_m)

    dynsep = None
    if mode == "dynsep":
        dd = dict(d.get("dynsep", {}))
        _reject_unknown(dd, ("alpha", "lam", "Lambda_D", "Lambda_P", "Lambda_I"),
                        "dynsep")
        dynsep = AdaptiveGains(
            alpha=_num(dd, "alpha", "dynsep", default=1.5, positive=True),
            lam=_num(dd, "lam", "dynsep", default=2.0, positive=True),
            Lambda_D=_vec(dd, "Lambda_D", "dynsep", default=[15.0, 15.0]),
            Lambda_P=_vec(dd, "Lambda_P", "dynsep", default=[75.0, 75.0]),
            Lambda_I=_vec(dd, "Lambda_I", "dynsep", default=[125.0, 125.0]))

    adaptive_master = adaptive_slave = None
    if mode == "adaptive":
        adaptive_master = _adaptive_from(dict(d.get("adaptive_master", {})),
                                         "adaptive_master")
        adaptive_slave = _adaptive_from(dict(d.get("adaptive_slave", {})),
                                        "adaptive_slave")
    if mode == "hybrid_open_master":
        adaptive_slave = _adaptive_from(dict(d.get("adaptive_slave", {})),
                                        "adaptive_slave")

    open_master = None
    if mode == "hybrid_open_master":
        od = dict(d.get("open_master", {}))
        _reject_unknown(od, ("alpha", "lam", "lam_M", "K1", "Gamma1",
                             "adapt_gravity"), "open_master")
        open_master = OpenMasterParams(
            alpha=_num(od, "alpha", "open_master", default=1.5, positive=True),
            lam=_num(od, "lam", "open_master", default=36.0, positive=True),
            lam_m=_num(od, "lam_M", "open_master", default=2.0, positive=True),
            K1=_vec(od, "K1", "open_master", default=[0.02, 0.02]),
            Gamma1=np.asarray(od.get("Gamma1", 0.0005), dtype=float),
            adapt_gravity=bool(od.get("adapt_gravity", False)))

    fwd = _profile_from(dict(d.get("channel_fwd", {"kind": "piecewise_uniform",
                                                   "lo": 0.3, "hi": 0.9,
                                                   "update_period": 0.096})),
                        "channel_fwd")
    bwd = _profile_from(dict(d.get("channel_bwd", {"kind": "piecewise_uniform",
                                                   "lo": 0.3, "hi": 0.9,
                                                   "update_period": 0.100})),
                        "channel_bwd")

    opd = dict(d.get("operator", {"kind": "none"}))
    _reject_unknown(opd, ("kind", "tau", "t_on", "t_off", "K_h", "D_h",
                          "q_target"), "operator")
    kind = opd.get("kind", "none")
    try:
        if kind in ("constant", "pulse"):
            operator = OperatorModel(kind=kind, tau=_vec(opd, "tau", "operator"),
                                     t_on=_num(opd, "t_on", "operator", default=0.0),
                                     t_off=_num(opd, "t_off", "operator",
                                                default=duration))
        elif kind == "spring_pull":
            operator = OperatorModel(
                kind=kind, K_h=_vec(opd, "K_h", "operator", nonneg=True),
                D_h=_vec(opd, "D_h", "operator", default=[0.0, 0.0], nonneg=True),
                q_target=_vec(opd, "q_target", "operator"))
        else:
            operator = OperatorModel(kind=kind)
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}") from exc

    end = dict(d.get("environment", {"kind": "none"}))
    _reject_unknown(end, ("kind", "q_wall", "K_e", "D_e"), "environment")
    try:
        if end.get("kind", "none") == "joint_wall":
            environment = EnvironmentModel(
                kind="joint_wall", q_wall=_vec(end, "q_wall", "environment"),
                K_e=_vec(end, "K_e", "environment", nonneg=True),
                D_e=_vec(end, "D_e", "environment", default=[0.0, 0.0], nonneg=True))
        else:
            environment = EnvironmentModel(kind="none")
    except ValueError as exc:
        raise ConfigError(f"environment: {exc}") from exc

    try:
        return Scenario(
            master=master, slave=slave, controller_mode=mode, duration=duration,
            plant_dt=_num(d, "plant_dt", "config", default=1e-3, positive=True),
            master_cmd_dt=_num(d, "master_cmd_dt", "config", default=1e-3,
                               positive=True),
            slave_cmd_dt=_num(d, "slave_cmd_dt", "config", default=8e-3,
                              positive=True),
            seed=int(d.get("seed", 42)),
            decimation=int(d.get("decimation", 1)),
            kinematic=kinematic, dynsep=dynsep,
            adaptive_master=adaptive_master, adaptive_slave=adaptive_slave,
            open_master=open_master, channel_fwd=fwd, channel_bwd=bwd,
            operator=operator, environment=environment)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def scenario_to_dict(sc: Scenario) -> dict:
    d = {"controller_mode": sc.controller_mode, "duration": sc.duration,
         "plant_dt": sc.plant_dt, "master_cmd_dt": sc.master_cmd_dt,
         "slave_cmd_dt": sc.slave_cmd_dt, "seed": sc.seed,
         "decimation": sc.decimation,
         "master": _robot_to(sc.master), "slave": _robot_to(sc.slave),
         "channel_fwd": _profile_to(sc.channel_fwd),
         "channel_bwd": _profile_to(sc.channel_bwd)}
    if sc.kinematic is not None:
        d["kinematic"] = {"lambda": sc.kinematic.lam,
                          "lambda_P": sc.kinematic.lam_p,
                          "lambda_M": sc.kinematic.lam_m}
    if sc.dynsep is not None:
        g = sc.dynsep
        d["dynsep"] = {"alpha": g.alpha, "lam": g.lam,
                       "Lambda_D": g.Lambda_D.tolist(),
                       "Lambda_P": g.Lambda_P.tolist(),
                       "Lambda_I": g.Lambda_I.tolist()}
    if sc.adaptive_master is not None:
        d["adaptive_master"] = _adaptive_to(sc.adaptive_master)
    if sc.adaptive_slave is not None:
        d["adaptive_slave"] = _adaptive_to(sc.adaptive_slave)
    if sc.open_master is not None:
        p = sc.open_master
        d["open_master"] = {"alpha": p.alpha, "lam": p.lam, "lam_M": p.lam_m,
                            "K1": p.K1.tolist(), "Gamma1": p.Gamma1.tolist(),
                            "adapt_gravity": p.adapt_gravity}
    op = sc.operator
    od = {"kind": op.kind}
    if op.kind in ("constant", "pulse"):
        od["tau"] = op.tau.tolist()
    if op.kind == "pulse":
        od.update(t_on=op.t_on, t_off=op.t_off)
    if op.kind == "spring_pull":
        od.update(K_h=op.K_h.tolist(), D_h=op.D_h.tolist(),
                  q_target=op.q_target.tolist())
    d["operator"] = od
    env = sc.environment
    ed = {"kind": env.kind}
    if env.kind == "joint_wall":
        ed.update(q_wall=env.q_wall.tolist(), K_e=env.K_e.tolist(),
                  D_e=env.D_e.tolist())
    d["environment"] = ed
    return d
