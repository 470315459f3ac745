"""Stability-condition checkers and trace-level claim verifiers.

The checkers are Routh-Hurwitz style inequalities on the design constants;
the trace verifiers read a recorded run and measure synchronization, the
static torque quasi-reflection ratio, the constant-torque drift that
separates infinite (degree one) from finite manipulability, and the
residuals of the closed-loop equations the controllers are supposed to
realize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from telesim.dynamics import ArmModel, coriolis_matrix, mass_matrix, regressor

# thresholds for the drift probe
SLOPE_FLOOR = 1e-3        # rad/s below which a fitted ramp stops counting
SATURATION_EPS = 1e-3     # rad within which the average position is "settled"
FIT_RESIDUAL_FRAC = 0.05  # max deviation from the ramp fit, as ramp fraction
TORQUE_FLOOR = 1e-3       # N*m below which torque samples are excluded


class NoContactError(ValueError):
    """Reflection ratio requested on a trace without measurable contact."""


class TraceSchemaError(KeyError):
    """A verifier is missing required trace columns."""


@dataclass
class StabilityReport:
    passed: bool
    per_joint: list[dict] = field(default_factory=list)

    def margins(self) -> np.ndarray:
        return np.array([j["margin"] for j in self.per_joint])


def _diag_entries(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        if not np.allclose(a, np.diag(np.diag(a))):
            raise ValueError(f"{name} must be diagonal")
        a = np.diag(a)
    elif a.ndim == 0:
        a = a[None]
    return a


def solve_cubic(d: float, p: float, i: float) -> np.ndarray:
    """Roots of s^3 + d s^2 + p s + i.

    Multiple roots are resolved through the discriminant so that exact
    repeated-root inputs return exact repeated roots (a companion-matrix
    solver splits a triple root by ~1e-5).
    """
    disc = (18.0 * d * p * i - 4.0 * d**3 * i + d * d * p * p
            - 4.0 * p**3 - 27.0 * i * i)
    d0 = d * d - 3.0 * p
    if disc == 0.0:
        if d0 == 0.0:
            r = -d / 3.0
            return np.array([r, r, r])
        double = (9.0 * i - d * p) / (2.0 * d0)
        simple = (4.0 * d * p - 9.0 * i - d**3) / d0
        return np.array([double, double, simple])
    return np.roots([1.0, d, p, i])


def check_cubic_stability(Lambda_D, Lambda_P, Lambda_I) -> StabilityReport:
    """Exponential stability of y''' + Ld y'' + Lp y' + Li y = 0, per joint.

    Routh-Hurwitz for the cubic: all coefficients positive and d*p > i.
    The reported margin is d*p - i when all coefficients are positive, else
    the offending (non-positive) coefficient, so margin > 0 iff stable.
    """
    ld = _diag_entries(Lambda_D, "Lambda_D")
    lp = _diag_entries(Lambda_P, "Lambda_P")
    li = _diag_entries(Lambda_I, "Lambda_I")
    per_joint = []
    for k, (d, p, i) in enumerate(zip(ld, lp, li)):
        coeff_min = min(d, p, i)
        if coeff_min <= 0.0:
            margin = coeff_min
            detail = f"joint {k}: coefficient {coeff_min:g} <= 0 (zero/unstable root)"
            roots = solve_cubic(d, p, i)
        else:
            margin = d * p - i
            roots = solve_cubic(d, p, i)
            detail = (f"joint {k}: d*p - i = {margin:g}, "
                      f"roots {np.round(roots, 9).tolist()}")
        per_joint.append({"margin": float(margin), "detail": detail,
                          "roots": roots})
    return StabilityReport(passed=all(j["margin"] > 0 for j in per_joint),
                           per_joint=per_joint)


def check_gain_condition(KD, KP, KI, gamma: float, gamma_star: float,
                         epsilon: float) -> StabilityReport:
    """Joint-wise gain conditions on (gamma, gamma_star) for the adaptive
    controller against the true inner gains.

    Per joint: gamma_star >= KI/KD and
    gamma >= epsilon + (gamma_star - KI/KD) * KD/KP, with epsilon required
    to satisfy epsilon <= KP/KD.  Margins of exactly zero pass (the
    conditions are non-strict).
    """
    kd = _diag_entries(KD, "KD")
    kp = _diag_entries(KP, "KP")
    ki = _diag_entries(KI, "KI")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    per_joint = []
    ok = True
    for k in range(len(kd)):
        if epsilon > kp[k] / kd[k]:
            ok = False
            per_joint.append({"margin": float("-inf"),
                              "detail": f"joint {k}: invalid epsilon "
                                        f"({epsilon:g} > KP/KD = {kp[k] / kd[k]:g})"})
            continue
        wi = ki[k] / kd[k]
        m42 = gamma_star - wi
        m43 = gamma - epsilon - (gamma_star - wi) * (kd[k] / kp[k])
        ok = ok and m42 >= 0.0 and m43 >= 0.0
        per_joint.append({
            "margin": float(min(m42, m43)),
            "margin_42": float(m42), "margin_43": float(m43),
            "detail": f"joint {k}: gamma_star - KI/KD = {m42:g}, "
                      f"gamma - eps - (gamma_star - KI/KD)*KD/KP = {m43:g}"})
    return StabilityReport(passed=ok, per_joint=per_joint)


def check_point_mass_pid(m_star: float, kD: float, kP: float,
                         kI: float) -> StabilityReport:
    """Stability of a PID-positioned point mass: kD*kP > m*kI."""
    if min(m_star, kD, kP, kI) <= 0:
        raise ValueError("point-mass check requires positive m*, kD, kP, kI")
    margin = kD * kP - m_star * kI
    detail = f"kD*kP - m**kI = {margin:g}"
    return StabilityReport(passed=margin > 0,
                           per_joint=[{"margin": float(margin), "detail": detail}])


# ---------------------------------------------------------------------------
# trace verifiers

def _require(trace, prefixes):
    for p in prefixes:
        if f"{p}_0" not in trace.columns and p not in trace.columns:
            raise TraceSchemaError(f"trace is missing required column(s) {p!r}")


def sync_metrics(trace, threshold: float = 0.01) -> dict:
    """Synchronization error ||q1 - q2||_inf over time.

    settle_time is the first time after which the error stays below the
    threshold for the rest of the trace; None when that never happens.
    """
    _require(trace, ["q1", "q2"])
    err = np.max(np.abs(trace.vec("q1") - trace.vec("q2")), axis=1)
    t = trace.t
    below = err < threshold
    settle = None
    if below[-1]:
        # last index where the error was at/above threshold
        above = np.nonzero(~below)[0]
        settle = float(t[0]) if len(above) == 0 else float(t[above[-1] + 1])
    return {"final_error": float(err[-1]), "settle_time": settle,
            "error_series": err}


@dataclass
class ReflectionEstimate:
    ratio: np.ndarray
    window: tuple[float, float]
    theoretical: np.ndarray
    n_samples: np.ndarray


def theoretical_reflection_ratio(meta: dict) -> np.ndarray:
    """Elementwise operator/environment torque ratio the theory predicts at
    the static state: KI1/KI2 for the kinematic and dynamic-separation
    controllers, (KI1/Lambda_I1)/(KI2/Lambda_I2) for the adaptive one."""
    ki1 = np.asarray(meta["master"]["inner_gains"]["ki"], dtype=float)
    ki2 = np.asarray(meta["slave"]["inner_gains"]["ki"], dtype=float)
    mode = meta["controller_mode"]
    if mode in ("kinematic", "kinematic_fallback", "dynsep"):
        return ki1 / ki2
    if mode == "adaptive":
        li1 = np.asarray(meta["adaptive_master"]["Lambda_I"], dtype=float)
        li2 = np.asarray(meta["adaptive_slave"]["Lambda_I"], dtype=float)
        return (ki1 / li1) / (ki2 / li2)
    raise ValueError(f"no reflection limit for controller mode {mode!r}")


def reflection_ratio(trace, window_fraction: float,
                     torque_floor: float = TORQUE_FLOOR) -> ReflectionEstimate:
    """Mean elementwise tau1*/tau2* over the trailing window.

    Samples where |tau2*| < torque_floor are excluded joint-wise; a trace
    with no usable sample at all raises NoContactError."""
    if not (0.0 < window_fraction <= 1.0):
        raise ValueError("window_fraction must be in (0, 1]")
    _require(trace, ["tau1_star", "tau2_star"])
    t = trace.t
    t0 = t[-1] - window_fraction * (t[-1] - t[0])
    sel = t >= t0
    tau1 = trace.vec("tau1_star")[sel]
    tau2 = trace.vec("tau2_star")[sel]
    m = tau1.shape[1]
    ratio = np.full(m, np.nan)
    counts = np.zeros(m, dtype=int)
    for j in range(m):
        mask = np.abs(tau2[:, j]) >= torque_floor
        counts[j] = int(mask.sum())
        if counts[j] > 0:
            ratio[j] = float(np.mean(tau1[mask, j] / tau2[mask, j]))
    if counts.sum() == 0:
        raise NoContactError(
            f"every tau2* sample in the window is below {torque_floor:g} N*m")
    theo = theoretical_reflection_ratio(trace.meta)
    return ReflectionEstimate(ratio=ratio, window=(float(t0), float(t[-1])),
                              theoretical=theo, n_samples=counts)


@dataclass
class ManipulabilityVerdict:
    drift_slope: np.ndarray
    saturation_delta: float
    classification: str
    fit_residual: float = 0.0


def manipulability_probe(scenario_base, probe_torque, horizon: float,
                         slope_floor: float = SLOPE_FLOOR,
                         saturation_eps: float = SATURATION_EPS) -> ManipulabilityVerdict:
    """Constant-torque drift probe of the torque-to-average-position map.

    A steady ramp of q_ave = (q1 + q2)/2 under a constant operator torque is
    the behavioral signature of one pure integrator in that map (infinite
    manipulability, degree one); a saturating q_ave means the map is a
    bounded offset (finite manipulability).
    """
    from dataclasses import replace
    from telesim.sim import EnvironmentModel, OperatorModel, run_scenario
    sc = replace(scenario_base,
                 operator=OperatorModel(kind="constant",
                                        tau=np.asarray(probe_torque, dtype=float)),
                 environment=EnvironmentModel(kind="none"),
                 duration=float(horizon))
    trace = run_scenario(sc)
    t = trace.t
    q_ave = 0.5 * (trace.vec("q1") + trace.vec("q2"))
    half = len(t) // 2
    tw, qw = t[half:], q_ave[half:]
    slopes = np.array([np.polyfit(tw, qw[:, j], 1)[0] for j in range(qw.shape[1])])
    jmax = int(np.argmax(np.abs(slopes)))
    fit = np.polyval(np.polyfit(tw, qw[:, jmax], 1), tw)
    fit_residual = float(np.max(np.abs(qw[:, jmax] - fit)))
    ramp_amplitude = abs(slopes[jmax]) * (tw[-1] - tw[0])
    saturation_delta = float(np.max(np.abs(q_ave[-1] - q_ave[half])))

    if saturation_delta < saturation_eps:
        cls = "finite"
    elif (abs(slopes[jmax]) >= slope_floor
          and fit_residual <= FIT_RESIDUAL_FRAC * ramp_amplitude):
        cls = "infinite_degree_one"
    else:
        cls = "inconclusive"
    return ManipulabilityVerdict(drift_slope=slopes,
                                 saturation_delta=saturation_delta,
                                 classification=cls, fit_residual=fit_residual)


# ---------------------------------------------------------------------------
# closed-loop residuals

def _central_diff(x: np.ndarray, dt: float) -> np.ndarray:
    """Second-order derivative estimate; one-sided stencils at the ends."""
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt)
    d[-1] = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dt)
    return d


def _cumtrapz(x: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(x)
    np.cumsum(0.5 * dt * (x[1:] + x[:-1]), axis=0, out=out[1:])
    return out


def _delayed_series(sig: np.ndarray, t: np.ndarray, T: np.ndarray) -> np.ndarray:
    """sig(t - T(t)) by linear interpolation on the trace grid, clamped at
    the start (matches the delay-line convention)."""
    tq = np.clip(t - T, t[0], t[-1])
    out = np.empty_like(sig)
    for j in range(sig.shape[1]):
        out[:, j] = np.interp(tq, t, sig[:, j])
    return out


def _delay_update_mask(T1: np.ndarray, T2: np.ndarray) -> np.ndarray:
    """True where the residual is meaningful: excludes +-1 sample around any
    delay-profile jump, plus the very ends (stencil quality)."""
    n = len(T1)
    bad = np.zeros(n, dtype=bool)
    for T in (T1, T2):
        jump = np.nonzero(np.diff(T) != 0.0)[0]
        for i in jump:
            bad[max(i - 1, 0):min(i + 3, n)] = True
    bad[0] = bad[-1] = True
    return ~bad


def closed_loop_residual(trace, mode: str | None = None) -> dict:
    """Defect of the closed-loop equation the controller is meant to induce.

    kinematic: qdot - F_D(q) - psidot - lam_P psi - lam_M int(psi), with
    qdot and psidot by central differences and the delayed peer positions
    reconstructed from the logged delays.

    adaptive: defect of M(q) sdot + C(q, qdot) s against the torque-side
    expression in the tracking-error subsystem, per adaptive robot.

    Values are reported relative to the largest participating term; samples
    within one step of a delay jump are excluded.
    """
    meta = trace.meta
    mode = mode or meta["controller_mode"]
    t = trace.t
    dt = float(t[1] - t[0])
    keep = _delay_update_mask(trace.columns["T1"], trace.columns["T2"])

    if mode in ("kinematic", "kinematic_fallback"):
        _require(trace, ["q1", "q2", "qc1", "qc2"])
        lam = meta["kinematic"]["lambda"]
        lam_p = meta["kinematic"]["lambda_P"]
        lam_m = meta["kinematic"]["lambda_M"]
        q1, q2 = trace.vec("q1"), trace.vec("q2")
        if mode == "kinematic":
            ref1, ref2 = trace.vec("qc1"), trace.vec("qc2")
        else:
            ref1, ref2 = trace.vec("qc_star1"), trace.vec("qc_star2")
        res, scale = [], 0.0
        for q, ref, peer, T in ((q1, ref1, q2, trace.columns["T2"]),
                                (q2, ref2, q1, trace.columns["T1"])):
            psi = q - ref
            int_psi = _cumtrapz(psi, dt)
            qdot = np.apply_along_axis(_central_diff, 0, q, dt)
            psidot = np.apply_along_axis(_central_diff, 0, psi, dt)
            f_d = -lam * (q - _delayed_series(peer, t, T))
            r = qdot - f_d - psidot - lam_p * psi - lam_m * int_psi
            res.append(r)
            for term in (qdot, f_d, psidot, lam_p * psi, lam_m * int_psi):
                scale = max(scale, float(np.max(np.abs(term[keep]))))
        max_abs = max(float(np.max(np.abs(r[keep]))) for r in res)
        scale = max(scale, 1e-12)
        return {"max_residual": max_abs / scale, "max_residual_abs": max_abs,
                "scale": scale}

    if mode in ("adaptive", "hybrid_open_master"):
        robots = ["1", "2"] if mode == "adaptive" else ["2"]
        max_abs, scale = 0.0, 0.0
        for r_ in robots:
            _require(trace, [f"z{r_}", f"zd{r_}", f"s{r_}", f"zeta_star{r_}",
                             f"zeta_star_dot{r_}", f"int_psistar{r_}",
                             f"int_qcz{r_}"])
            side = "master" if r_ == "1" else "slave"
            rs = meta[side]
            model = ArmModel(**rs["model"])
            kd = np.asarray(rs["inner_gains"]["kd"], dtype=float)
            kp = np.asarray(rs["inner_gains"]["kp"], dtype=float)
            ki = np.asarray(rs["inner_gains"]["ki"], dtype=float)
            theta_true = model.dyn_params().theta
            w_p, w_i, w = kp / kd, ki / kd, 1.0 / kd

            q = trace.vec(f"q{r_}")
            qd = trace.vec(f"qd{r_}")
            qc = trace.vec(f"qc{r_}")
            z = trace.vec(f"z{r_}")
            zd = trace.vec(f"zd{r_}")
            s = trace.vec(f"s{r_}")
            zeta = trace.vec(f"zeta_star{r_}")
            zetad = trace.vec(f"zeta_star_dot{r_}")
            int_ps = trace.vec(f"int_psistar{r_}")
            int_qcz = trace.vec(f"int_qcz{r_}")
            th_hat = trace.vec(f"th_hat{r_}")
            w_hat = trace.vec(f"w_hat{r_}")
            wp_hat = trace.vec(f"wP_hat{r_}")
            wi_hat = trace.vec(f"wI_hat{r_}")
            tau_star = trace.vec(f"tau{r_}_star")
            sgn = 1.0 if r_ == "1" else -1.0

            sdot = np.apply_along_axis(_central_diff, 0, s, dt)
            n = len(t)
            lhs = np.empty_like(s)
            y_dth = np.empty_like(s)
            y_th_hat = np.empty_like(s)
            for i in range(n):
                M = mass_matrix(model, q[i])
                C = coriolis_matrix(model, q[i], qd[i])
                lhs[i] = M @ sdot[i] + C @ s[i]
                Y = regressor(q[i], qd[i], zeta[i], zetad[i])
                y_dth[i] = Y @ (th_hat[i] - theta_true)
                y_th_hat[i] = Y @ th_hat[i]

            psi_star = q - z
            psid_star = qd - zd
            term_pid = -kd * (psid_star + w_p * psi_star + w_i * int_ps)
            term_wp = kd * (z - qc) * (wp_hat - w_p)
            term_wi = kd * (-int_qcz) * (wi_hat - w_i)
            term_w = kd * y_th_hat * (w_hat - w)
            rhs = term_pid + term_wp + term_wi + y_dth + term_w + sgn * tau_star
            res = lhs - rhs
            max_abs = max(max_abs, float(np.max(np.abs(res[keep]))))
            for term in (lhs, term_pid, term_wp, term_wi, y_dth, term_w, tau_star):
                scale = max(scale, float(np.max(np.abs(term[keep]))))
        scale = max(scale, 1e-12)
        return {"max_residual": max_abs / scale, "max_residual_abs": max_abs,
                "scale": scale}

    raise ValueError(f"no residual defined for controller mode {mode!r}")


# ---------------------------------------------------------------------------
# report rendering

def summary_lines(metrics: dict) -> list[str]:
    """Machine-readable key=value lines (one metric per line)."""
    lines = []
    for key, val in metrics.items():
        if isinstance(val, np.ndarray):
            val = ",".join(f"{v:.12g}" for v in np.atleast_1d(val))
        elif isinstance(val, float):
            val = f"{val:.12g}"
        elif val is None:
            val = "none"
        lines.append(f"{key}={val}")
    return lines


def format_stability_report(name: str, report: StabilityReport) -> str:
    lines = [f"{name}: {'PASS' if report.passed else 'FAIL'}"]
    for j in report.per_joint:
        lines.append(f"  {j['detail']}")
    return "\n".join(lines)
