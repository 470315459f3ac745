"""Command-line front end: scenario configs in, traces and reports out.

Subcommands:

- run <config> -o <trace.csv>      simulate and write the trace (CSV + meta)
- check-gains <config>             stability-condition reports for the config
- analyze <trace.csv> --mode <m>   sync / reflection / residual metrics
- probe-manipulability <config>    constant-torque drift classification
- serve <config> --port <p>        live bridge for the operator cockpit

Exit codes: 0 success, 1 analysis-threshold failure, 2 config error,
3 numeric abort.  The TELESIM_SEED environment variable overrides the
config seed (for CI sweeps).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from telesim import analysis
from telesim.control import ConfigurationError
from telesim.dynamics import mass_matrix
from telesim.sim import (ConfigError, Scenario, SimulationAbort, Trace,
                         run_scenario, scenario_from_dict, scenario_warnings)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def parse_config(path: str) -> Scenario:
    """Load, validate and default-fill a scenario config document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    sc = scenario_from_dict(doc)
    env_seed = os.environ.get("TELESIM_SEED")
    if env_seed is not None:
        try:
            sc = replace(sc, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigError(f"TELESIM_SEED must be an integer: {env_seed!r}") from exc
    return sc


def write_trace(trace: Trace, path: str) -> None:
    """CSV with a fixed column order and 17-significant-digit floats
    (lossless round trip); scenario metadata goes to <path>.meta.json."""
    names = trace.column_order
    cols = [trace.columns[n] for n in names]
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(names) + "\n")
            for i in range(len(trace)):
                fh.write(",".join("%.17g" % c[i] for c in cols) + "\n")
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(trace.meta, fh, indent=1, sort_keys=True)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path!r}: {exc}") from exc


def read_trace(path: str) -> Trace:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            names = header.split(",")
            body = fh.read()
        if body.strip():
            data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
        else:
            data = np.zeros((0, len(names)))
    except OSError as exc:
        raise OSError(f"cannot read trace from {path!r}: {exc}") from exc
    meta = {}
    meta_path = path + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    return Trace({n: data[:, j].copy() for j, n in enumerate(names)}, meta=meta)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_run(args) -> int:
    sc = parse_config(args.config)
    for w in scenario_warnings(sc):
        print(f"warning: {w}", file=sys.stderr)
    try:
        trace = run_scenario(sc)
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.trace is not None and args.output:
            write_trace(exc.trace, args.output)
            print(f"partial trace written to {args.output}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.output:
        write_trace(trace, args.output)
    print(f"simulated {sc.duration:g} s ({len(trace)} samples)"
          + (f" -> {args.output}" if args.output else ""))
    return EXIT_OK


def _cmd_check_gains(args) -> int:
    sc = parse_config(args.config)
    reports = []
    for name, setup in (("master", sc.adaptive_master),
                        ("slave", sc.adaptive_slave)):
        if setup is None:
            continue
        g = setup.gains
        reports.append((f"z-dynamics cubic ({name})",
                        analysis.check_cubic_stability(g.Lambda_D, g.Lambda_P,
                                                       g.Lambda_I)))
        spec = sc.master if name == "master" else sc.slave
        if spec.inner is not None:
            reports.append((f"gain condition ({name})",
                            analysis.check_gain_condition(
                                spec.inner.kd, spec.inner.kp, spec.inner.ki,
                                g.gamma, g.gamma_star, epsilon=args.epsilon)))
    if sc.dynsep is not None:
        g = sc.dynsep
        reports.append(("z-dynamics cubic (dynsep)",
                        analysis.check_cubic_stability(g.Lambda_D, g.Lambda_P,
                                                       g.Lambda_I)))
    # point-mass PID rule per joint, with the joint's rest inertia as the mass
    for name, spec in (("master", sc.master), ("slave", sc.slave)):
        if spec.inner is None:
            continue
        m_eff = np.diag(mass_matrix(spec.model, spec.q0))
        for k in range(len(m_eff)):
            reports.append(
                (f"point-mass PID rule ({name}, joint {k})",
                 analysis.check_point_mass_pid(m_eff[k], spec.inner.kd[k],
                                               spec.inner.kp[k],
                                               max(spec.inner.ki[k], 1e-12))))
    if not reports:
        print("no gain conditions apply to this controller mode")
        return EXIT_OK
    ok = True
    for name, rep in reports:
        print(analysis.format_stability_report(name, rep))
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_THRESHOLD


def _cmd_analyze(args) -> int:
    trace = read_trace(args.trace)
    if not trace.meta:
        print("error: trace has no .meta.json sidecar; analysis needs the "
              "scenario metadata", file=sys.stderr)
        return EXIT_CONFIG
    failed = False
    modes = [args.mode] if args.mode != "all" else ["sync", "reflection", "residual"]
    out = {}
    for mode in modes:
        if mode == "sync":
            m = analysis.sync_metrics(trace, threshold=args.sync_threshold)
            out["final_error"] = m["final_error"]
            out["settle_time"] = m["settle_time"]
            ok = m["final_error"] < args.sync_threshold
            print(f"sync: final_error={m['final_error']:.6g} rad, "
                  f"settle_time={m['settle_time']}"
                  f" -> {'PASS' if ok else 'FAIL'} (threshold {args.sync_threshold:g})")
            failed |= not ok
        elif mode == "reflection":
            try:
                est = analysis.reflection_ratio(trace, args.window_fraction)
            except analysis.NoContactError as exc:
                if args.mode == "all":
                    print(f"reflection: skipped ({exc})")
                    continue
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_THRESHOLD
            rel = np.abs(est.ratio - est.theoretical) / np.abs(est.theoretical)
            ok = bool(np.all(np.isfinite(est.ratio)) and np.all(rel <= args.ratio_tol))
            out["reflection_ratio"] = est.ratio
            out["reflection_theoretical"] = est.theoretical
            print(f"reflection: ratio={est.ratio.tolist()} vs "
                  f"theoretical={est.theoretical.tolist()} over window "
                  f"{est.window} -> {'PASS' if ok else 'FAIL'} "
                  f"(tolerance {args.ratio_tol:.0%})")
            failed |= not ok
        elif mode == "residual":
            try:
                r = analysis.closed_loop_residual(trace)
            except ValueError as exc:
                if args.mode == "all":
                    print(f"residual: skipped ({exc})")
                    continue
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            out["max_residual"] = r["max_residual"]
            ok = r["max_residual"] < args.residual_tol
            print(f"residual: max={r['max_residual']:.6g} (relative; abs "
                  f"{r['max_residual_abs']:.6g}, scale {r['scale']:.6g}) -> "
                  f"{'PASS' if ok else 'FAIL'} (tolerance {args.residual_tol:g})")
            failed |= not ok
        else:
            print(f"error: unknown analysis mode {mode!r}", file=sys.stderr)
            return EXIT_CONFIG
    for line in analysis.summary_lines(out):
        print(line)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write("\n".join(analysis.summary_lines(out)) + "\n")
    return EXIT_THRESHOLD if failed else EXIT_OK


def _cmd_probe(args) -> int:
    sc = parse_config(args.config)
    torque = np.array([float(x) for x in args.torque.split(",")])
    verdict = analysis.manipulability_probe(sc, torque, horizon=args.horizon)
    print(f"classification: {verdict.classification}")
    print(f"drift_slope: {verdict.drift_slope.tolist()} rad/s")
    print(f"saturation_delta: {verdict.saturation_delta:.6g} rad")
    print(f"fit_residual: {verdict.fit_residual:.6g} rad")
    return EXIT_OK if verdict.classification != "inconclusive" else EXIT_THRESHOLD


def _cmd_serve(args) -> int:
    from telesim import bridge
    sc = parse_config(args.config)
    if sc.operator.kind != "interactive":
        raise ConfigError("serve requires operator.kind = 'interactive'")
    bridge.serve_session(sc, port=args.port, host=args.host,
                         static_dir=args.static_dir,
                         allow_torque_input=args.allow_torque_input)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="telesim", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="trace CSV output path")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("check-gains", help="stability-condition reports")
    p.add_argument("config")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.set_defaults(fn=_cmd_check_gains)

    p = sub.add_parser("analyze", help="trace metrics and pass/fail checks")
    p.add_argument("trace")
    p.add_argument("--mode", default="all",
                   choices=["sync", "reflection", "residual", "all"])
    p.add_argument("--sync-threshold", type=float, default=0.01)
    p.add_argument("--window-fraction", type=float, default=0.2)
    p.add_argument("--ratio-tol", type=float, default=0.05)
    p.add_argument("--residual-tol", type=float, default=1e-3)
    p.add_argument("--summary", help="write key=value summary to this path")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("probe-manipulability",
                       help="constant-torque drift classification")
    p.add_argument("config")
    p.add_argument("--torque", default="0.5,0")
    p.add_argument("--horizon", type=float, default=40.0)
    p.set_defaults(fn=_cmd_probe)

    p = sub.add_parser("serve", help="live websocket bridge for the cockpit")
    p.add_argument("config")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", default=None,
                   help="optionally serve this directory over HTTP")
    p.add_argument("--allow-torque-input", action="store_true")
    p.set_defaults(fn=_cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
