"""Config-driven command line: speeds, semiwave, simulate, sweep, check.

Exit codes: 0 success, 2 model-regime or configuration error, 3 solver
failure, 4 I/O failure. All numeric output uses 17 significant digits;
nothing in the package draws random numbers, so runs are bit-reproducible
(--seedless records that assertion in the manifest).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analysis, fbsolver, model, semiwave
from .config import (
    ConfigError,
    RunConfig,
    build_initial_data,
    build_nonlinearity,
    build_params,
    build_semiwave_numerics,
    build_solver_numerics,
    build_stop,
    sweep_cells,
)
from .errors import ModelRegimeError, NoPositiveRoot, SolverError
from ._format import fmt, json_dumps, write_csv

EXIT_OK = 0
EXIT_MODEL = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _outdir(cfg: RunConfig, args) -> str:
    path = args.out or cfg.get("output.dir") or "."
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".write-probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
    return path


def _file_entry(outdir: str, name: str) -> dict:
    with open(os.path.join(outdir, name), "rb") as fh:
        blob = fh.read()
    return {"name": name, "sha256": hashlib.sha256(blob).hexdigest(), "bytes": len(blob)}


def _write_manifest(outdir: str, names: list, seedless: bool, failed: bool) -> None:
    manifest = {
        "failed": failed,
        "seedless": seedless,
        "files": [_file_entry(outdir, n) for n in names],
    }
    with open(os.path.join(outdir, "manifest.json"), "w", newline="\n") as fh:
        fh.write(json_dumps(manifest))


def _speed_summary(cfg: RunConfig) -> dict:
    nl = build_nonlinearity(cfg)
    params = build_params(cfg)
    r0 = model.compute_R0(nl, params)
    if r0 <= 1.0:
        raise NoPositiveRoot(f"R0 = {fmt(r0)} <= 1: spreading regime required")
    eq = model.compute_equilibrium(nl, params)
    l0 = model.compute_l0(nl, params)
    pair, _profile = semiwave.find_c0(nl, params, build_semiwave_numerics(cfg))
    beta0, _ = semiwave.decay_rate_theoretical(nl, params, 0.0, eq)
    beta_c0, _ = semiwave.decay_rate_theoretical(nl, params, pair.c0, eq)
    return {
        "R0": r0,
        "u_star": eq.u_star,
        "v_star": eq.v_star,
        "l0": l0,
        "c_star": pair.c_star,
        "lambda_star": pair.lambda_star,
        "c0": pair.c0,
        "F_residual": pair.F_residual,
        "beta": beta_c0,
        "beta0": beta0,
    }


def cmd_speeds(args) -> int:
    cfg = RunConfig.load(args.config)
    outdir = _outdir(cfg, args)
    text = json_dumps(_speed_summary(cfg))
    with open(os.path.join(outdir, "speeds.json"), "w", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    _write_manifest(outdir, ["speeds.json"], args.seedless, failed=False)
    return EXIT_OK


def cmd_semiwave(args) -> int:
    cfg = RunConfig.load(args.config)
    outdir = _outdir(cfg, args)
    nl = build_nonlinearity(cfg)
    params = build_params(cfg)
    num = build_semiwave_numerics(cfg)
    c_req = cfg.getfloat("semiwave.c")
    if c_req is None:
        pair, profile = semiwave.find_c0(nl, params, num)
        c_used = pair.c0
    else:
        profile = semiwave.solve_semiwave(c_req, nl, params, num)
        c_used = c_req
    profile.to_csv(os.path.join(outdir, "profile.csv"))
    summary = {
        "c": c_used,
        "slope0_phi": profile.slope0_phi,
        "slope0_psi": profile.slope0_psi,
        "residual_inf": profile.residual_inf,
        "x_max": profile.x_max,
    }
    with open(os.path.join(outdir, "semiwave.json"), "w", newline="\n") as fh:
        fh.write(json_dumps(summary))
    _write_manifest(outdir, ["profile.csv", "semiwave.json"], args.seedless, failed=False)
    return EXIT_OK


def _thresholds_for(cfg: RunConfig, nl, params, init) -> analysis.AnalysisThresholds:
    r0 = model.compute_R0(nl, params)
    if r0 > 1.0:
        eq = model.compute_equilibrium(nl, params)
        return analysis.AnalysisThresholds.from_model(nl, params, eq, init.h0)
    # below threshold nothing can spread; the front goal is unreachable
    return analysis.AnalysisThresholds(l0=math.inf, u_star=1.0, v_star=1.0,
                                       h0=init.h0, boundary=params.boundary)


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    outdir = _outdir(cfg, args)
    nl = build_nonlinearity(cfg)
    params = build_params(cfg)
    init = build_initial_data(cfg)
    numerics = build_solver_numerics(cfg)
    stop = build_stop(cfg)
    thresholds = _thresholds_for(cfg, nl, params, init)

    try:
        trace = fbsolver.simulate(params, nl, init, numerics, stop)
        c0 = profile = eq = None
        if model.compute_R0(nl, params) > 1.0 and params.mu1 + params.mu2 > 0.0:
            eq = model.compute_equilibrium(nl, params)
            pair, profile = semiwave.find_c0(nl, params, build_semiwave_numerics(cfg))
            c0 = pair.c0
        report = analysis.build_outcome_report(trace, thresholds, c0=c0,
                                               profile=profile, eq=eq)
    except SolverError as exc:
        with open(os.path.join(outdir, "FAILED"), "w", newline="\n") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        _write_manifest(outdir, ["FAILED"], args.seedless, failed=True)
        sys.stderr.write(f"frontwave: solver failure: {exc}\n")
        return EXIT_SOLVER

    trace.to_csv(os.path.join(outdir, "trace.csv"))
    trace.snapshots_to_csv(os.path.join(outdir, "snapshots.csv"))
    with open(os.path.join(outdir, "report.json"), "w", newline="\n") as fh:
        fh.write(report.to_json())
    _write_manifest(outdir, ["trace.csv", "snapshots.csv", "report.json"],
                    args.seedless, failed=False)
    sys.stdout.write(report.to_json())
    return EXIT_OK


_SWEEP_HEADER = ("index", "h0", "amplitude", "mu1", "mu2",
                 "classification", "c_hat", "c_hat_stderr", "h_final", "sup_final", "status")


def _sweep_cell(payload) -> tuple:
    index, entries, mapping = payload
    cfg = RunConfig(entries=entries).override(mapping)
    try:
        nl = build_nonlinearity(cfg)
        params = build_params(cfg)
        init = build_initial_data(cfg)
        trace = fbsolver.simulate(params, nl, init, build_solver_numerics(cfg),
                                  build_stop(cfg))
        thresholds = _thresholds_for(cfg, nl, params, init)
        label = analysis.classify(trace, thresholds)
        c_hat = stderr = ""
        if label is analysis.Classification.SPREADING:
            fit = analysis.front_speed(trace)
            c_hat, stderr = fmt(fit.c_hat), fmt(fit.stderr)
        return (fmt(index), fmt(init.h0), cfg.get("init.amplitude", "0.5"),
                fmt(params.mu1), fmt(params.mu2), label.value, c_hat, stderr,
                fmt(trace.h[-1]), fmt(trace.sup_u[-1] + trace.sup_v[-1]), "ok")
    except Exception as exc:  # per-cell failures recorded; the sweep continues
        cfg_h0 = cfg.get("init.h0", "")
        return (fmt(index), cfg_h0, cfg.get("init.amplitude", ""),
                cfg.get("model.mu1", ""), cfg.get("model.mu2", ""),
                "", "", "", "", "", f"{type(exc).__name__}: {exc}")


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    outdir = _outdir(cfg, args)
    cells = sweep_cells(cfg)
    payloads = [(i, cfg.entries, mapping) for i, mapping in enumerate(cells)]
    workers = max(1, args.workers)
    if workers == 1:
        rows = [_sweep_cell(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, payloads))  # input order, not completion order
    write_csv(os.path.join(outdir, "outcomes.csv"), _SWEEP_HEADER, rows)
    _write_manifest(outdir, ["outcomes.csv"], args.seedless, failed=False)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = RunConfig.load(args.config)
    nl = build_nonlinearity(cfg)
    params = build_params(cfg)
    report = model.check_hypotheses(nl, params, z_max=100.0)
    init_report = None
    if cfg.get("init.h0") or cfg.get("init.table"):
        init = build_initial_data(cfg)
        init_report = model.validate_initial_data(init, params)
    payload = {
        "hypotheses": {
            "passed": report.passed,
            "clauses": report.clauses,
            "z_hat": report.z_hat,
            "weak": report.weak,
        },
        "initial_data": None if init_report is None else {
            "passed": init_report.passed,
            "violations": [list(v) for v in init_report.violations],
        },
    }
    sys.stdout.write(json_dumps(payload))
    ok = report.passed and (init_report is None or init_report.passed)
    return EXIT_OK if ok else EXIT_MODEL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontwave",
                                     description="free-boundary spreading-front laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in (
        ("speeds", cmd_speeds, "closed-form and semi-wave speed summary"),
        ("semiwave", cmd_semiwave, "export a semi-wave profile CSV"),
        ("simulate", cmd_simulate, "run the free-boundary solver and report"),
        ("sweep", cmd_sweep, "parallel parameter sweep, one CSV row per cell"),
        ("check", cmd_check, "hypothesis and initial-data validation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--workers", type=int, default=1, help="sweep worker processes")
        p.add_argument("--seedless", action="store_true",
                       help="assert the run uses no RNG (always true; recorded in manifests)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelRegimeError, ConfigError, ValueError) as exc:
        sys.stderr.write(f"frontwave: {type(exc).__name__}: {exc}\n")
        return EXIT_MODEL
    except SolverError as exc:
        sys.stderr.write(f"frontwave: solver failure: {exc}\n")
        return EXIT_SOLVER
    except OSError as exc:
        sys.stderr.write(f"frontwave: i/o failure: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
