"""Command-line interface: solve, tune-a, tune-b, mc, constants, check-matrix.

Machine-first output: results go to --out (or stdout) as JSON, the resolved
configuration is echoed to stderr, and --pretty adds a human summary.
Exit codes: 0 success, 1 usage/config error, 2 numerical failure (with a
diagnostic JSON object on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .exceptions import VlassoError
from .experiments import (EstimatorSpec, ExperimentConfig, emit,
                          emit_histograms_csv, run_monte_carlo)
from .lasso import SolverConfig, export_path_csv, homotopy_path, solve_lasso
from .model import coherence, operator_norm
from .strategy_a import cvar_admissible_interval, tune_a
from .strategy_b import tune_b
from .theory import (TheoryParams, bounds_a, bounds_b, c_circ, c_circ_b,
                     check_assumptions, kappa, model_constants)

logger = logging.getLogger("vlasso")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract here is 1."""

    def error(self, message):
        raise UsageError(message)


def _echo_config(args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(args).items() if not k.startswith("_")}
    print(json.dumps({"resolved_config": resolved}, default=str), file=sys.stderr)


def _write_result(payload: dict, out: str | None, pretty_lines=None,
                  pretty: bool = False) -> None:
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)
    if pretty and pretty_lines:
        for line in pretty_lines:
            print(line)


def _load_problem(design_path: str, obs_path: str):
    X = serialize.load_design(design_path)
    y = serialize.load_vector(obs_path)
    if y.shape != (X.n,):
        raise UsageError(
            f"observation length {y.shape[0]} does not match design rows {X.n}")
    return X, y


# ---------------------------------------------------------------------------
# subcommands

def _cmd_solve(args) -> int:
    X, y = _load_problem(args.design, args.obs)
    cfg = SolverConfig()
    sol = solve_lasso(X, y, args.lam, cfg)
    if args.export_path:
        path = homotopy_path(X, y, lambda_min=args.lam, cfg=cfg)
        export_path_csv(path, args.export_path)
    payload = {"schema": serialize.SCHEMA_VERSION, "kind": "lasso_solution",
               **sol.to_json()}
    _write_result(payload, args.out, pretty=args.pretty, pretty_lines=[
        f"lambda={sol.lam:g}  active={len(sol.active_set)}  "
        f"objective={sol.objective:.6g}  kkt_valid={sol.kkt.valid}",
    ])
    return 0


def _cmd_tune_a(args) -> int:
    X, y = _load_problem(args.design, args.obs)
    lo, hi = cvar_admissible_interval(X, args.alpha, args.r)
    if not (lo <= args.cvar <= hi):
        logger.warning(
            "cvar=%g is outside the theoretical interval [%.4g, %.4g]; "
            "proceeding anyway", args.cvar, lo, hi)
    est = tune_a(X, y, args.cvar, method=args.method)
    payload = {"schema": serialize.SCHEMA_VERSION, "kind": "tuned_estimate",
               "strategy": "a", "cvar": args.cvar,
               "cvar_admissible_interval": [lo, hi], **est.to_json()}
    _write_result(payload, args.out, pretty=args.pretty, pretty_lines=[
        f"lambda_hat={est.lambda_hat:.6g}  sigma_hat={est.sigma_hat:.6g}  "
        f"active={len(est.solution.active_set)}  converged={est.converged}",
    ])
    return 0


def _cmd_tune_b(args) -> int:
    X, y = _load_problem(args.design, args.obs)
    est = tune_b(X, y, args.c, method=args.method)
    payload = {"schema": serialize.SCHEMA_VERSION, "kind": "tuned_estimate",
               "strategy": "b", "C": args.c, **est.to_json()}
    _write_result(payload, args.out, pretty=args.pretty, pretty_lines=[
        f"lambda_hat={est.lambda_hat:.6g}  sigma_hat={est.sigma_hat:.6g}  "
        f"active={len(est.solution.active_set)}  converged={est.converged}",
    ])
    return 0


def _cmd_constants(args) -> int:
    params = TheoryParams(alpha=args.alpha, r=args.r, C=args.c)
    c_spar, c_mu = model_constants(args.alpha, args.r)
    payload: dict = {
        "schema": serialize.SCHEMA_VERSION,
        "kind": "theory_constants",
        "alpha": args.alpha, "r": args.r, "C": args.c,
        "kappa": kappa(args.alpha),
        "C_spar": c_spar,
        "C_mu": c_mu,
        "C_circ": c_circ(params),
        "c_circ_b": c_circ_b(params),
    }
    if args.design:
        X = serialize.load_design(args.design)
        s0, n_min, H = bounds_a(X, args.s, params, n=args.n, p=args.p)
        payload["bounds_a"] = {"s0": s0, "n_min": n_min, "H": H}
        lo, hi = cvar_admissible_interval(X, args.alpha, args.r,
                                          n=args.n, p=args.p)
        payload["cvar_admissible_interval"] = [lo, hi]
        payload["coherence"] = coherence(X)
        payload["opnorm"] = operator_norm(X)
        if args.truth:
            with open(args.truth) as fh:
                truth = serialize.ground_truth_from_json(json.load(fh))
            strategy = "b" if args.c is not None else "a"
            rep = check_assumptions(X, truth, strategy, params,
                                    cvar_or_C=args.cvar if strategy == "a" else args.c)
            payload["assumption_report"] = rep.to_json()
    if args.c is not None and args.n > args.s >= 1:
        L, M, n_min_b = bounds_b(args.n, args.p, args.s, params)
        payload["bounds_b"] = {"L": L, "M": M, "n_min": n_min_b}
    _write_result(payload, args.out, pretty=args.pretty, pretty_lines=[
        f"kappa={payload['kappa']:.6g}  C_spar={c_spar:.6g}  C_mu={c_mu:.6g}  "
        f"C_circ={payload['C_circ']:.6g}",
    ])
    return 0


def _cmd_check_matrix(args) -> int:
    X = serialize.load_design(args.design)
    payload: dict = {
        "schema": serialize.SCHEMA_VERSION,
        "kind": "matrix_check",
        "n": X.n, "p": X.p,
        "coherence": coherence(X),
        "opnorm": operator_norm(X),
    }
    if args.support:
        T = np.asarray([int(t) for t in args.support.split(",")], dtype=int)
        XT = X.entries[:, T]
        dev = float(np.max(np.abs(np.linalg.eigvalsh(XT.T @ XT - np.eye(len(T))))))
        payload["support"] = [int(t) for t in T]
        payload["gram_deviation"] = dev
        payload["condition_v_ok"] = dev <= args.r
        payload["condition_v_margin"] = args.r - dev
    _write_result(payload, args.out, pretty=args.pretty, pretty_lines=[
        f"coherence={payload['coherence']:.6g}  opnorm={payload['opnorm']:.6g}",
    ])
    return 0


def parse_estimators(spec: str) -> tuple[EstimatorSpec, ...]:
    """Parse 'lasso_known:scale=2,strategy_a:cvar=8,strategy_b:C=0.1:method=path'."""
    out = []
    for chunk in spec.split(","):
        parts = chunk.strip().split(":")
        kind = parts[0]
        kwargs: dict = {}
        for opt in parts[1:]:
            key, _, val = opt.partition("=")
            if key in ("scale", "lambda_scale"):
                kwargs["lambda_scale"] = float(val)
            elif key == "cvar":
                kwargs["cvar"] = float(val)
            elif key in ("C", "c"):
                kwargs["C"] = float(val)
            elif key == "method":
                kwargs["method"] = val
            else:
                raise UsageError(f"unknown estimator option {key!r} in {chunk!r}")
        out.append(EstimatorSpec(kind, **kwargs))
    return tuple(out)


def load_experiment_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    """JSON object or flat key=value lines; every key optional with defaults."""
    text = Path(path).read_text()
    raw: dict = {}
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
    else:
        for line_no, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
    kwargs: dict = {}
    int_keys = ("p", "n", "s", "trials", "master_seed")
    float_keys = ("B", "sigma", "tol", "kkt_tol", "bp_tol", "sigma_bin_width")
    for key, val in raw.items():
        if key in int_keys:
            kwargs[key] = int(val)
        elif key in float_keys:
            kwargs[key] = float(val)
        elif key == "design_mode":
            kwargs[key] = str(val)
        elif key == "estimators":
            if isinstance(val, str):
                kwargs[key] = parse_estimators(val)
            else:
                kwargs[key] = tuple(
                    EstimatorSpec(**{k: v for k, v in e.items() if k != "name"})
                    for e in val)
        elif key in ("rng", "schema", "kind"):
            continue
        else:
            raise UsageError(f"{path}: unknown config key {key!r}")
    if seed_override is not None:
        kwargs["master_seed"] = seed_override
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _cmd_mc(args) -> int:
    seed = args.seed if args.seed is not None else args.global_seed
    threads = args.threads if args.threads is not None else \
        (args.global_threads or 1)
    cfg = load_experiment_config(args.config, seed_override=seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = run_monte_carlo(cfg, workers=threads)
    written = []
    if args.format in ("csv", "both"):
        emit(report, "csv", outdir / "trials.csv")
        emit_histograms_csv(report, outdir / "histograms.csv")
        written += ["trials.csv", "histograms.csv"]
    if args.format in ("json", "both"):
        emit(report, "json", outdir / "report.json")
        written.append("report.json")
    if not args.no_figures:
        from .figures import render_report_figures
        written += [p.name for p in render_report_figures(report, outdir)]
    print(json.dumps({"out_dir": str(outdir), "files": written}))
    if args.pretty:
        for name, summ in report.summary.items():
            print(f"{name}: exact {summ['exact_recoveries']}/{summ['trials']}"
                  f"  median_tp={summ['median_true_positives']:g}"
                  f"  median_fp={summ['median_false_positives']:g}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> Parser:
    parser = Parser(prog="vlasso",
                    description="LASSO-type sparse regression with unknown "
                                "noise variance")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    parser.add_argument("--seed", dest="global_seed", type=int, default=None,
                        help="global master-seed override (mc)")
    parser.add_argument("--threads", dest="global_threads", type=int,
                        default=None, help="global worker count (mc)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output JSON path (default stdout)")
        p.add_argument("--pretty", action="store_true",
                       help="print a human summary after the JSON")

    p = sub.add_parser("solve", help="solve the penalized problem at one lambda")
    p.add_argument("--design", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--export-path", default=None,
                   help="also write the path segment table (CSV) down to lambda")
    common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("tune-a", help="variance-scaled penalty tuning")
    p.add_argument("--design", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--cvar", type=float, default=8.0)
    p.add_argument("--method", choices=["fixed-point", "path"],
                   default="fixed-point")
    p.add_argument("--alpha", type=float, default=1.5,
                   help="rate exponent used for the admissibility warning")
    p.add_argument("--r", type=float, default=0.5)
    common(p)
    p.set_defaults(func=_cmd_tune_a)

    p = sub.add_parser("tune-b", help="penalty-vs-fidelity trade-off tuning")
    p.add_argument("--design", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--method", choices=["newton", "path"], default="newton")
    common(p)
    p.set_defaults(func=_cmd_tune_b)

    p = sub.add_parser("mc", help="seeded Monte Carlo benchmark")
    p.add_argument("--config", required=True,
                   help="JSON or key=value config file (see README for schema)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config master_seed")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering PNG histograms next to the data")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("constants", help="evaluate the theoretical constants")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--c", type=float, default=None,
                   help="trade-off constant; enables the strategy-B bounds")
    p.add_argument("--cvar", type=float, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--design", default=None)
    p.add_argument("--truth", default=None,
                   help="ground-truth JSON; enables the full assumption report")
    common(p)
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("check-matrix", help="coherence and near-isometry check")
    p.add_argument("--design", required=True)
    p.add_argument("--support", default=None,
                   help="comma-separated column indices for the isometry check")
    p.add_argument("--r", type=float, default=0.5)
    common(p)
    p.set_defaults(func=_cmd_check_matrix)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    _echo_config(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (VlassoError, np.linalg.LinAlgError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("attainable", "lam", "indices", "lambda_min"):
            if hasattr(exc, attr):
                diag[attr] = getattr(exc, attr)
        print(json.dumps(diag, default=str), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
