"""Seeded, parallel Monte Carlo harness for support/sign recovery benchmarks.

Every estimator within a trial sees the same (X, beta, z), so comparisons are
paired; trial seeds are derived from the master seed and the trial index so
workers never share RNG state and the whole run is reproducible bit for bit
(wall-clock timings excepted).
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .exceptions import VlassoError
from .lasso import SolverConfig, eval_path, lazy_path
from .model import DesignMatrix, GroundTruth, RNG_NAME, gen_gaussian_design, \
    gen_ground_truth, observe
from .strategy_a import PATH_LAMBDA_FLOOR, tune_a
from .strategy_b import tune_b


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator column in the benchmark.

    kind: "lasso_known" (lambda = lambda_scale * sigma * sqrt(2 log p)),
    "strategy_a" (cvar, method fixed_point|path) or "strategy_b"
    (C, method newton|path).
    """

    kind: str
    lambda_scale: float = 2.0
    cvar: float = 8.0
    C: float = 0.1
    method: str = ""

    def __post_init__(self):
        if self.kind not in ("lasso_known", "strategy_a", "strategy_b"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "lasso_known":
            return f"lasso_known[scale={self.lambda_scale:g}]"
        if self.kind == "strategy_a":
            return f"strategy_a[cvar={self.cvar:g}]"
        return f"strategy_b[C={self.C:g}]"

    def to_json(self) -> dict:
        d = {"kind": self.kind, "name": self.name}
        if self.kind == "lasso_known":
            d["lambda_scale"] = self.lambda_scale
        elif self.kind == "strategy_a":
            d["cvar"] = self.cvar
            d["method"] = self.method or "fixed_point"
        else:
            d["C"] = self.C
            d["method"] = self.method or "newton"
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 600
    n: int = 75
    s: int = 9
    B: float = 40.0
    sigma: float = 1.0
    trials: int = 100
    master_seed: int = 0
    estimators: tuple[EstimatorSpec, ...] = (
        EstimatorSpec("lasso_known"),
        EstimatorSpec("strategy_a"),
        EstimatorSpec("strategy_b"),
    )
    design_mode: str = "fresh_per_trial"   # or "fixed"
    tol: float = 1e-9
    kkt_tol: float = 1e-7
    bp_tol: float = 1e-10
    sigma_bin_width: float = 0.05
    rng: str = RNG_NAME

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.design_mode not in ("fresh_per_trial", "fixed"):
            raise ValueError(f"unknown design_mode {self.design_mode!r}")
        if not self.estimators:
            raise ValueError("at least one estimator is required")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, kkt_tol=self.kkt_tol, bp_tol=self.bp_tol)

    def to_json(self) -> dict:
        return {
            "p": self.p, "n": self.n, "s": self.s, "B": self.B,
            "sigma": self.sigma, "trials": self.trials,
            "master_seed": self.master_seed,
            "estimators": [e.to_json() for e in self.estimators],
            "design_mode": self.design_mode,
            "tol": self.tol, "kkt_tol": self.kkt_tol, "bp_tol": self.bp_tol,
            "sigma_bin_width": self.sigma_bin_width,
            "rng": self.rng,
        }


@dataclass
class EstimatorOutcome:
    true_positives: int = 0
    false_positives: int = 0
    sign_errors: int = 0
    exact_recovery: bool = False
    sigma_hat: float = math.nan
    lambda_hat: float = math.nan
    converged: bool = False
    wall_time: float = 0.0
    error: str | None = None


@dataclass
class RecoveryReport:
    trial_index: int
    trial_seed: int
    outcomes: dict[str, EstimatorOutcome]


def trial_seed(master_seed: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(0, trial_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fixed_design_seed(master_seed: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(1,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _score(solution, truth: GroundTruth) -> tuple[int, int, int, bool]:
    est = {int(j): float(np.sign(solution.beta[j])) for j in solution.active_set}
    true_signs = {int(j): float(s) for j, s in zip(truth.support, truth.signs)}
    tp = sum(1 for j, sg in est.items() if true_signs.get(j) == sg)
    overlap = sum(1 for j in est if j in true_signs)
    fp = len(est) - overlap
    sign_errors = overlap - tp
    exact = fp == 0 and sign_errors == 0 and tp == truth.s
    return tp, fp, sign_errors, exact


def run_trial(cfg: ExperimentConfig, trial_index: int,
              design: DesignMatrix | None = None) -> RecoveryReport:
    """Generate one instance, run every configured estimator on it."""
    seed = trial_seed(cfg.master_seed, trial_index)
    sub = np.random.SeedSequence(seed)
    seed_design, seed_truth, seed_noise = (int(v) for v in
                                           sub.generate_state(3, dtype=np.uint64))
    if cfg.design_mode == "fixed":
        X = design if design is not None else \
            gen_gaussian_design(cfg.n, cfg.p, fixed_design_seed(cfg.master_seed))
    else:
        X = gen_gaussian_design(cfg.n, cfg.p, seed_design)
    truth = gen_ground_truth(cfg.p, cfg.s, cfg.B, cfg.sigma, seed_truth)
    obs = observe(X, truth, seed_noise)

    solver_cfg = cfg.solver_config()
    path = None
    path_error: str | None = None
    try:
        path = lazy_path(X, obs.y, lambda_min=PATH_LAMBDA_FLOOR, cfg=solver_cfg)
    except (VlassoError, np.linalg.LinAlgError) as exc:
        path_error = f"{type(exc).__name__}: {exc}"

    outcomes: dict[str, EstimatorOutcome] = {}
    for spec in cfg.estimators:
        start = time.perf_counter()
        out = EstimatorOutcome()
        try:
            if path is None:
                raise VlassoError(f"path construction failed: {path_error}")
            if spec.kind == "lasso_known":
                lam = spec.lambda_scale * cfg.sigma * math.sqrt(2.0 * math.log(cfg.p))
                sol = eval_path(path, lam)
                out.lambda_hat = lam
                out.sigma_hat = sol.residual_norm / math.sqrt(cfg.n)
                out.converged = True
            elif spec.kind == "strategy_a":
                est = tune_a(X, obs.y, spec.cvar,
                             method=spec.method or "fixed_point",
                             path=path, cfg=solver_cfg)
                sol, out.lambda_hat = est.solution, est.lambda_hat
                out.sigma_hat, out.converged = est.sigma_hat, est.converged
            else:
                est = tune_b(X, obs.y, spec.C,
                             method=spec.method or "newton",
                             path=path, cfg=solver_cfg)
                sol, out.lambda_hat = est.solution, est.lambda_hat
                out.sigma_hat, out.converged = est.sigma_hat, est.converged
            tp, fp, se, exact = _score(sol, truth)
            out.true_positives, out.false_positives = tp, fp
            out.sign_errors, out.exact_recovery = se, exact
        except (VlassoError, np.linalg.LinAlgError, ValueError) as exc:
            out.error = f"{type(exc).__name__}: {exc}"
        out.wall_time = time.perf_counter() - start
        outcomes[spec.name] = out
    return RecoveryReport(trial_index=trial_index, trial_seed=seed,
                          outcomes=outcomes)


def _run_trial_star(args) -> RecoveryReport:
    cfg, idx, design = args
    return run_trial(cfg, idx, design=design)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class AggregateReport:
    config: ExperimentConfig
    reports: list[RecoveryReport]
    summary: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": serialize.SCHEMA_VERSION,
            "kind": "monte_carlo_report",
            "config": self.config.to_json(),
            "summary": self.summary,
            "trials": [
                {
                    "trial": r.trial_index,
                    "trial_seed": r.trial_seed,
                    "outcomes": {name: vars(o) for name, o in r.outcomes.items()},
                }
                for r in self.reports
            ],
        }


def _integer_histogram(values) -> list[list[int]]:
    values = [int(v) for v in values]
    if not values:
        return []
    top = max(values)
    counts = [0] * (top + 1)
    for v in values:
        counts[v] += 1
    return [[b, c] for b, c in enumerate(counts)]


def _sigma_histogram(values, width: float) -> list[list[float]]:
    vals = [v for v in values if math.isfinite(v)]
    if not vals:
        return []
    bins: dict[int, int] = {}
    for v in vals:
        bins[int(v // width)] = bins.get(int(v // width), 0) + 1
    return [[k * width, bins[k]] for k in sorted(bins)]


def summarize(cfg: ExperimentConfig, reports: list[RecoveryReport]) -> dict:
    summary: dict = {}
    n_trials = len(reports)
    for spec in cfg.estimators:
        rows = [r.outcomes[spec.name] for r in reports]
        ok = [o for o in rows if o.error is None]
        exact = sum(1 for o in ok if o.exact_recovery)
        tp = [o.true_positives for o in ok]
        fp = [o.false_positives for o in ok]
        sig = [o.sigma_hat for o in ok if math.isfinite(o.sigma_hat)]
        lo, hi = wilson_interval(exact, n_trials)
        summary[spec.name] = {
            "trials": n_trials,
            "errors": n_trials - len(ok),
            "exact_recoveries": exact,
            "exact_rate": exact / n_trials,
            "exact_rate_wilson95": [lo, hi],
            "median_true_positives": float(np.median(tp)) if tp else math.nan,
            "median_false_positives": float(np.median(fp)) if fp else math.nan,
            "mean_sigma_hat": float(np.mean(sig)) if sig else math.nan,
            "true_positive_histogram": _integer_histogram(tp),
            "false_positive_histogram": _integer_histogram(fp),
            "sigma_hat_histogram": _sigma_histogram(sig, cfg.sigma_bin_width),
        }
    return summary


def run_monte_carlo(cfg: ExperimentConfig, workers: int | None = None) -> AggregateReport:
    """Map run_trial over the trial indices (optionally in parallel) and
    aggregate; the reduction is ordered by trial index, so results do not
    depend on worker scheduling."""
    design = None
    if cfg.design_mode == "fixed":
        design = gen_gaussian_design(cfg.n, cfg.p, fixed_design_seed(cfg.master_seed))
    args = [(cfg, i, design) for i in range(cfg.trials)]
    if workers is None or workers <= 1 or cfg.trials == 1:
        reports = [_run_trial_star(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, cfg.trials // (8 * workers))
            reports = list(pool.map(_run_trial_star, args, chunksize=chunk))
    return AggregateReport(config=cfg, reports=reports,
                           summary=summarize(cfg, reports))


CSV_METRICS = ("true_positives", "false_positives", "sign_errors",
               "exact_recovery", "sigma_hat", "lambda_hat", "converged",
               "wall_time", "error")


def csv_header(cfg: ExperimentConfig) -> list[str]:
    cols = ["trial", "trial_seed"]
    for spec in cfg.estimators:
        cols.extend(f"{spec.name}.{m}" for m in CSV_METRICS)
    return cols


def emit(report: AggregateReport, fmt: str, path) -> None:
    """Write the report: 'csv' is one row per trial (plus header),
    'json' is the full versioned document including histograms."""
    if fmt == "json":
        serialize.write_json(path, report.to_json())
        return
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    cfg = report.config
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(cfg))
        for r in report.reports:
            row: list = [r.trial_index, r.trial_seed]
            for spec in cfg.estimators:
                o = r.outcomes[spec.name]
                row.extend([
                    o.true_positives, o.false_positives, o.sign_errors,
                    int(o.exact_recovery),
                    f"{o.sigma_hat:.17g}", f"{o.lambda_hat:.17g}",
                    int(o.converged), f"{o.wall_time:.6f}",
                    o.error or "",
                ])
            w.writerow(row)


def emit_histograms_csv(report: AggregateReport, path) -> None:
    """Long-format histogram table: estimator, metric, bin, count."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["estimator", "metric", "bin", "count"])
        for name, summ in report.summary.items():
            for metric, key in (("true_positives", "true_positive_histogram"),
                                ("false_positives", "false_positive_histogram"),
                                ("sigma_hat", "sigma_hat_histogram")):
                for b, c in summ[key]:
                    w.writerow([name, metric, b, c])
