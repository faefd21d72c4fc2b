"""Penalty tuning by variance scaling: lambda^2 = cvar * resid_sq/n * log p.

The tuning function gamma_a(lam) = (n/log p) * lam^2 / ||y - X beta_lam||^2
is increasing in lambda, so the implicit equation gamma_a(lam) = cvar has at
most one root.  Two root finders are provided: the paper-style fixed-point
iteration and an exact per-segment solve on the regularization path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import GammaRangeError, VlassoError
from .lasso import (DEFAULT_CONFIG, LassoPath, LassoSolution, SolverConfig,
                    eval_path, lazy_path, solve_lasso, tau_threshold)
from .model import DesignMatrix, operator_norm
from .theory import model_constants

# Floor for tuner-built paths.  Deliberately tiny: tracking stops at
# |active| = n anyway, so the floor only matters for near-noiseless data
# whose tuned penalty can be arbitrarily small.
PATH_LAMBDA_FLOOR = 1e-300


@dataclass
class TunedEstimate:
    """Jointly tuned (beta, lambda, sigma) with convergence diagnostics."""

    solution: LassoSolution
    lambda_hat: float
    sigma_hat: float
    iterations: int
    converged: bool
    method: str                      # fixed_point | path_exact | newton
    history: list[tuple[int, float]]

    @property
    def beta(self) -> np.ndarray:
        return self.solution.beta

    def to_json(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "sigma_hat": self.sigma_hat,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
            "history": [[l, lam] for l, lam in self.history],
            "solution": self.solution.to_json(),
        }


def default_path(X: DesignMatrix, y: np.ndarray,
                 cfg: SolverConfig = DEFAULT_CONFIG) -> LassoPath:
    """Lazily tracked path for the tuners; segments materialize on demand."""
    return lazy_path(X, y, lambda_min=PATH_LAMBDA_FLOOR, cfg=cfg)


def gamma_a(X: DesignMatrix, y: np.ndarray, lam: float,
            path: LassoPath | None = None,
            cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """(n / log p) * lam^2 / resid_sq at the solution for ``lam``."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if X.p < 2:
        raise ValueError("need p >= 2 so that log p > 0")
    if path is not None:
        resid_sq = path.segment_at(lam).resid_sq(lam)
    else:
        resid_sq = float(np.sum(solve_lasso(X, y, lam, cfg).residual ** 2))
    if resid_sq <= 0.0:
        raise VlassoError(f"zero residual at lambda={lam:.6g}; gamma_a undefined")
    return (X.n / math.log(X.p)) * lam * lam / resid_sq


def tune_fixed_point(X: DesignMatrix, y: np.ndarray, cvar: float,
                     lambda0: float | None = None, eps: float | None = None,
                     max_iter: int = 200,
                     path: LassoPath | None = None,
                     cfg: SolverConfig = DEFAULT_CONFIG) -> TunedEstimate:
    """Iterate lam <- sqrt(cvar * log p / n) * ||y - X beta_lam||_2.

    Starts from the all-zero solution (lambda0 = tau) by default.  On
    non-convergence the best iterate is returned with converged=False and the
    full iteration history.
    """
    if cvar <= 0:
        raise ValueError("cvar must be > 0")
    tau = tau_threshold(X, y)
    if tau == 0.0:
        raise VlassoError("y is zero; nothing to tune")
    if lambda0 is None:
        lambda0 = tau
    if eps is None:
        eps = 1e-8 * tau
    if lambda0 <= 0 or eps <= 0:
        raise ValueError("lambda0 and eps must be > 0")
    if path is None:
        path = default_path(X, y, cfg)

    scale = math.sqrt(cvar * math.log(X.p) / X.n)
    lam = float(lambda0)
    history: list[tuple[int, float]] = [(0, lam)]
    converged = False
    for it in range(1, max_iter + 1):
        resid_sq = path.segment_at(lam).resid_sq(lam)
        if resid_sq <= 0.0:
            raise VlassoError(
                f"fixed-point iterate reached the zero-residual regime at "
                f"lambda={lam:.6g}")
        lam_next = scale * math.sqrt(resid_sq)
        history.append((it, lam_next))
        if abs(lam_next - lam) < eps:
            lam = lam_next
            converged = True
            break
        lam = lam_next

    sol = eval_path(path, lam)
    return TunedEstimate(
        solution=sol,
        lambda_hat=lam,
        sigma_hat=sol.residual_norm / math.sqrt(X.n),
        iterations=len(history) - 1,
        converged=converged,
        method="fixed_point",
        history=history,
    )


def tune_path_exact_a(X: DesignMatrix, y: np.ndarray, cvar: float,
                      path: LassoPath | None = None,
                      cfg: SolverConfig = DEFAULT_CONFIG) -> TunedEstimate:
    """Exact root of gamma_a(lam) = cvar using the per-segment closed form.

    On a segment, gamma_a(lam) = (n/log p) lam^2 / (pperp_sq + lam^2 q), so
    the root solves a linear equation in lam^2.  gamma_a is increasing, so
    the first in-range root, scanning from large lambda down, is the root.
    """
    if cvar <= 0:
        raise ValueError("cvar must be > 0")
    if path is None:
        path = default_path(X, y, cfg)
    c = X.n / math.log(X.p)

    for seg in path.iter_segments():
        denom = c - cvar * seg.q
        if denom <= 0.0:
            continue  # gamma_a stays below cvar on this segment
        lam_sq = cvar * seg.pperp_sq / denom
        if lam_sq <= 0.0:
            continue  # includes the constant-gamma full-rank regime
        lam = math.sqrt(lam_sq)
        pad = 1e-9 * max(1.0, seg.lambda_lo)
        hi = seg.lambda_hi
        if seg.lambda_lo - pad <= lam and (math.isinf(hi) or lam <= hi + pad):
            lam = min(max(lam, seg.lambda_lo), hi if not math.isinf(hi) else lam)
            sol = eval_path(path, lam)
            return TunedEstimate(
                solution=sol,
                lambda_hat=lam,
                sigma_hat=sol.residual_norm / math.sqrt(X.n),
                iterations=0,
                converged=True,
                method="path_exact",
                history=[(0, lam)],
            )

    lo_end = path.lambda_lo
    gamma_min = gamma_a(X, y, lo_end, path=path)
    raise GammaRangeError(cvar, (gamma_min, math.inf))


def tune_a(X: DesignMatrix, y: np.ndarray, cvar: float,
           method: str = "fixed_point",
           path: LassoPath | None = None,
           cfg: SolverConfig = DEFAULT_CONFIG, **kwargs) -> TunedEstimate:
    """Dispatch on method; a non-converged fixed point falls back to the
    exact path root."""
    method = method.replace("-", "_")
    if path is None:
        path = default_path(X, y, cfg)
    if method == "path" or method == "path_exact":
        return tune_path_exact_a(X, y, cvar, path=path, cfg=cfg)
    if method != "fixed_point":
        raise ValueError(f"unknown strategy-A method {method!r}")
    est = tune_fixed_point(X, y, cvar, path=path, cfg=cfg, **kwargs)
    if not est.converged:
        est = tune_path_exact_a(X, y, cvar, path=path, cfg=cfg)
    return est


def cvar_admissible_interval(X: DesignMatrix, alpha: float, r: float,
                             n: int | None = None,
                             p: int | None = None) -> tuple[float, float]:
    """Theoretical interval for cvar; the two ends differ by a factor of 10."""
    n = X.n if n is None else n
    p = X.p if p is None else p
    c_spar, _ = model_constants(alpha, r)
    base = (1.0 - r) ** 2 / ((1.0 + r) * c_spar) * (n / p) * operator_norm(X) ** 2
    return base / 20.0, base / 2.0
