"""Penalty tuning by the penalty-vs-fidelity trade-off.

The tuning function gamma_b(lam) = lam * ||beta_lam||_1 / ||y - X beta_lam||^2
vanishes at tau and diverges as lam -> 0 along the path.  On a path segment
it equals lam (u - lam q) / (w + lam^2 q), which is unimodal in lam whenever
w = ||P_perp y||^2 > 0, so gamma_b(lam) = C can have several solutions; this
module deterministically returns the topmost one (largest lambda, i.e. the
sparsest solution).  Solved either by bracket-safeguarded Newton, with the
bracket chosen to isolate the topmost crossing, or by an exact per-segment
quadratic solve.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import GammaRangeError, VlassoError
from .lasso import (DEFAULT_CONFIG, LassoPath, PathSegment, SolverConfig,
                    eval_path, solve_lasso, tau_threshold)
from .model import DesignMatrix
from .strategy_a import TunedEstimate, default_path

_BOUNDARY_REL_TOL = 1e-12


def gamma_b(X: DesignMatrix, y: np.ndarray, lam: float,
            path: LassoPath | None = None,
            cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """lam * l1(beta_lam) / resid_sq(lam); 0 for lam >= tau."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if path is not None:
        seg = path.segment_at(lam)
        resid_sq = seg.resid_sq(lam)
        l1 = seg.l1_norm(lam)
    else:
        sol = solve_lasso(X, y, lam, cfg)
        resid_sq = float(np.sum(sol.residual ** 2))
        l1 = sol.l1_norm
    if resid_sq <= 0.0:
        raise VlassoError(f"zero residual at lambda={lam:.6g}; gamma_b undefined")
    return lam * l1 / resid_sq


def gamma_b_derivative(X: DesignMatrix, y: np.ndarray, lam: float,
                       path: LassoPath) -> float:
    """d gamma_b / d lambda on the open segment containing ``lam``.

    With w = ||P_perp y||^2, q = s^t (X_T^t X_T)^{-1} s and u = s^t a, the
    quotient rule gives (u (w - lam^2 q) - 2 lam q w) / (w + lam^2 q)^2.  In
    the regime where the active columns span the observations (w = 0) this
    reduces to (-l1(beta) - lam q) / resid_sq, and only there is it
    guaranteed negative; for w > 0 the sign flips at the segment's peak.
    Raises at breakpoints, where gamma_b is not differentiable.
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    seg = path.segment_at(lam)
    tol = _BOUNDARY_REL_TOL * max(1.0, path.tau)
    at_hi = not math.isinf(seg.lambda_hi) and abs(lam - seg.lambda_hi) <= tol
    if at_hi or abs(lam - seg.lambda_lo) <= tol:
        raise VlassoError(
            f"lambda={lam:.6g} sits at a path breakpoint; "
            "gamma_b is not differentiable there")
    if len(seg.active) == 0:
        return 0.0
    resid_sq = seg.resid_sq(lam)
    if resid_sq <= 0.0:
        raise VlassoError(f"zero residual at lambda={lam:.6g}")
    w, q, u = seg.pperp_sq, seg.q, seg.u
    return (u * (w - lam * lam * q) - 2.0 * lam * q * w) / (resid_sq * resid_sq)


def _segment_peak(seg: PathSegment) -> float | None:
    """Interior maximizer of gamma_b on the segment, if any.

    The derivative numerator u*w - u*q*lam^2 - 2*q*w*lam is strictly
    decreasing in lam > 0, so the segment is unimodal with a single peak.
    """
    w, q, u = seg.pperp_sq, seg.q, seg.u
    if q <= 0.0 or u <= 0.0 or w <= 0.0:
        return None
    lam_pk = (-q * w + math.sqrt(q * q * w * w + u * u * q * w)) / (u * q)
    if seg.lambda_lo < lam_pk < seg.lambda_hi:
        return lam_pk
    return None


def _segment_top_crossing(seg: PathSegment, C: float) -> float | None:
    """Largest lambda in the segment with gamma_b(lambda) = C, if any.

    gamma_b = C reduces to (1+C) q lam^2 - u lam + C w = 0 on the segment.
    """
    w, q, u = seg.pperp_sq, seg.q, seg.u
    if q <= 0.0:
        return None  # empty support: gamma_b = 0 there
    a2 = (1.0 + C) * q
    disc = u * u - 4.0 * a2 * C * w
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    pad = 1e-12 * max(1.0, seg.lambda_hi if math.isfinite(seg.lambda_hi) else 1.0)
    for lam in ((u + root) / (2.0 * a2), (u - root) / (2.0 * a2)):
        if seg.lambda_lo - pad <= lam <= seg.lambda_hi + pad:
            return min(max(lam, seg.lambda_lo), seg.lambda_hi)
    return None


def _sigma_b(resid_sq: float, lam: float, l1: float, n: int) -> float:
    return math.sqrt((resid_sq + 2.0 * lam * l1) / n)


def _finish(X: DesignMatrix, path: LassoPath, lam: float, iterations: int,
            converged: bool, method: str, history) -> TunedEstimate:
    sol = eval_path(path, lam)
    resid_sq = float(np.sum(sol.residual ** 2))
    return TunedEstimate(
        solution=sol,
        lambda_hat=lam,
        sigma_hat=_sigma_b(resid_sq, lam, sol.l1_norm, X.n),
        iterations=iterations,
        converged=converged,
        method=method,
        history=history,
    )


def _gamma_on(seg: PathSegment, lam: float) -> float:
    return lam * seg.l1_norm(lam) / seg.resid_sq(lam)


def _bracket_top_crossing(path: LassoPath, C: float) -> tuple[float, float]:
    """Bracket [lam_lo, lam_hi] isolating the topmost gamma_b = C crossing.

    Walks the path downward, checkpointing each segment's peak and lower
    end; the first checkpoint at or above level C closes the bracket, which
    then contains exactly one crossing.  Raises GammaRangeError (reporting
    the supremum attained) when the whole path stays below C.
    """
    sup = 0.0
    hi = path.tau
    for seg in path.iter_segments():
        if len(seg.active) == 0:
            continue
        pk = _segment_peak(seg)
        if pk is not None:
            val = _gamma_on(seg, pk)
            sup = max(sup, val)
            if val >= C:
                return pk, hi
        if seg.resid_sq(seg.lambda_lo) <= 0.0:
            break
        val = _gamma_on(seg, seg.lambda_lo)
        sup = max(sup, val)
        if val >= C:
            return seg.lambda_lo, hi
        hi = seg.lambda_lo
    raise GammaRangeError(C, (0.0, sup))


def tune_newton(X: DesignMatrix, y: np.ndarray, C: float,
                lambda0: float | None = None, eps: float | None = None,
                max_iter: int = 200,
                path: LassoPath | None = None,
                cfg: SolverConfig = DEFAULT_CONFIG) -> TunedEstimate:
    """Newton iteration on gamma_b(lam) - C, safeguarded by a sign bracket.

    The initial bracket isolates the topmost crossing; a Newton step that
    leaves it (or lands on a breakpoint, where the derivative is undefined)
    is replaced by a bisection step.  Returns sigma_hat^2 =
    (resid_sq + 2 lam l1) / n.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    tau = tau_threshold(X, y)
    if tau == 0.0:
        raise VlassoError("y is zero; nothing to tune")
    if lambda0 is None:
        lambda0 = tau / 2.0
    if eps is None:
        eps = 1e-8 * tau
    if lambda0 <= 0 or eps <= 0:
        raise ValueError("lambda0 and eps must be > 0")
    if path is None:
        path = default_path(X, y, cfg)

    lam_lo, lam_hi = _bracket_top_crossing(path, C)  # gamma(lam_lo) >= C > gamma(lam_hi)
    lam = min(max(float(lambda0), lam_lo), lam_hi)
    history: list[tuple[int, float]] = [(0, lam)]
    converged = False

    for it in range(1, max_iter + 1):
        f = gamma_b(X, y, lam, path=path) - C
        if f >= 0.0:
            lam_lo = max(lam_lo, lam)
        else:
            lam_hi = min(lam_hi, lam)
        try:
            df = gamma_b_derivative(X, y, lam, path)
        except VlassoError:
            df = 0.0
        if df != 0.0 and math.isfinite(df):
            lam_next = lam - f / df
        else:
            lam_next = 0.5 * (lam_lo + lam_hi)
        if not (lam_lo < lam_next < lam_hi) or not math.isfinite(lam_next):
            lam_next = 0.5 * (lam_lo + lam_hi)
        history.append((it, lam_next))
        if abs(lam_next - lam) < eps:
            lam = lam_next
            converged = True
            break
        lam = lam_next

    return _finish(X, path, lam, len(history) - 1, converged, "newton", history)


def tune_path_exact_b(X: DesignMatrix, y: np.ndarray, C: float,
                      path: LassoPath | None = None,
                      cfg: SolverConfig = DEFAULT_CONFIG) -> TunedEstimate:
    """Exact topmost root of gamma_b(lam) = C via per-segment quadratics.

    Scans segments from tau downward and returns the largest in-segment
    root of (1+C) q lam^2 - u lam + C w = 0; raises GammaRangeError with
    the attained supremum when no segment crosses level C.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    if path is None:
        path = default_path(X, y, cfg)

    sup = 0.0
    for seg in path.iter_segments():
        if len(seg.active) == 0:
            continue
        lam = _segment_top_crossing(seg, C)
        if lam is not None:
            return _finish(X, path, lam, 0, True, "path_exact", [(0, lam)])
        pk = _segment_peak(seg)
        if pk is not None:
            sup = max(sup, _gamma_on(seg, pk))
        if seg.resid_sq(seg.lambda_lo) > 0.0:
            sup = max(sup, _gamma_on(seg, seg.lambda_lo))
    raise GammaRangeError(C, (0.0, sup))


def tune_b(X: DesignMatrix, y: np.ndarray, C: float,
           method: str = "newton",
           path: LassoPath | None = None,
           cfg: SolverConfig = DEFAULT_CONFIG, **kwargs) -> TunedEstimate:
    """Dispatch on method; non-converged Newton falls back to the exact root."""
    method = method.replace("-", "_")
    if path is None:
        path = default_path(X, y, cfg)
    if method == "path" or method == "path_exact":
        return tune_path_exact_b(X, y, C, path=path, cfg=cfg)
    if method != "newton":
        raise ValueError(f"unknown strategy-B method {method!r}")
    est = tune_newton(X, y, C, path=path, cfg=cfg, **kwargs)
    if not est.converged:
        est = tune_path_exact_b(X, y, C, path=path, cfg=cfg)
    return est
