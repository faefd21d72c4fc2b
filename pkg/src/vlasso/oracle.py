"""Closed-form oracle estimators and deterministic recovery-condition checks.

The oracle knows the true support T and sign pattern ahead of time; under the
five conditions checked here it satisfies the LASSO optimality conditions, so
the tuned estimators must coincide with it.  That equivalence is the
executable form of the recovery guarantees and is exercised in the test
suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import DesignMatrix
from .theory import TheoryParams, kappa


@dataclass
class OracleResult:
    """Oracle tuning value(s) plus the intermediate quantities behind them."""

    lambda_tilde: float | None
    well_defined: bool
    beta_tilde: np.ndarray | None = None
    root_minus: float | None = None
    root_plus: float | None = None
    delta: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _factor(XT: np.ndarray):
    try:
        return cho_factor(XT.T @ XT, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"X_T is singular: {exc}") from exc


def oracle_beta(X: DesignMatrix, T, signs, y: np.ndarray,
                lambda_tilde: float) -> np.ndarray:
    """(X_T^t X_T)^{-1} (X_T^t y - lambda * signs) embedded in R^p."""
    T = np.asarray(T, dtype=int)
    signs = np.asarray(signs, dtype=float)
    XT = X.entries[:, T]
    fac = _factor(XT)
    beta = np.zeros(X.p)
    beta[T] = cho_solve(fac, XT.T @ y - lambda_tilde * signs)
    return beta


def _projection_offsq(XT: np.ndarray, fac, v: np.ndarray) -> float:
    """||P_perp v||^2 via the Gram factorization (never forms the projector)."""
    cross = XT.T @ v
    out = float(v @ v) - float(cross @ cho_solve(fac, cross))
    return max(out, 0.0)


def oracle_lambda_a(X: DesignMatrix, T, signs, z: np.ndarray,
                    cvar: float) -> OracleResult:
    """Oracle penalty for the variance-scaled strategy.

    lambda_tilde^2 = ||P_perp z||^2 / (n / (cvar log p) - q) with
    q = ||X_T (X_T^t X_T)^{-1} signs||^2; well defined iff the denominator is
    positive.
    """
    T = np.asarray(T, dtype=int)
    signs = np.asarray(signs, dtype=float)
    XT = X.entries[:, T]
    fac = _factor(XT)
    q = float(signs @ cho_solve(fac, signs))
    pperp_sq = _projection_offsq(XT, fac, z)
    denom = X.n / (cvar * math.log(X.p)) - q
    diag = {"pperp_z_sq": pperp_sq, "q": q, "denominator": denom}
    if denom <= 0.0:
        return OracleResult(lambda_tilde=None, well_defined=False, diagnostics=diag)
    lam = math.sqrt(pperp_sq / denom)
    return OracleResult(lambda_tilde=lam, well_defined=True, diagnostics=diag)


def oracle_lambda_b(X: DesignMatrix, T, signs, y: np.ndarray,
                    C: float) -> OracleResult:
    """Oracle penalty for the trade-off strategy: roots of the quadratic

        (1/2 + C) q lam^2 - C g lam + ||P_perp y||^2 / 2 = 0,

    with q = signs^t (X_T^t X_T)^{-1} signs and
    g = signs^t (X_T^t X_T)^{-1} X_T^t y.  Returns both roots and the
    discriminant; the minus branch is the oracle value (the theory's
    confidence interval brackets that branch only).
    """
    T = np.asarray(T, dtype=int)
    signs = np.asarray(signs, dtype=float)
    XT = X.entries[:, T]
    fac = _factor(XT)
    q = float(signs @ cho_solve(fac, signs))
    g = float(signs @ cho_solve(fac, XT.T @ y))
    pperp_sq = _projection_offsq(XT, fac, y)
    delta = (C * g) ** 2 - (1.0 + 2.0 * C) * q * pperp_sq
    diag = {"pperp_y_sq": pperp_sq, "q": q, "g": g}
    if delta <= 0.0:
        return OracleResult(lambda_tilde=None, well_defined=False,
                            delta=delta, diagnostics=diag)
    root = math.sqrt(delta)
    denom = (1.0 + 2.0 * C) * q
    lam_minus = (C * g - root) / denom
    lam_plus = (C * g + root) / denom
    return OracleResult(
        lambda_tilde=lam_minus, well_defined=True,
        root_minus=lam_minus, root_plus=lam_plus, delta=delta,
        diagnostics=diag,
    )


@dataclass
class CpConditionReport:
    """The five deterministic inequalities with values, bounds and margins."""

    values: dict
    bounds: dict
    holds: dict

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())

    @property
    def margins(self) -> dict:
        return {k: self.bounds[k] - self.values[k] for k in self.values}

    def to_json(self) -> dict:
        return {
            "values": self.values,
            "bounds": self.bounds,
            "holds": self.holds,
            "margins": self.margins,
            "all_hold": self.all_hold,
        }


def check_cp_conditions(X: DesignMatrix, T, signs, z: np.ndarray,
                        sigma: float, params: TheoryParams) -> CpConditionReport:
    """Evaluate conditions (i)-(v) exactly on one instance.

    (i)   ||(X_T^t X_T)^{-1} X_T^t z||_inf        <= kappa sigma sqrt(log p)
    (ii)  ||(X_T^t X_T)^{-1} signs||_inf          <= 3
    (iii) ||X_{T^c}^t X_T (X_T^t X_T)^{-1} s||_inf <= 1/4
    (iv)  ||X_{T^c}^t (I - P_{V_T}) z||_inf       <= kappa sigma sqrt(log p)
    (v)   ||X_T^t X_T - Id||                      <= r
    """
    T = np.asarray(T, dtype=int)
    signs = np.asarray(signs, dtype=float)
    XT = X.entries[:, T]
    fac = _factor(XT)
    mask = np.ones(X.p, dtype=bool)
    mask[T] = False
    Xc = X.entries[:, mask]
    k = kappa(params.alpha)
    noise_bound = k * sigma * math.sqrt(math.log(X.p))

    w_i = cho_solve(fac, XT.T @ z)
    w_ii = cho_solve(fac, signs)
    v_iii = XT @ w_ii
    resid_z = z - XT @ cho_solve(fac, XT.T @ z)

    values = {
        "i": float(np.max(np.abs(w_i))),
        "ii": float(np.max(np.abs(w_ii))),
        "iii": float(np.max(np.abs(Xc.T @ v_iii))) if Xc.shape[1] else 0.0,
        "iv": float(np.max(np.abs(Xc.T @ resid_z))) if Xc.shape[1] else 0.0,
        "v": float(np.max(np.abs(np.linalg.eigvalsh(XT.T @ XT - np.eye(len(T)))))),
    }
    bounds = {"i": noise_bound, "ii": 3.0, "iii": 0.25, "iv": noise_bound,
              "v": params.r}
    holds = {key: values[key] <= bounds[key] for key in values}
    return CpConditionReport(values=values, bounds=bounds, holds=holds)
