"""Closed-form constants and bound checks for the recovery guarantees.

Everything here is deliberately decoupled from the estimators: the assumption
checks report margins but never gate execution, because the guarantees'
constants are conservative and typical desk-scale experiments run outside the
certified regime while recovery still succeeds empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DesignMatrix, GroundTruth, coherence, operator_norm


@dataclass(frozen=True)
class TheoryParams:
    alpha: float                # rate exponent, > 0
    r: float                    # isometry slack, in (0, 1/2]
    C: float | None = None      # trade-off constant (strategy B only)

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not (0.0 < self.r <= 0.5):
            raise ValueError("r must lie in (0, 1/2]")
        if self.C is not None and self.C <= 0:
            raise ValueError("C must be > 0")


def kappa(alpha: float) -> float:
    """4 * sqrt(1 + alpha)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return 4.0 * math.sqrt(1.0 + alpha)


def model_constants(alpha: float, r: float) -> tuple[float, float]:
    """(C_spar, C_mu) = (r^2 / ((1+alpha) e^2), r / (1+alpha))."""
    c_spar = r * r / ((1.0 + alpha) * math.e ** 2)
    c_mu = r / (1.0 + alpha)
    return c_spar, c_mu


def ell(alpha: float, x: float) -> float:
    """x * exp(-4 alpha / x); an increasing bijection of (0, inf)."""
    return x * math.exp(-4.0 * alpha / x)


def c_circ(params: TheoryParams, max_iter: int = 200) -> float:
    """Unique root of ell(alpha, x) = 10 e (1+r)/(1-r)^2 kappa^2, by bisection.

    The root always exceeds the right-hand side (exp factor < 1), and
    ell(x) >= x - 4 alpha gives a finite upper bracket.
    """
    k = kappa(params.alpha)
    rhs = 10.0 * math.e * (1.0 + params.r) / (1.0 - params.r) ** 2 * k * k
    if params.alpha == 0.0:
        return rhs
    lo = rhs
    hi = rhs + 4.0 * params.alpha + 1.0
    while ell(params.alpha, hi) < rhs:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if ell(params.alpha, mid) < rhs:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def bounds_a(X: DesignMatrix, s: int, params: TheoryParams,
             n: int | None = None, p: int | None = None) -> tuple[float, float, float]:
    """(s0, n_min, H): sparsity cap, sample floor and coefficient floor (A).

    s0 = (p / log p) * C_spar / ||X||^2,  n_min = s (C_circ log p + 1),
    H = 4 (sqrt(n) + sqrt(2 alpha log p)) / sqrt(s0) * (1-r)/sqrt(1+r).
    """
    n = X.n if n is None else n
    p = X.p if p is None else p
    if p < 2:
        raise ValueError("need p >= 2")
    c_spar, _ = model_constants(params.alpha, params.r)
    logp = math.log(p)
    opn_sq = operator_norm(X) ** 2
    s0 = (p / logp) * c_spar / opn_sq
    n_min = s * (c_circ(params) * logp + 1.0)
    h = (4.0 * (math.sqrt(n) + math.sqrt(2.0 * params.alpha * logp))
         / math.sqrt(s0) * (1.0 - params.r) / math.sqrt(1.0 + params.r))
    return s0, n_min, h


def c_circ_b(params: TheoryParams) -> float:
    """c_circ for the trade-off strategy's sample bound: (6 kappa)^2 e / (1-r)."""
    k = kappa(params.alpha)
    return (6.0 * k) ** 2 * math.e / (1.0 - params.r)


def bounds_b(n: int, p: int, s: int, params: TheoryParams) -> tuple[float, float, float]:
    """(L, M, n_min): coefficient floor, l1 ceiling and sample floor (B)."""
    if params.C is None:
        raise ValueError("params.C is required for the trade-off bounds")
    if not (n > s >= 1):
        raise ValueError(f"need n > s >= 1, got n={n}, s={s}")
    C = params.C
    r = params.r
    alpha = params.alpha
    logp = math.log(p)
    k = kappa(alpha)
    root_2alogp = math.sqrt(2.0 * alpha * logp)
    term1 = 2.0 * math.sqrt(1.0 + 2.0 * C) / (C * math.sqrt(1.0 - r)) \
        * (math.sqrt(n - s) + root_2alogp) / math.sqrt(s)
    term2 = 2.0 * (math.sqrt(s) + root_2alogp) / (math.sqrt(1.0 - r) * math.sqrt(s))
    L = max(term1, term2)
    # (sqrt(pi (n-s)) / p^alpha)^(4/(n-s)), evaluated in log space
    log_pow = (4.0 / (n - s)) * (0.5 * math.log(math.pi * (n - s)) - alpha * logp)
    M = (n - s) / math.sqrt(logp) / (3.0 * k * C) * math.exp(log_pow)
    n_min = c_circ_b(params) * (1.0 + 2.0 * C) * s * logp + s
    return L, M, n_min


def chi_tails(nu: int, t: float, u: float) -> tuple[float, float]:
    """Tail bounds for the chi(nu) distribution.

    Returns (upper, lower) with
      P(chi(nu) >= sqrt(nu) + sqrt(2 t)) <= upper = exp(-t)
      P(chi(nu) <= sqrt(u nu))          <= lower = 2/sqrt(pi nu) (u e / 2)^(nu/4).
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if not (0.0 < u <= 2.0 / math.e):
        raise ValueError("u must lie in (0, 2/e]")
    upper = math.exp(-t)
    lower = 2.0 / math.sqrt(math.pi * nu) * (u * math.e / 2.0) ** (nu / 4.0)
    return upper, lower


@dataclass
class AssumptionReport:
    """Boolean verdicts with the numeric margins that produced them.

    Margins are (bound - value) for upper-bound conditions and
    (value - bound) for lower-bound conditions, so positive always means the
    condition holds.
    """

    strategy: str
    coherence_ok: bool
    sparsity_ok: bool
    sample_size_ok: bool
    beta_lower_ok: bool
    beta_upper_ok: bool | None = None     # strategy B only
    cvar_in_interval: bool | None = None  # strategy A only
    margins: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        flags = [self.coherence_ok, self.sparsity_ok, self.sample_size_ok,
                 self.beta_lower_ok]
        if self.beta_upper_ok is not None:
            flags.append(self.beta_upper_ok)
        if self.cvar_in_interval is not None:
            flags.append(self.cvar_in_interval)
        return all(flags)

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "coherence_ok": self.coherence_ok,
            "sparsity_ok": self.sparsity_ok,
            "sample_size_ok": self.sample_size_ok,
            "beta_lower_ok": self.beta_lower_ok,
            "beta_upper_ok": self.beta_upper_ok,
            "cvar_in_interval": self.cvar_in_interval,
            "all_hold": self.all_hold,
            "margins": self.margins,
            "constants": self.constants,
        }


def check_assumptions(X: DesignMatrix, truth: GroundTruth, strategy: str,
                      params: TheoryParams, cvar_or_C: float | None = None,
                      thm31: bool = False) -> AssumptionReport:
    """Evaluate the recovery hypotheses on a concrete instance; report only.

    ``thm31`` switches to the invertibility theorem's own (stricter by
    factors 2 and 4) coherence and sparsity constants.
    """
    strategy = strategy.lower()
    if strategy not in ("a", "b"):
        raise ValueError("strategy must be 'a' or 'b'")
    n, p = X.n, X.p
    s = truth.s
    logp = math.log(p)
    alpha, r = params.alpha, params.r
    c_spar, c_mu = model_constants(alpha, r)
    opn_sq = operator_norm(X) ** 2
    mu = coherence(X)

    if thm31:
        coh_bound = r / (2.0 * (1.0 + alpha) * logp)
        s0 = r * r * p / (4.0 * (1.0 + alpha) * math.e ** 2 * opn_sq * logp)
    else:
        coh_bound = c_mu / logp
        s0 = (p / logp) * c_spar / opn_sq

    margins = {"coherence": coh_bound - mu, "sparsity": s0 - s}
    constants = {
        "kappa": kappa(alpha),
        "C_spar": c_spar,
        "C_mu": c_mu,
        "C_circ": c_circ(params),
        "s0": s0,
        "opnorm_sq": opn_sq,
        "coherence": mu,
    }

    min_beta = truth.min_magnitude
    beta_upper_ok = None
    cvar_ok = None

    if strategy == "a":
        _, n_min, H = bounds_a(X, s, params)
        constants["H"] = H
        constants["n_min"] = n_min
        margins["sample_size"] = n - n_min
        margins["beta_lower"] = min_beta - H * truth.sigma if s else math.inf
        beta_lower_ok = s == 0 or min_beta >= H * truth.sigma
        if cvar_or_C is not None:
            lo = (1.0 - r) ** 2 / (20.0 * (1.0 + r) * c_spar) * (n / p) * opn_sq
            hi = 10.0 * lo
            constants["cvar_interval"] = (lo, hi)
            cvar_ok = lo <= cvar_or_C <= hi
            margins["cvar"] = min(cvar_or_C - lo, hi - cvar_or_C)
    else:
        bp = params if params.C is not None else TheoryParams(alpha, r, cvar_or_C)
        if bp.C is None:
            raise ValueError("strategy B needs the trade-off constant C")
        if s >= 1 and n > s:
            L, M, n_min = bounds_b(n, p, s, bp)
            constants["L"] = L
            constants["M"] = M
            beta_lower_ok = min_beta >= L * truth.sigma
            l1 = float(np.sum(np.abs(truth.beta)))
            beta_upper_ok = l1 <= M * truth.sigma
            margins["beta_lower"] = min_beta - L * truth.sigma
            margins["beta_upper"] = M * truth.sigma - l1
        else:
            n_min = 0.0
            beta_lower_ok = True
            beta_upper_ok = True
            margins["beta_lower"] = math.inf
            margins["beta_upper"] = math.inf
        constants["c_circ_b"] = c_circ_b(bp)
        constants["n_min"] = n_min
        margins["sample_size"] = n - n_min

    return AssumptionReport(
        strategy=strategy,
        coherence_ok=mu <= coh_bound,
        sparsity_ok=s <= s0,
        sample_size_ok=margins["sample_size"] >= 0.0,
        beta_lower_ok=beta_lower_ok,
        beta_upper_ok=beta_upper_ok,
        cvar_in_interval=cvar_ok,
        margins=margins,
        constants=constants,
    )
