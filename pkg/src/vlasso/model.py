"""Generative model: designs with unit-norm columns, sparse signals, noisy observations.

All generators are pure functions of an explicit seed (PCG64 streams), so
parallel trials never share RNG state and every experiment is bitwise
reproducible from its recorded seeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

RNG_NAME = "pcg64"  # numpy default_rng; recorded alongside seeds in configs

_UNIT_COL_TOL = 1e-10


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


class DesignMatrix:
    """An n x p design with unit l2-norm columns and cached spectral summaries.

    Parameters
    ----------
    entries : (n, p) array
        Dense design, one row per observation.  Every column must have unit
        l2 norm (within 1e-10); p >= 2 and n >= 1.
    """

    def __init__(self, entries: np.ndarray):
        entries = np.ascontiguousarray(entries, dtype=np.float64)
        if entries.ndim != 2:
            raise ValueError("design must be a 2-D array")
        n, p = entries.shape
        if n < 1 or p < 2:
            raise ValueError(f"need n >= 1 and p >= 2, got n={n}, p={p}")
        norms = np.linalg.norm(entries, axis=0)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > _UNIT_COL_TOL:
            raise ValueError(
                f"columns must have unit l2 norm (max deviation {worst:.3e})"
            )
        entries.setflags(write=False)
        self.entries = entries
        self.n = n
        self.p = p
        self.coherence_cache: float | None = None
        self.opnorm_cache: float | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def submatrix(self, indices) -> np.ndarray:
        return self.entries[:, np.asarray(indices, dtype=int)]

    def __repr__(self) -> str:
        return f"DesignMatrix(n={self.n}, p={self.p})"


@dataclass(frozen=True)
class GroundTruth:
    """Sparse signal: support, realized signs, coefficients and noise level."""

    support: np.ndarray        # sorted indices, shape (s,)
    signs: np.ndarray          # +-1 per support index
    beta: np.ndarray           # dense length p, zero off support
    sigma: float
    seed: int | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        s = len(self.support)
        if s > len(self.beta):
            raise ValueError("support larger than dimension")
        on = self.beta[self.support]
        if np.any(on == 0.0):
            raise ValueError("coefficients on the support must be nonzero")
        if not np.array_equal(np.sign(on), self.signs):
            raise ValueError("signs must match the realized coefficients")

    @property
    def s(self) -> int:
        return len(self.support)

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def min_magnitude(self) -> float:
        if self.s == 0:
            return float("inf")
        return float(np.min(np.abs(self.beta[self.support])))


@dataclass(frozen=True)
class Observation:
    """Response vector with the realized noise retained for test oracles."""

    y: np.ndarray
    noise: np.ndarray
    seed: int | None = None


def gen_gaussian_design(n: int, p: int, seed) -> DesignMatrix:
    """i.i.d. N(0,1) entries with columns rescaled to unit l2 norm."""
    if n < 1 or p < 2:
        raise ValueError(f"need n >= 1 and p >= 2, got n={n}, p={p}")
    rng = _rng(seed)
    raw = rng.standard_normal((n, p))
    norms = np.linalg.norm(raw, axis=0)
    # A zero column has probability zero; regenerate it if it ever happens.
    while np.any(norms == 0.0):
        bad = np.flatnonzero(norms == 0.0)
        logger.warning("regenerating %d zero-norm design column(s)", len(bad))
        raw[:, bad] = rng.standard_normal((n, len(bad)))
        norms = np.linalg.norm(raw, axis=0)
    return DesignMatrix(raw / norms)


def coherence(X: DesignMatrix) -> float:
    """Largest |<X_i, X_j>| over distinct columns; exact, cached on X."""
    if X.coherence_cache is not None:
        return X.coherence_cache
    gram = X.entries.T @ X.entries
    np.fill_diagonal(gram, 0.0)
    mu = float(np.max(np.abs(gram)))
    X.coherence_cache = mu
    return mu


def operator_norm(X: DesignMatrix, tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Largest singular value via power iteration on the Gram operator.

    Deterministic start vector; converges when the Rayleigh-quotient residual
    drops below ``tol`` relative to the current eigenvalue estimate, which
    bounds the relative error of the returned singular value by ~tol.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if X.opnorm_cache is not None:
        return X.opnorm_cache
    A = X.entries
    v = np.full(X.p, 1.0 / np.sqrt(X.p))
    theta = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        theta = float(v @ w)
        resid = float(np.linalg.norm(w - theta * v))
        if resid <= 0.5 * tol * theta:
            out = float(np.sqrt(theta))
            X.opnorm_cache = out
            return out
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            raise ConvergenceFailure("power iteration collapsed to zero vector")
        v = w / nw
    raise ConvergenceFailure(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"(last eigenvalue estimate {theta:.6g})"
    )


class ConvergenceFailure(RuntimeError):
    """Power iteration failed to reach the requested accuracy."""


def gen_ground_truth(p: int, s: int, B: float, sigma: float, seed) -> GroundTruth:
    """Uniform s-subset support; coefficients B*(+-1) + N(0,1); realized signs.

    The recorded sign pattern is the sign of the realized coefficient, not of
    the Bernoulli draw, so recovery is always assessed against what was
    actually planted (the two can differ when the Gaussian perturbation
    dominates B).  Exactly-zero coefficients are resampled.
    """
    if not (1 <= s <= p):
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    rng = _rng(seed)
    support = np.sort(rng.choice(p, size=s, replace=False))
    delta = rng.integers(0, 2, size=s) * 2.0 - 1.0
    coeffs = B * delta + rng.standard_normal(s)
    while np.any(coeffs == 0.0):
        bad = np.flatnonzero(coeffs == 0.0)
        logger.warning("resampling %d exactly-zero coefficient(s)", len(bad))
        coeffs[bad] = B * (rng.integers(0, 2, size=len(bad)) * 2.0 - 1.0) \
            + rng.standard_normal(len(bad))
    beta = np.zeros(p)
    beta[support] = coeffs
    seed_int = seed if isinstance(seed, int) else None
    return GroundTruth(
        support=support,
        signs=np.sign(coeffs),
        beta=beta,
        sigma=float(sigma),
        seed=seed_int,
    )


def observe(X: DesignMatrix, truth: GroundTruth, seed) -> Observation:
    """y = X beta + sigma * w with w i.i.d. standard normal from ``seed``."""
    if truth.p != X.p:
        raise ValueError(f"dimension mismatch: truth has p={truth.p}, design p={X.p}")
    rng = _rng(seed)
    noise = truth.sigma * rng.standard_normal(X.n)
    y = X.entries @ truth.beta + noise
    seed_int = seed if isinstance(seed, int) else None
    return Observation(y=y, noise=noise, seed=seed_int)
