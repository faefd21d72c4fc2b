"""l1-penalized least squares: fixed-lambda solver, full path, KKT certificates.

Two independent solvers are provided on purpose: cyclic coordinate descent
(`solve_lasso`) and the homotopy path (`homotopy_path`).  They cross-validate
each other in the test suite, and the path is the backend of choice for the
penalty tuners because every tuning function is closed-form on a path segment.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConvergenceError, DegenerateBreakpointError, PathRangeError
from .model import DesignMatrix


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9            # max coefficient change per sweep
    kkt_tol: float = 1e-7        # certificate tolerance
    bp_tol: float = 1e-10        # breakpoint tie tolerance
    max_sweeps: int = 100_000
    max_breakpoints: int = 20_000
    track_objective: bool = False


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class OptimalityCertificate:
    """Subgradient check: residual correlations on and off the active set."""

    max_active_violation: float    # max_{j active} |X_j^t r - lambda*sign(beta_j)|
    max_inactive_correlation: float  # max_{j inactive} |X_j^t r|
    lam: float
    tol: float
    strict: bool                   # inactive correlations < lambda - tol

    @property
    def valid(self) -> bool:
        return (self.max_active_violation <= self.tol
                and self.max_inactive_correlation <= self.lam + self.tol)

    def to_json(self) -> dict:
        return {
            "max_active_violation": self.max_active_violation,
            "max_inactive_correlation": self.max_inactive_correlation,
            "lambda": self.lam,
            "tol": self.tol,
            "strict": self.strict,
            "valid": self.valid,
        }


@dataclass
class LassoSolution:
    beta: np.ndarray               # dense length p
    lam: float
    active_set: np.ndarray         # indices with beta != 0, in path entry order
    signs: np.ndarray              # +-1 per active index
    residual: np.ndarray           # y - X beta
    objective: float
    kkt: OptimalityCertificate
    sweeps: int = 0
    objective_history: list[float] | None = None

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.beta)))

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "beta": {int(j): float(self.beta[j]) for j in self.active_set},
            "active_set": [int(j) for j in self.active_set],
            "signs": [float(s) for s in self.signs],
            "objective": self.objective,
            "residual_norm": self.residual_norm,
            "kkt": self.kkt.to_json(),
        }


def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def objective_value(X: DesignMatrix, y: np.ndarray, lam: float, beta: np.ndarray) -> float:
    r = y - X.entries @ beta
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(beta)))


def check_optimality(X: DesignMatrix, y: np.ndarray, lam: float,
                     beta: np.ndarray, tol: float) -> OptimalityCertificate:
    """Evaluate the subgradient conditions at ``beta``; never raises."""
    r = y - X.entries @ beta
    corr = X.entries.T @ r
    active = beta != 0.0
    if np.any(active):
        viol = float(np.max(np.abs(corr[active] - lam * np.sign(beta[active]))))
    else:
        viol = 0.0
    inactive = ~active
    off = float(np.max(np.abs(corr[inactive]))) if np.any(inactive) else 0.0
    return OptimalityCertificate(
        max_active_violation=viol,
        max_inactive_correlation=off,
        lam=lam,
        tol=tol,
        strict=off < lam - tol,
    )


def _solution_from_beta(X: DesignMatrix, y: np.ndarray, lam: float,
                        beta: np.ndarray, kkt_tol: float,
                        active_order: np.ndarray | None = None,
                        sweeps: int = 0,
                        objective_history=None) -> LassoSolution:
    residual = y - X.entries @ beta
    if active_order is None:
        active_order = np.flatnonzero(beta)
    active_order = np.asarray(active_order, dtype=int)
    return LassoSolution(
        beta=beta,
        lam=lam,
        active_set=active_order,
        signs=np.sign(beta[active_order]),
        residual=residual,
        objective=0.5 * float(residual @ residual) + lam * float(np.sum(np.abs(beta))),
        kkt=check_optimality(X, y, lam, beta, kkt_tol),
        sweeps=sweeps,
        objective_history=objective_history,
    )


def solve_lasso(X: DesignMatrix, y: np.ndarray, lam: float,
                cfg: SolverConfig = DEFAULT_CONFIG) -> LassoSolution:
    """Cyclic coordinate descent with soft thresholding.

    Stops when the largest coefficient change in a sweep drops below
    ``cfg.tol`` and the KKT certificate passes at ``cfg.kkt_tol``.
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    A = X.entries
    n, p = A.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    col_sq = np.sum(A * A, axis=0)
    beta = np.zeros(p)
    r = y.astype(np.float64).copy()
    history = [] if cfg.track_objective else None

    for sweep in range(1, cfg.max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            aj = A[:, j]
            rho = float(aj @ r) + col_sq[j] * bj
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != bj:
                r -= (new - bj) * aj
                beta[j] = new
                delta = abs(new - bj)
                if delta > max_delta:
                    max_delta = delta
        if history is not None:
            history.append(0.5 * float(r @ r) + lam * float(np.sum(np.abs(beta))))
        if max_delta < cfg.tol:
            cert = check_optimality(X, y, lam, beta, cfg.kkt_tol)
            if cert.valid:
                return _solution_from_beta(X, y, lam, beta, cfg.kkt_tol,
                                           sweeps=sweep, objective_history=history)
    best = _solution_from_beta(X, y, lam, beta, cfg.kkt_tol,
                               sweeps=cfg.max_sweeps, objective_history=history)
    raise ConvergenceError(
        f"coordinate descent did not converge in {cfg.max_sweeps} sweeps "
        f"(last certificate: active={best.kkt.max_active_violation:.3e}, "
        f"inactive={best.kkt.max_inactive_correlation:.3e} at lambda={lam:.6g})",
        solution=best, certificate=best.kkt,
    )


def tau_threshold(X: DesignMatrix, y: np.ndarray) -> float:
    """Smallest lambda with an all-zero solution: ||X^t y||_inf."""
    if not np.any(y):
        warnings.warn("y is identically zero; tau is 0", stacklevel=2)
        return 0.0
    return float(np.max(np.abs(X.entries.T @ y)))


def check_generic_condition_local(X: DesignMatrix, active_set, signs) -> bool:
    """Spot check of design non-degeneracy for one (support, sign) pair.

    Verifies max_{j not in I} |<X_j, X_I (X_I^t X_I)^{-1} s_I>| < 1.  The full
    quantification over all subsets is intractable; this is the on-path check.
    """
    active = np.asarray(active_set, dtype=int)
    if len(active) == 0:
        return True
    s = np.asarray(signs, dtype=float)
    XA = X.entries[:, active]
    G = XA.T @ XA
    v = XA @ np.linalg.solve(G, s)
    mask = np.ones(X.p, dtype=bool)
    mask[active] = False
    if not np.any(mask):
        return True
    return float(np.max(np.abs(X.entries[:, mask].T @ v))) < 1.0


# ---------------------------------------------------------------------------
# Cholesky bookkeeping for the active Gram matrix

def _chol_append(L: np.ndarray, gram_col: np.ndarray) -> np.ndarray | None:
    """Extend chol(G) to chol([[G, c], [c^t, 1]]); None if not SPD."""
    k = L.shape[0]
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = L
    if k:
        w = solve_triangular(L, gram_col, lower=True, check_finite=False)
        d_sq = 1.0 - float(w @ w)
        out[k, :k] = w
    else:
        d_sq = 1.0
    if d_sq <= 1e-14:
        return None
    out[k, k] = math.sqrt(d_sq)
    return out


def _chol_rank_one_update(L: np.ndarray, v: np.ndarray) -> np.ndarray:
    """chol(L L^t + v v^t) for lower-triangular L, in O(k^2)."""
    L = L.copy()
    v = v.copy()
    k = L.shape[0]
    for i in range(k):
        r = math.hypot(L[i, i], v[i])
        c = r / L[i, i]
        s = v[i] / L[i, i]
        L[i, i] = r
        if i + 1 < k:
            L[i + 1:, i] = (L[i + 1:, i] + s * v[i + 1:]) / c
            v[i + 1:] = c * v[i + 1:] - s * L[i + 1:, i]
    return L


def _chol_delete(L: np.ndarray, idx: int) -> np.ndarray:
    """chol of the Gram matrix with row/column ``idx`` removed."""
    k = L.shape[0]
    out = np.zeros((k - 1, k - 1))
    out[:idx, :idx] = L[:idx, :idx]
    if idx < k - 1:
        out[idx:, :idx] = L[idx + 1:, :idx]
        out[idx:, idx:] = _chol_rank_one_update(L[idx + 1:, idx + 1:], L[idx + 1:, idx])
    return out


def _chol_condition_estimate(L: np.ndarray) -> float:
    d = np.abs(np.diag(L))
    if d.size == 0 or np.min(d) == 0.0:
        return math.inf
    return float((np.max(d) / np.min(d)) ** 2)


# ---------------------------------------------------------------------------
# regularization path

@dataclass(frozen=True)
class PathSegment:
    """One interval of constant support/signs with beta(lambda) = a - lambda*b.

    ``pperp_sq`` is the squared norm of the projection of y off the active
    span, ``q = s^t (X_A^t X_A)^{-1} s`` and ``u = s^t a``, so that on the
    segment: resid_sq = pperp_sq + lambda^2 q and l1 norm = u - lambda*q.
    """

    lambda_hi: float
    lambda_lo: float
    active: np.ndarray
    signs: np.ndarray
    a: np.ndarray
    b: np.ndarray
    pperp_sq: float
    q: float
    u: float

    def contains(self, lam: float, tol: float = 0.0) -> bool:
        return self.lambda_lo - tol <= lam <= self.lambda_hi + tol

    def beta_active(self, lam: float) -> np.ndarray:
        return self.a - lam * self.b

    def resid_sq(self, lam: float) -> float:
        return self.pperp_sq + lam * lam * self.q

    def l1_norm(self, lam: float) -> float:
        return self.u - lam * self.q


class LassoPath:
    """Piecewise-affine map lambda -> beta, from tau down to lambda_min.

    Segments are materialized on demand (the exact tuners usually need only
    the top of the path), in decreasing lambda order; ``extend_to`` forces
    tracking down to a target.  Tracking stops at ``lambda_min`` or as soon
    as the active set has n elements (``reached_n``).
    """

    def __init__(self, X: DesignMatrix, y: np.ndarray, lambda_min: float,
                 cfg: SolverConfig = DEFAULT_CONFIG):
        if lambda_min <= 0:
            raise ValueError("lambda_min must be > 0")
        self.X = X
        self.y = np.asarray(y, dtype=np.float64)
        self.cfg = cfg
        self.kkt_tol = cfg.kkt_tol
        self.lambda_min = lambda_min
        self.tau = tau_threshold(X, self.y)
        self._yy = float(self.y @ self.y)
        self.reached_n = False
        self.exhausted = False
        self._events_seen = 0
        self._active: list[int] = []
        self._signs: list[float] = []
        self._L = np.empty((0, 0))
        self._lam_hi = self.tau
        # events queued at the lower end of the last materialized segment;
        # applied (and tie-checked) only when tracking continues past them
        self._pending: list[tuple[float, int, str, float]] | None = None

        self.segments: list[PathSegment] = [PathSegment(
            lambda_hi=math.inf, lambda_lo=self.tau,
            active=np.empty(0, dtype=int), signs=np.empty(0),
            a=np.empty(0), b=np.empty(0),
            pperp_sq=self._yy, q=0.0, u=0.0,
        )]
        if self.tau == 0.0 or self.tau <= lambda_min:
            self.exhausted = True
            return

        # first entry happens at tau itself
        c0 = X.entries.T @ self.y
        tie = self.tau * (1.0 - cfg.bp_tol)
        self._pending = [
            (float(abs(c0[j])), int(j), "entry", float(np.sign(c0[j])))
            for j in np.flatnonzero(np.abs(c0) >= tie)
        ]

    @property
    def lambda_lo(self) -> float:
        """Lower end of the materialized range (final once exhausted)."""
        return self.segments[-1].lambda_lo

    @property
    def breakpoints(self) -> np.ndarray:
        lams = [seg.lambda_hi for seg in self.segments]
        lams.append(self.lambda_lo)
        return np.asarray(lams)

    def _apply_pending(self) -> None:
        at_top = self._pending
        self._pending = None
        if len({ev[1] for ev in at_top}) > 1:
            raise DegenerateBreakpointError(at_top[0][0],
                                            [ev[1] for ev in at_top])
        lam_star, col, kind, sgn = max(at_top, key=lambda ev: ev[0])
        A = self.X.entries
        if kind == "entry":
            idx = np.asarray(self._active, dtype=int)
            grown = _chol_append(self._L, A[:, idx].T @ A[:, col])
            if grown is None:
                XA2 = A[:, self._active + [col]]
                grown = np.linalg.cholesky(XA2.T @ XA2)
            self._L = grown
            self._active.append(col)
            self._signs.append(sgn)
        else:
            pos = self._active.index(col)
            self._L = _chol_delete(self._L, pos)
            self._active.pop(pos)
            self._signs.pop(pos)
        self._lam_hi = lam_star

    def _advance(self) -> bool:
        """Materialize the next segment; False when the path is finished."""
        if self.exhausted:
            return False
        self._events_seen += 1
        if self._events_seen > self.cfg.max_breakpoints:
            raise ConvergenceError(
                f"path exceeded {self.cfg.max_breakpoints} breakpoints before "
                f"reaching lambda_min={self.lambda_min:.3g}")
        self._apply_pending()

        A = self.X.entries
        n, p = A.shape
        y = self.y
        lam_hi = self._lam_hi
        idx = np.asarray(self._active, dtype=int)
        s_vec = np.asarray(self._signs)
        XA = A[:, idx]

        if _chol_condition_estimate(self._L) > 1e10:
            self._L = np.linalg.cholesky(XA.T @ XA)
        L = self._L

        def gram_solve(rhs):
            z = solve_triangular(L, rhs, lower=True, check_finite=False)
            return solve_triangular(L.T, z, lower=False, check_finite=False)

        a = gram_solve(XA.T @ y)
        b = gram_solve(s_vec)
        r0 = y - XA @ a                       # projection of y off span(X_A)
        pperp_sq = float(r0 @ r0)
        if len(idx) >= n or pperp_sq <= 1e-28 * self._yy:
            pperp_sq = 0.0   # active span covers y; keep the exact structure
        q = float(s_vec @ b)
        u = float(s_vec @ a)

        guard = lam_hi * max(self.cfg.bp_tol, 1e-14)
        events: list[tuple[float, int, str, float]] = []  # (lam, col, kind, sign)

        inactive_mask = np.ones(p, dtype=bool)
        inactive_mask[idx] = False
        if np.any(inactive_mask):
            cols = np.flatnonzero(inactive_mask)
            rho = A[:, inactive_mask].T @ r0
            d = A[:, inactive_mask].T @ (XA @ b)
            with np.errstate(divide="ignore", invalid="ignore"):
                lam_plus = rho / (1.0 - d)    # correlation hits +lambda
                lam_minus = -rho / (1.0 + d)  # correlation hits -lambda
            for cand, sgn in ((lam_plus, 1.0), (lam_minus, -1.0)):
                ok = np.isfinite(cand) & (cand > 0.0) & (cand <= lam_hi - guard)
                for col, lam_c in zip(cols[ok], cand[ok]):
                    events.append((float(lam_c), int(col), "entry", sgn))

        with np.errstate(divide="ignore", invalid="ignore"):
            lam_exit = a / b
        ok = np.isfinite(lam_exit) & (lam_exit > 0.0) & (lam_exit <= lam_hi - guard)
        for pos in np.flatnonzero(ok):
            events.append((float(lam_exit[pos]), int(idx[pos]), "exit", 0.0))

        lam_next = max((ev[0] for ev in events), default=-math.inf)
        self.segments.append(PathSegment(
            lambda_hi=lam_hi, lambda_lo=max(lam_next, self.lambda_min),
            active=idx, signs=s_vec,
            a=a, b=b, pperp_sq=pperp_sq, q=q, u=u,
        ))

        if len(self._active) >= n:
            self.reached_n = True
            self.exhausted = True
        elif lam_next <= self.lambda_min:
            self.exhausted = True
        else:
            tie = lam_next * (1.0 - self.cfg.bp_tol)
            self._pending = [ev for ev in events if ev[0] >= tie]
        return True

    def extend_to(self, lam: float) -> None:
        target = max(lam, self.lambda_min)
        while not self.exhausted and self.segments[-1].lambda_lo > target:
            self._advance()

    def extend_fully(self) -> None:
        while self._advance():
            pass

    def iter_segments(self):
        """Yield segments in decreasing lambda order, materializing lazily."""
        i = 0
        while True:
            while i >= len(self.segments):
                if not self._advance():
                    return
            yield self.segments[i]
            i += 1

    def segment_at(self, lam: float) -> PathSegment:
        self.extend_to(lam)
        if lam < self.lambda_lo - 1e-12 * max(1.0, self.tau):
            raise PathRangeError(lam, self.lambda_lo, math.inf)
        for seg in self.segments:
            if lam >= seg.lambda_lo:
                return seg
        return self.segments[-1]


def homotopy_path(X: DesignMatrix, y: np.ndarray, lambda_min: float,
                  cfg: SolverConfig = DEFAULT_CONFIG) -> LassoPath:
    """Track the solution path from tau = ||X^t y||_inf down to lambda_min.

    Breakpoints are variable entries (an inactive correlation reaching the
    boundary) and exits (an active coefficient crossing zero).  The active
    Gram factor is maintained by rank-one Cholesky updates and refactorized
    whenever its estimated condition number exceeds 1e10.  Tracking stops at
    ``lambda_min`` or as soon as the active set has n elements.

    Raises ``DegenerateBreakpointError`` when two events collide within
    ``cfg.bp_tol``.
    """
    path = LassoPath(X, y, lambda_min, cfg)
    path.extend_fully()
    return path


def lazy_path(X: DesignMatrix, y: np.ndarray, lambda_min: float,
              cfg: SolverConfig = DEFAULT_CONFIG) -> LassoPath:
    """Same as ``homotopy_path`` but materializes segments only when asked."""
    return LassoPath(X, y, lambda_min, cfg)


def eval_path(path: LassoPath, lam: float) -> LassoSolution:
    """Evaluate the affine form on the containing segment; recertifies KKT."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    seg = path.segment_at(lam)
    beta = np.zeros(path.X.p)
    if len(seg.active):
        beta[seg.active] = seg.beta_active(lam)
    return _solution_from_beta(path.X, path.y, lam, beta, path.kkt_tol,
                               active_order=seg.active)


def export_path_csv(path: LassoPath, dest) -> None:
    """Segment table: (segment, lambda_hi, lambda_lo, active indices, signs)."""
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["segment", "lambda_hi", "lambda_lo", "active", "signs"])
        for k, seg in enumerate(path.segments):
            w.writerow([
                k,
                "inf" if math.isinf(seg.lambda_hi) else f"{seg.lambda_hi:.17g}",
                f"{seg.lambda_lo:.17g}",
                ";".join(str(int(j)) for j in seg.active),
                ";".join(f"{int(s):+d}" for s in seg.signs),
            ])
