"""Generalized Lasso by ADMM.

Solves::

    minimize  1/2 ||A x - y||_2^2 + alpha ||L x||_1

with the splitting ``z = L x``. The x-update is a dense Cholesky solve with
``A^T A + rho L^T L``; the factorisation is cached and rebuilt only when the
penalty ``rho`` is rebalanced.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

__all__ = [
    "SolverError",
    "LassoProblem",
    "SolverConfig",
    "SolverReport",
    "EstimateConfig",
    "soft_threshold",
    "least_squares_estimate",
    "lasso_alpha",
    "objective",
    "solve_generalized_lasso",
    "optimality_certificate",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


def _mat(m) -> np.ndarray:
    return np.asarray(getattr(m, "matrix", m), dtype=float)


@dataclass(frozen=True)
class LassoProblem:
    A: np.ndarray
    y: np.ndarray
    L: np.ndarray
    alpha: float

    def __post_init__(self):
        A, L = _mat(self.A), _mat(self.L)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "y", y)
        if A.ndim != 2 or L.ndim != 2 or y.ndim != 1:
            raise ValueError("A and L must be matrices and y a vector")
        if A.shape[0] != y.size or A.shape[1] != L.shape[1]:
            raise ValueError(
                f"inconsistent shapes: A {A.shape}, y {y.shape}, L {L.shape}"
            )
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")


@dataclass(frozen=True)
class SolverConfig:
    rho: float | None = None  # None: start at alpha
    max_iters: int = 10_000
    tol_abs: float = 1e-6
    tol_rel: float = 1e-6
    adaptive_rho: bool = True
    rho_mu: float = 10.0
    rho_tau: float = 2.0
    fidelity: str = "squared"
    reweight_iters: int = 50
    polish: bool = True

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise ValueError("tolerances must be positive")
        if self.fidelity not in ("squared", "unsquared"):
            raise ValueError(f"fidelity must be 'squared' or 'unsquared', got {self.fidelity!r}")


@dataclass
class SolverReport:
    x: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    objective_trace: np.ndarray = field(repr=False)
    converged: bool
    rho: float = float("nan")
    dual: np.ndarray | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1]) if self.objective_trace.size else float("nan")


@dataclass(frozen=True)
class EstimateConfig:
    method: str = "plain"  # "plain" or "tikhonov"
    lam: float = 0.0

    def __post_init__(self):
        if self.method not in ("plain", "tikhonov"):
            raise ValueError(f"unknown estimate method {self.method!r}")
        if self.method == "tikhonov" and not self.lam > 0:
            raise ValueError("Tikhonov estimate needs lam > 0")


def soft_threshold(v, kappa):
    """``sign(v) * max(|v| - kappa, 0)``, elementwise."""
    if np.any(np.asarray(kappa) < 0):
        raise ValueError("threshold must be non-negative")
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def least_squares_estimate(A, y, cfg: EstimateConfig = EstimateConfig()) -> np.ndarray:
    A = _mat(A)
    y = np.asarray(y, dtype=float)
    if cfg.method == "tikhonov":
        n = A.shape[1]
        return linalg.solve(A.T @ A + cfg.lam * np.eye(n), A.T @ y, assume_a="pos")
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e8:
        raise SolverError(
            f"forward operator is numerically singular (cond={cond:.3g}); "
            "use EstimateConfig('tikhonov', lam)"
        )
    return np.linalg.solve(A, y) if A.shape[0] == A.shape[1] else np.linalg.lstsq(A, y, rcond=None)[0]


def lasso_alpha(L, x_est, sigma2: float, n: int | None = None) -> float:
    """``2^{3/2} sigma^2 / beta`` with ``beta^2 = ||L x_est||^2 / n``."""
    Lx = _mat(L) @ np.asarray(x_est, dtype=float)
    n = Lx.size if n is None else n
    beta = math.sqrt(float(Lx @ Lx) / n)
    if beta == 0.0:
        raise SolverError(
            "L annihilates the initial estimate (beta = 0); supply alpha explicitly"
        )
    return 2.0**1.5 * sigma2 / beta


def objective(A, y, L, alpha, x, fidelity: str = "squared") -> float:
    r = _mat(A) @ x - y
    fid = 0.5 * float(r @ r) if fidelity == "squared" else float(np.linalg.norm(r))
    return fid + alpha * float(np.abs(_mat(L) @ x).sum())


class _XUpdate:
    def __init__(self, AtA, LtL):
        self.AtA, self.LtL = AtA, LtL
        self.rho = None

    def factor(self, rho: float):
        m = self.AtA + rho * self.LtL
        try:
            self.cf = linalg.cho_factor(m, check_finite=False)
        except linalg.LinAlgError:
            jitter = 1e-12 * max(np.trace(m) / m.shape[0], 1.0)
            log.debug("Cholesky failed at rho=%g, adding jitter %g", rho, jitter)
            try:
                self.cf = linalg.cho_factor(m + jitter * np.eye(m.shape[0]), check_finite=False)
            except linalg.LinAlgError as exc:
                raise SolverError(
                    "A^T A + rho L^T L is singular; adjust rho or regularise A"
                ) from exc
        self.rho = rho

    def solve(self, rhs):
        return linalg.cho_solve(self.cf, rhs, check_finite=False)


def _admm(A, y, L, alpha, cfg: SolverConfig, x0):
    m, n = L.shape
    AtA, Aty, LtL = A.T @ A, A.T @ y, L.T @ L
    rho = cfg.rho if cfg.rho is not None else (alpha if alpha > 0 else 1.0)
    xu = _XUpdate(AtA, LtL)
    xu.factor(rho)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    z = L @ x
    u = np.zeros(m)
    trace = []
    r_norm = s_norm = float("inf")
    converged = False
    k = 0
    for k in range(1, cfg.max_iters + 1):
        x = xu.solve(Aty + rho * (L.T @ (z - u)))
        Lx = L @ x
        z_old = z
        z = soft_threshold(Lx + u, alpha / rho)
        u = u + Lx - z

        res = A @ x - y
        trace.append(0.5 * float(res @ res) + alpha * float(np.abs(Lx).sum()))
        r_norm = float(np.linalg.norm(Lx - z))
        s_norm = rho * float(np.linalg.norm(L.T @ (z - z_old)))
        eps_pri = math.sqrt(m) * cfg.tol_abs + cfg.tol_rel * max(
            float(np.linalg.norm(Lx)), float(np.linalg.norm(z)))
        eps_dual = math.sqrt(n) * cfg.tol_abs + cfg.tol_rel * rho * float(
            np.linalg.norm(L.T @ u))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        if cfg.adaptive_rho:
            if r_norm > cfg.rho_mu * s_norm:
                rho *= cfg.rho_tau
                u /= cfg.rho_tau
                xu.factor(rho)
            elif s_norm > cfg.rho_mu * r_norm:
                rho /= cfg.rho_tau
                u *= cfg.rho_tau
                xu.factor(rho)
    return x, k, r_norm, s_norm, np.asarray(trace), converged, rho, rho * u / alpha, z


def _polish(A, y, L, alpha, z):
    # Re-solve exactly on the active set ADMM identified: L_off x = 0 and the
    # l1 term is linear with the signs of z on the support.
    on = z != 0.0
    sgn = np.sign(z[on])
    if (~on).any():
        basis = linalg.null_space(L[~on])
    else:
        basis = np.eye(L.shape[1])
    if basis.shape[1] == 0:
        return None
    AN = A @ basis
    rhs = basis.T @ (A.T @ y - alpha * (L[on].T @ sgn))
    try:
        w = linalg.solve(AN.T @ AN, rhs, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        return None
    xp = basis @ w
    if np.any(np.sign(L[on] @ xp) != sgn):
        return None
    return xp


def solve_generalized_lasso(prob: LassoProblem, cfg: SolverConfig = SolverConfig(),
                            x_est: np.ndarray | None = None) -> SolverReport:
    """Minimise the generalized Lasso objective.

    Parameters
    ----------
    prob : LassoProblem
    cfg : SolverConfig
    x_est : array, optional
        Warm start. The returned iterate is never worse (in objective) than
        ``x_est`` or the zero vector.

    Returns
    -------
    SolverReport
        ``converged=False`` when ``max_iters`` is hit; that is not an error.
    """
    A, y, L, alpha = prob.A, prob.y, prob.L, float(prob.alpha)
    if cfg.fidelity == "unsquared":
        return _solve_unsquared(prob, cfg, x_est)

    if alpha == 0.0:
        try:
            x = np.linalg.solve(A, y)
        except np.linalg.LinAlgError:
            x = np.linalg.lstsq(A, y, rcond=None)[0]
        obj = objective(A, y, L, 0.0, x)
        return SolverReport(x, 0, 0.0, 0.0, np.array([obj]), True)

    x, k, r, s, trace, conv, rho, dual, z = _admm(A, y, L, alpha, cfg, x_est)

    best, best_obj = x, objective(A, y, L, alpha, x)
    if cfg.polish:
        xp = _polish(A, y, L, alpha, z)
        if xp is not None:
            op = objective(A, y, L, alpha, xp)
            if op <= best_obj + 1e-12 * max(1.0, abs(best_obj)):
                best, best_obj = xp, op
    candidates = [np.zeros(A.shape[1])] + ([np.asarray(x_est, float)] if x_est is not None else [])
    for c in candidates:
        oc = objective(A, y, L, alpha, c)
        if oc < best_obj:
            best, best_obj = c, oc
    trace = np.append(trace, best_obj)
    if not conv:
        log.warning("ADMM stopped at max_iters=%d (r=%.3g, s=%.3g)", k, r, s)
    return SolverReport(best, k, r, s, trace, conv, rho, dual)


def _solve_unsquared(prob: LassoProblem, cfg: SolverConfig, x_est):
    # ||r|| + a||Lx||_1 is stationary where A^T r + a ||r|| L^T g = 0, i.e. the
    # squared problem with weight a ||r||; iterate that weight to a fixed point.
    A, y, L, alpha = prob.A, prob.y, prob.L, float(prob.alpha)
    sq = dataclasses.replace(cfg, fidelity="squared")
    x = np.zeros(A.shape[1]) if x_est is None else np.asarray(x_est, float)
    weight = max(float(np.linalg.norm(A @ x - y)), 1e-12)
    total, rep = 0, None
    trace = []
    for _ in range(cfg.reweight_iters):
        rep = solve_generalized_lasso(LassoProblem(A, y, L, alpha * weight), sq, x)
        total += rep.iterations
        x = rep.x
        trace.append(objective(A, y, L, alpha, x, "unsquared"))
        new = max(float(np.linalg.norm(A @ x - y)), 1e-12)
        if abs(new - weight) <= 1e-8 * max(weight, 1.0):
            break
        weight = new
    return SolverReport(x, total, rep.primal_residual, rep.dual_residual,
                        np.asarray(trace), rep.converged, rep.rho)


@dataclass(frozen=True)
class Certificate:
    g: np.ndarray = field(repr=False)
    stationarity: float
    bound: float
    max_abs_g: float
    sign_mismatch: float

    def holds(self, g_tol=1e-4, sign_tol=1e-3) -> bool:
        return (self.stationarity <= self.bound and self.max_abs_g <= 1 + g_tol
                and self.sign_mismatch <= sign_tol)


def optimality_certificate(prob: LassoProblem, x, support_tol: float = 1e-6,
                           stat_tol: float = 1e-4) -> Certificate:
    """Fit a subgradient ``g`` of ``||.||_1`` at ``L x`` certifying optimality.

    ``g`` is pinned to ``sign(Lx)`` on the support and fitted by bounded least
    squares (``|g| <= 1``) elsewhere so that ``A^T(Ax - y) + alpha L^T g`` is
    as small as possible.
    """
    A, y, L, alpha = prob.A, prob.y, prob.L, float(prob.alpha)
    grad = A.T @ (A @ x - y)
    bound = stat_tol * max(1.0, float(np.abs(A.T @ y).max()))
    Lx = L @ x
    on = np.abs(Lx) > support_tol
    g = np.sign(Lx) * on
    if alpha == 0.0:
        return Certificate(g, float(np.abs(grad).max()), bound, 1.0 if on.any() else 0.0, 0.0)
    rhs = -grad / alpha - L[on].T @ g[on]
    free = ~on
    if free.any():
        fit = optimize.lsq_linear(L[free].T, rhs, bounds=(-1.0, 1.0), method="bvls",
                                  tol=1e-14, lsmr_tol=None)
        g[free] = fit.x
    stat = float(np.abs(grad + alpha * (L.T @ g)).max())
    mismatch = float(np.abs(g[on] - np.sign(Lx[on])).max()) if on.any() else 0.0
    return Certificate(g, stat, bound, float(np.abs(g).max()), mismatch)
