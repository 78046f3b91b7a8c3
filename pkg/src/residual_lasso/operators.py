"""Sparsifying transforms: local differencing, concentration-factor sums and
their residual.

All three operators are n x n circulant matrices acting on samples of a
2pi-periodic function on the uniform grid ``s_j = -pi + (j-1) 2pi/n``:

* ``local_diff_matrix(n, p)`` -- the (2p+1)-order symmetric difference
  stencil, normalised so that a unit jump is reported with magnitude one.
* ``global_edge_matrix(n, p, zeta)`` -- the Fourier concentration-factor
  jump approximation evaluated at ``s_{j+zeta}`` with the trigonometric
  factor ``mu_{2p+1}``.
* ``residual_operator(n, p, zeta)`` -- their difference.

At ``zeta = 1/2`` the first two act identically on every vector, which makes
the residual vanish; ``zeta = 1/4`` is the working default.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
from scipy import integrate

from .grid_signals import SignalVector

__all__ = [
    "OperatorKind",
    "EdgeOperator",
    "ConcentrationFactor",
    "AdmissibilityReport",
    "RankReport",
    "DEFAULT_ZETA",
    "binom_q",
    "local_diff_matrix",
    "apply_local_diff",
    "concentration_factor",
    "concentration_kernel",
    "admissibility_report",
    "global_edge_matrix",
    "residual_operator",
    "build_operator",
    "dft_coefficients",
    "rank_diagnostics",
]

DEFAULT_ZETA = 0.25


class OperatorKind(str, enum.Enum):
    LOCAL = "local"
    GLOBAL = "global"
    RESIDUAL = "residual"


@dataclass(frozen=True)
class EdgeOperator:
    matrix: np.ndarray = field(repr=False)
    kind: OperatorKind
    order_p: int
    zeta: float | None = None

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"edge operator must be square, got shape {m.shape}")
        m.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, x):
        return self.matrix @ x

    def row_sum_defect(self) -> float:
        """Largest |row sum| relative to the row's max-abs entry."""
        m = self.matrix
        scale = np.maximum(np.abs(m).max(axis=1), np.finfo(float).tiny)
        return float(np.max(np.abs(m.sum(axis=1)) / scale))


def binom_q(l: int, p: int) -> int:
    """Jump-response weight ``q_{l,p} = C(2p, p+|l|)``; ``q_{0,p}`` normalises the stencil."""
    if p < 0:
        raise ValueError(f"order p must be non-negative, got {p}")
    if abs(l) > p:
        raise ValueError(f"|l| must not exceed p (l={l}, p={p})")
    return comb(2 * p, p + abs(l))


def _stencil(p: int) -> list[tuple[int, float]]:
    """(offset, weight) pairs of row j relative to column j."""
    q0 = binom_q(0, p)
    taps = []
    for l in range(p + 1):
        c = (-1) ** l * comb(2 * p + 1, p - l) / q0
        taps.append((1 + l, c))
        taps.append((-l, -c))
    return taps


def _check_local(n: int, p: int):
    if p < 0:
        raise ValueError(f"order p must be non-negative, got {p}")
    if n % 2 or n < 2 * (2 * p + 2):
        raise ValueError(
            f"stencil of order {2 * p + 1} needs an even n >= {2 * (2 * p + 2)}, got n={n}"
        )


def local_diff_matrix(n: int, p: int) -> EdgeOperator:
    _check_local(n, p)
    m = np.zeros((n, n))
    rows = np.arange(n)
    for off, c in _stencil(p):
        m[rows, (rows + off) % n] += c
    return EdgeOperator(m, OperatorKind.LOCAL, p)


def apply_local_diff(f, p: int) -> np.ndarray:
    """Stencil form of ``local_diff_matrix(n, p) @ f`` without assembling the matrix."""
    v = f.values if isinstance(f, SignalVector) else np.asarray(f, dtype=float)
    _check_local(v.size, p)
    out = np.zeros_like(v, dtype=float)
    for off, c in _stencil(p):
        out += c * np.roll(v, -off)
    return out


@dataclass(frozen=True)
class ConcentrationFactor:
    evaluator: Callable[[np.ndarray], np.ndarray]
    order_p: int

    def __call__(self, eta):
        return self.evaluator(np.asarray(eta, dtype=float))


def concentration_factor(p: int) -> ConcentrationFactor:
    """``mu_{2p+1}(eta) = 2^{2p} eta sin^{2p}(pi eta / 2) / q_{0,p}``."""
    if p < 0:
        raise ValueError(f"order p must be non-negative, got {p}")
    scale = 4.0 ** p / binom_q(0, p)

    def mu(eta):
        return scale * eta * np.sin(0.5 * np.pi * eta) ** (2 * p)

    return ConcentrationFactor(mu, p)


def concentration_kernel(cf: ConcentrationFactor, n: int, s) -> np.ndarray:
    """``K(s) = sum_{k=1}^{n/2} mu(2k/n) sin(k s)``."""
    k = np.arange(1, n // 2 + 1)
    s = np.asarray(s, dtype=float)
    return np.sin(np.multiply.outer(s, k)) @ cf(2.0 * k / n)


@dataclass(frozen=True)
class AdmissibilityReport:
    oddness_defect: float
    normalization: float
    epsilon: float
    max_second_difference: float


def admissibility_report(cf: ConcentrationFactor, n: int, epsilon: float,
                         samples: int = 2001) -> AdmissibilityReport:
    """Numerical probes of the three admissibility requirements.

    Never raises on an inadmissible factor; the caller reads the numbers.
    ``max_second_difference`` is the largest scaled second difference of
    ``mu(eta)/eta`` on an interior grid of (0, 1), a proxy for C^2 regularity.
    """
    s = np.linspace(0.0, np.pi, samples)
    kern = concentration_kernel(cf, n, s)
    kern_neg = concentration_kernel(cf, n, -s)
    odd = float(np.max(np.abs(kern + kern_neg)))

    ratio = lambda eta: float(cf(eta)) / eta
    norm, _ = integrate.quad(ratio, epsilon, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)

    eta = np.linspace(0.0, 1.0, samples)[1:-1]
    h = eta[1] - eta[0]
    r = cf(eta) / eta
    d2 = np.diff(r, 2) / h**2
    return AdmissibilityReport(odd, float(norm), float(epsilon), float(np.max(np.abs(d2))))


def _global_offsets(n: int, p: int, zeta: float, nyquist: str) -> np.ndarray:
    """Entry of S(j, l) as a function of d = j - l, for d = -(n-1) .. n-1."""
    ds = 2.0 * np.pi / n
    k = np.arange(1, n // 2 + 1, dtype=float)
    w = np.sin(0.5 * k * ds) ** (2 * p)
    if nyquist == "half":
        w[-1] *= 0.5
    elif nyquist != "full":
        raise ValueError(f"nyquist must be 'half' or 'full', got {nyquist!r}")
    d = np.arange(-(n - 1), n, dtype=float)
    theta_plus = d + (0.5 + zeta)
    theta_minus = d - (0.5 - zeta)
    arg = ds * k[None, :]
    terms = np.cos(arg * theta_plus[:, None]) - np.cos(arg * theta_minus[:, None])
    return (2.0 ** (2 * p + 1) / (n * binom_q(0, p))) * (terms @ w)


def global_edge_matrix(n: int, p: int, zeta: float = DEFAULT_ZETA,
                       nyquist: str = "half") -> EdgeOperator:
    """Concentration-factor edge detector with ``mu_{2p+1}``, sampled at ``s_{j+zeta}``.

    Built by direct summation of the real trigonometric series over
    ``k = 1 .. n/2``. The ``k = n/2`` term is the aliased pair ``+-n/2`` of
    the DFT; ``nyquist="half"`` counts it once, which is what makes
    ``S_{n,1/2} f = T_n^p f`` hold for every sample vector. ``"full"``
    keeps the unit weight of the printed series (then ``T - S_{n,1/2}`` is
    the rank-one Nyquist mode).
    """
    if n % 2 or n < 4:
        raise ValueError(f"n must be even and >= 4, got {n}")
    if p < 0:
        raise ValueError(f"order p must be non-negative, got {p}")
    if not 0.0 <= zeta < 1.0:
        raise ValueError(f"zeta must lie in [0, 1), got {zeta}")
    c = _global_offsets(n, p, zeta, nyquist)
    j = np.arange(n)
    m = c[(j[:, None] - j[None, :]) + (n - 1)]
    return EdgeOperator(m, OperatorKind.GLOBAL, p, float(zeta))


def residual_operator(n: int, p: int, zeta: float = DEFAULT_ZETA,
                      nyquist: str = "half") -> EdgeOperator:
    t = local_diff_matrix(n, p).matrix
    s = global_edge_matrix(n, p, zeta, nyquist).matrix
    return EdgeOperator(t - s, OperatorKind.RESIDUAL, p, float(zeta))


def build_operator(kind, n: int, p: int, zeta: float = DEFAULT_ZETA) -> EdgeOperator:
    kind = OperatorKind(kind)
    if kind is OperatorKind.LOCAL:
        return local_diff_matrix(n, p)
    if kind is OperatorKind.GLOBAL:
        return global_edge_matrix(n, p, zeta)
    return residual_operator(n, p, zeta)


def dft_coefficients(f) -> np.ndarray:
    """``f_hat_k = (1/n) sum_j f(s_j) exp(-i k s_j)`` for ``k = -n/2 .. n/2-1``.

    Returned in that order (index 0 holds ``k = -n/2``).
    """
    v = f.values if isinstance(f, SignalVector) else np.asarray(f)
    n = v.size
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    k = np.arange(-n // 2, n // 2)
    # s_j = -pi + j*ds, so exp(-i k s_j) = (-1)^k exp(-2 pi i k j / n)
    return np.fft.fftshift(np.fft.fft(v)) / n * np.where(k % 2, -1.0, 1.0)


@dataclass(frozen=True)
class RankReport:
    singular_values: np.ndarray = field(repr=False)
    numerical_rank: int
    condition_estimate: float
    tol_rel: float

    @property
    def spectral_gap(self) -> float:
        """sigma_r / sigma_{r+1} at the numerical rank r (inf if nothing follows)."""
        r = self.numerical_rank
        sv = self.singular_values
        if r == 0 or r >= sv.size:
            return float("inf")
        return float(sv[r - 1] / sv[r]) if sv[r] > 0 else float("inf")


def rank_diagnostics(op, tol_rel: float = 1e-8) -> RankReport:
    if not 0.0 < tol_rel < 1.0:
        raise ValueError(f"tol_rel must lie in (0, 1), got {tol_rel}")
    m = op.matrix if isinstance(op, EdgeOperator) else np.asarray(op)
    sv = np.linalg.svd(m, compute_uv=False)  # LinAlgError on non-convergence
    if sv[0] == 0.0:
        return RankReport(sv, 0, float("inf"), tol_rel)
    r = int(np.count_nonzero(sv > tol_rel * sv[0]))
    return RankReport(sv, r, float(sv[0] / sv[r - 1]), tol_rel)
