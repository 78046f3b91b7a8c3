"""Measurement operators and seeded Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid_signals import SignalVector, UniformGrid

__all__ = [
    "ForwardModel",
    "NoiseSpec",
    "identity_model",
    "gaussian_blur_model",
    "undersample_model",
    "sigma2_from_snr",
    "resolve_sigma2",
    "add_noise",
]


@dataclass(frozen=True)
class ForwardModel:
    kind: str
    matrix: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, f) -> np.ndarray:
        v = f.values if isinstance(f, SignalVector) else np.asarray(f, dtype=float)
        return self.matrix @ v


def identity_model(n: int) -> ForwardModel:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return ForwardModel("identity", np.eye(n))


def gaussian_blur_model(grid: UniformGrid, gamma: float,
                        units: str = "physical") -> ForwardModel:
    """Periodic Gaussian blur with standard deviation ``gamma``.

    ``units="physical"`` measures the periodic distance between grid points in
    s-units; ``units="index"`` in cells. Rows are normalised to sum to one, so
    very small ``gamma`` degenerates gracefully to the identity.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    n = grid.n
    cells = np.arange(n)
    cells = np.minimum(cells, n - cells).astype(float)
    if units == "physical":
        d = cells * grid.delta_s
    elif units == "index":
        d = cells
    else:
        raise ValueError(f"units must be 'physical' or 'index', got {units!r}")
    with np.errstate(under="ignore"):
        kernel = np.exp(-(d**2) / (2.0 * gamma**2))
    kernel[kernel < 1e-16 * kernel.max()] = 0.0
    kernel /= kernel.sum()
    # symmetric kernel: row j is the kernel rolled to centre on column j
    j = np.arange(n)
    m = kernel[(j[None, :] - j[:, None]) % n]
    return ForwardModel("blur", m, {"gamma": float(gamma), "units": units})


def undersample_model(n: int, r: float, seed: int) -> ForwardModel:
    """Identity with ``round(r n)`` randomly chosen rows zeroed."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"undersampling ratio must lie in (0, 1), got {r}")
    h = math.floor(r * n + 0.5)
    rng = np.random.default_rng(seed)
    dropped = np.sort(rng.choice(n, size=h, replace=False))
    m = np.eye(n)
    m[dropped, dropped] = 0.0
    return ForwardModel("undersample", m, {"ratio": float(r), "seed": int(seed),
                                           "dropped": dropped})


@dataclass(frozen=True)
class NoiseSpec:
    """Either an SNR in dB (resolved against a clean signal) or a variance."""

    snr_db: float | None = None
    sigma2: float | None = None
    seed: int = 0

    def __post_init__(self):
        if (self.snr_db is None) == (self.sigma2 is None):
            raise ValueError("specify exactly one of snr_db and sigma2")
        if self.sigma2 is not None and self.sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {self.sigma2}")


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, SignalVector) else np.asarray(f, dtype=float)


def sigma2_from_snr(f, snr_db: float) -> float:
    v = _values(f)
    power = float(v @ v) / v.size
    if power == 0.0:
        raise ValueError("cannot calibrate noise against a zero signal")
    return power / 10.0 ** (snr_db / 10.0)


def resolve_sigma2(spec: NoiseSpec, reference=None) -> float:
    if spec.sigma2 is not None:
        return float(spec.sigma2)
    if reference is None:
        raise ValueError("an SNR noise spec needs the clean reference signal")
    return sigma2_from_snr(reference, spec.snr_db)


def add_noise(y, spec: NoiseSpec, reference=None) -> np.ndarray:
    """``y + delta`` with ``delta ~ N(0, sigma^2 I)`` drawn from PCG64(seed).

    Standard normals come from numpy's ``Generator.standard_normal``
    (ziggurat on the PCG64 stream), so results are reproducible for a seed.
    """
    y = _values(y)
    sigma2 = resolve_sigma2(spec, y if reference is None else reference)
    if sigma2 == 0.0:
        return y.copy()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return y + math.sqrt(sigma2) * rng.standard_normal(y.size)
