"""Recovery error and quality metrics.

Window indices are 1-based and inclusive, matching how the grid is
numbered (``s_1 = -pi``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ErrorWindow",
    "SparsityProfile",
    "WINDOW_PRESETS",
    "window_preset",
    "abs_error",
    "log10_abs_error",
    "rel_error",
    "mean_rel_error",
    "snr_db",
    "sparsity_profile",
]

log = logging.getLogger(__name__)

DISPLAY_FLOOR = 1e-16


@dataclass(frozen=True)
class ErrorWindow:
    j_min: int
    j_max: int

    def __post_init__(self):
        if not 1 <= self.j_min <= self.j_max:
            raise ValueError(f"need 1 <= j_min <= j_max, got {self.j_min}..{self.j_max}")

    def slice(self, n: int) -> slice:
        if self.j_max > n:
            raise ValueError(f"window {self.j_min}..{self.j_max} exceeds n={n}")
        return slice(self.j_min - 1, self.j_max)

    @property
    def is_point(self) -> bool:
        return self.j_min == self.j_max


def window_preset(name: str, n: int = 128) -> ErrorWindow:
    """Named windows for f1.

    ``smooth-f1`` covers the smooth stretch [-pi/3, pi/3) of f1 (44..85 at n=128);
    ``near-jump-f1`` / ``near-jump-f1-right`` are the single points
    ``n/4 - 2`` and ``n/4 + 2`` either side of the jump at -pi/2.
    """
    if name == "smooth-f1":
        ds = 2 * np.pi / n
        j_min = math.ceil((2 * np.pi / 3) / ds - 1e-9) + 1
        # upper end stops one point short of pi/3
        j_max = math.floor((4 * np.pi / 3) / ds + 1e-9)
        return ErrorWindow(j_min, j_max)
    if name == "near-jump-f1":
        return ErrorWindow(n // 4 - 2, n // 4 - 2)
    if name == "near-jump-f1-right":
        return ErrorWindow(n // 4 + 2, n // 4 + 2)
    raise ValueError(f"unknown window preset {name!r}; expected one of {WINDOW_PRESETS}")


WINDOW_PRESETS = ("smooth-f1", "near-jump-f1", "near-jump-f1-right")


def abs_error(x, f) -> np.ndarray:
    x, f = np.asarray(x, float), np.asarray(f, float)
    if x.shape != f.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {f.shape}")
    return np.abs(x - f)


def log10_abs_error(x, f) -> np.ndarray:
    """``log10`` of the pointwise error, clamped at 1e-16 for display."""
    return np.log10(np.maximum(abs_error(x, f), DISPLAY_FLOOR))


def rel_error(x, f, w: ErrorWindow, zeros: str = "raise") -> float:
    """Windowed sum of ``|x_j - f_j| / |f_j|`` (a sum, not a mean).

    ``zeros="raise"`` rejects ``f_j == 0`` inside the window; ``"skip"``
    drops those terms and logs the indices.
    """
    e = abs_error(x, f)
    f = np.asarray(f, float)
    sl = w.slice(f.size)
    fw, ew = f[sl], e[sl]
    bad = fw == 0.0
    if bad.any():
        idx = (np.flatnonzero(bad) + w.j_min).tolist()
        if zeros == "raise":
            raise ValueError(f"reference signal vanishes inside the window at j={idx}")
        if zeros != "skip":
            raise ValueError(f"zeros must be 'raise' or 'skip', got {zeros!r}")
        log.debug("skipping zero reference entries at j=%s", idx)
        fw, ew = fw[~bad], ew[~bad]
    return float(np.sum(ew / np.abs(fw)))


def mean_rel_error(x, f, w: ErrorWindow, zeros: str = "raise") -> float:
    """Normalised variant of :func:`rel_error`: the mean instead of the sum."""
    f = np.asarray(f, float)
    count = int(np.count_nonzero(f[w.slice(f.size)])) if zeros == "skip" else w.j_max - w.j_min + 1
    return rel_error(x, f, w, zeros) / count


def snr_db(f, sigma2: float) -> float:
    f = np.asarray(f, float)
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    power = float(f @ f)
    if power == 0.0:
        raise ValueError("SNR of a zero signal is undefined")
    return 10.0 * math.log10(power / (f.size * sigma2))


@dataclass(frozen=True)
class SparsityProfile:
    l1_norm: float
    support_size: int


def sparsity_profile(L, x, threshold: float = 0.0) -> SparsityProfile:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    Lx = np.asarray(getattr(L, "matrix", L)) @ np.asarray(x, float)
    return SparsityProfile(float(np.abs(Lx).sum()), int(np.count_nonzero(np.abs(Lx) > threshold)))
