"""Periodic grids on [-pi, pi), benchmark signals and their edge vectors.

Signals are described by a :class:`PiecewiseSignal`: a sorted list of
breakpoints in [-pi, pi) plus one closed-form evaluator per piece. Piece
``i`` covers ``[breaks[i-1], breaks[i])`` so that a sample landing exactly on
a breakpoint takes the right-hand branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "UniformGrid",
    "SignalVector",
    "EdgeVector",
    "PiecewiseSignal",
    "build_grid",
    "F1",
    "F2",
    "SIGNALS",
    "get_signal",
    "sample",
    "sample_f1",
    "sample_f2",
    "jump_vector",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class UniformGrid:
    """n-point uniform periodic grid ``s_j = -pi + (j-1) * 2pi/n``."""

    n: int
    delta_s: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.points.setflags(write=False)

    def index_of(self, s: float) -> int:
        """0-based index of the grid point closest to ``s`` (periodic)."""
        k = np.rint((s + np.pi) / self.delta_s)
        return int(k) % self.n


def build_grid(n: int) -> UniformGrid:
    if int(n) != n or n < 4 or n % 2:
        raise ValueError(f"grid size must be an even integer >= 4, got {n!r}")
    n = int(n)
    ds = TWO_PI / n
    pts = -np.pi + np.arange(n) * ds
    return UniformGrid(n=n, delta_s=ds, points=pts)


@dataclass(frozen=True)
class SignalVector:
    values: np.ndarray
    grid: UniformGrid

    def __post_init__(self):
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"signal has shape {self.values.shape}, grid expects ({self.grid.n},)"
            )
        self.values.setflags(write=False)


@dataclass(frozen=True)
class EdgeVector:
    """Jump values per cell; entry ``j`` belongs to the cell ending at ``s_{j+1}``."""

    values: np.ndarray
    grid: UniformGrid

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def jump_cells(self) -> np.ndarray:
        return np.flatnonzero(self.values)


@dataclass(frozen=True)
class PiecewiseSignal:
    """A 2pi-periodic piecewise-smooth function on [-pi, pi).

    Parameters
    ----------
    name : str
    breaks : sequence of float
        Interior breakpoints, strictly increasing, inside (-pi, pi).
    pieces : sequence of callables
        ``len(breaks) + 1`` vectorised evaluators.
    """

    name: str
    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        b = np.asarray(self.breaks, dtype=float)
        if b.size and (np.any(np.diff(b) <= 0) or b[0] <= -np.pi or b[-1] >= np.pi):
            raise ValueError("breakpoints must be strictly increasing inside (-pi, pi)")

    @classmethod
    def from_pieces(cls, name: str, breaks: Sequence[float],
                    pieces: Sequence[Callable]) -> "PiecewiseSignal":
        return cls(name, tuple(float(b) for b in breaks), tuple(pieces))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        # fold into [-pi, pi); exact for the grid's own points
        t = np.where((s >= -np.pi) & (s < np.pi), s, np.mod(s + np.pi, TWO_PI) - np.pi)
        which = np.searchsorted(np.asarray(self.breaks), t, side="right")
        out = np.empty_like(t)
        for i, piece in enumerate(self.pieces):
            m = which == i
            if np.any(m):
                out[m] = piece(t[m])
        return out

    def one_sided_limits(self, xi: float) -> tuple[float, float]:
        """``(f(xi-), f(xi+))`` for an interior breakpoint or for -pi."""
        if np.isclose(xi, -np.pi):
            left = float(self.pieces[-1](np.array([np.pi]))[0])
            right = float(self.pieces[0](np.array([-np.pi]))[0])
            return left, right
        i = self.breaks.index(xi)
        left = float(self.pieces[i](np.array([xi]))[0])
        right = float(self.pieces[i + 1](np.array([xi]))[0])
        return left, right

    def jumps(self) -> list[tuple[float, float]]:
        """All ``(xi, [f](xi))`` with nonzero jump, including the periodic seam."""
        out = []
        for xi in (-np.pi,) + self.breaks:
            left, right = self.one_sided_limits(xi)
            jump = right - left
            if abs(jump) > 1e-14 * max(1.0, abs(left), abs(right)):
                out.append((xi, jump))
        return out


F1 = PiecewiseSignal.from_pieces(
    "f1",
    [-np.pi / 2, np.pi / 2],
    [
        lambda s: s + np.pi,
        lambda s: -0.5 * np.sin(6 * s),
        lambda s: -s + np.pi,
    ],
)

F2 = PiecewiseSignal.from_pieces(
    "f2",
    [-np.pi / 2, np.pi / 2],
    [
        lambda s: np.full_like(s, 1.5),
        lambda s: np.full_like(s, -6 / np.pi),
        lambda s: np.full_like(s, 1.5),
    ],
)

SIGNALS = {"f1": F1, "f2": F2}


def get_signal(signal_id) -> PiecewiseSignal:
    if isinstance(signal_id, PiecewiseSignal):
        return signal_id
    try:
        return SIGNALS[signal_id]
    except KeyError:
        raise ValueError(
            f"unknown signal {signal_id!r}; expected one of {sorted(SIGNALS)}"
        ) from None


def sample(signal, grid: UniformGrid) -> SignalVector:
    return SignalVector(get_signal(signal)(grid.points), grid)


def sample_f1(grid: UniformGrid) -> SignalVector:
    return sample(F1, grid)


def sample_f2(grid: UniformGrid) -> SignalVector:
    return sample(F2, grid)


def jump_vector(signal_id, grid: UniformGrid) -> EdgeVector:
    """Ground-truth edge vector from the analytic jump locations.

    A jump at ``xi`` is stored in cell ``j`` with ``s_j < xi <= s_{j+1}``
    (periodically). Because samples on a breakpoint take the right-hand
    value, this is the cell whose two samples straddle the jump, which is
    exactly where ``f_{j+1} - f_j`` sees it.
    """
    sig = get_signal(signal_id)
    g = np.zeros(grid.n)
    for xi, jump in sig.jumps():
        pos = (xi + np.pi) / grid.delta_s
        k = int(np.ceil(pos - 1e-9 * max(1.0, pos)))  # s_k is the first point >= xi
        g[(k - 1) % grid.n] += jump
    return EdgeVector(g, grid)
