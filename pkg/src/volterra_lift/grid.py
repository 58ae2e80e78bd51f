"""Uniform grids on [0, T], simplex index sets and the delta operator."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class Grid:
    """Uniform partition ``t_k = k * T / n`` of ``[0, T]``.

    Use :func:`make_uniform_grid` to construct; the dataclass is frozen and
    safe to share between workers.
    """

    horizon: float
    cells: int
    points: np.ndarray = field(repr=False, compare=False)

    @property
    def h(self) -> float:
        """Mesh size ``T / n``."""
        return self.horizon / self.cells

    @property
    def n_points(self) -> int:
        return self.cells + 1

    def index_of(self, time: float, *, rtol: float = 1e-9) -> int:
        """Return the index k with ``t_k == time`` (up to ``rtol * h``).

        Raises
        ------
        DomainError
            If ``time`` is not a grid point.
        """
        k = int(round(time / self.h))
        if k < 0 or k > self.cells or abs(k * self.h - time) > rtol * self.h:
            raise DomainError(f"time {time!r} is not a point of {self}")
        return k

    def indices_of(self, times) -> tuple[int, ...]:
        return tuple(self.index_of(x) for x in times)

    def subgrid(self, factor: int) -> "Grid":
        """Coarser grid keeping every ``factor``-th point."""
        if factor < 1 or self.cells % factor:
            raise ParameterError(f"factor {factor} does not divide cells={self.cells}")
        return make_uniform_grid(self.horizon, self.cells // factor)

    def __repr__(self) -> str:
        return f"Grid(horizon={self.horizon}, cells={self.cells})"


def make_uniform_grid(horizon: float, cells: int) -> Grid:
    """Build the uniform grid with ``cells`` intervals on ``[0, horizon]``.

    Points are computed as ``k * horizon / cells`` so that every point is
    exact to one rounding, and the last point equals ``horizon`` exactly.
    """
    problems = []
    if not np.isfinite(horizon) or horizon <= 0:
        problems.append("horizon must be > 0")
    if int(cells) != cells or cells < 2:
        problems.append("cells must be an integer >= 2")
    if problems:
        raise ParameterError(problems)
    cells = int(cells)
    points = np.arange(cells + 1, dtype=float) * (float(horizon) / cells)
    points[-1] = float(horizon)
    points.setflags(write=False)
    return Grid(float(horizon), cells, points)


def simplex_indices(n_points: int, order: int, *, strict: bool = True) -> Iterator[tuple[int, ...]]:
    """Iterate over ordered index tuples ``i_1 < ... < i_order`` (or ``<=``).

    Tuples are yielded in lexicographic order, which is also the tie-break
    order used by the sup-norm routines.
    """
    rng = range(n_points)
    if strict:
        return itertools.combinations(rng, order)
    return itertools.combinations_with_replacement(rng, order)


def strided_indices(cells: int, max_points: int) -> np.ndarray:
    """Evenly strided grid indices ``0, k, 2k, ..., cells`` with at most ``max_points`` entries.

    The stride is the smallest divisor of ``cells`` that keeps the count
    within budget, so the subset is itself a uniform grid.
    """
    if max_points < 2:
        raise ParameterError("max_points must be >= 2")
    for stride in range(1, cells + 1):
        if cells % stride == 0 and cells // stride + 1 <= max_points:
            return np.arange(0, cells + 1, stride)
    return np.array([0, cells])


class TwoParamField:
    """Values on the discrete triangle ``{(t, tau): t <= tau}``.

    Row ``tau`` holds the ``tau + 1`` entries ``t = 0..tau`` contiguously in a
    flat array; ``offsets[tau] = tau * (tau + 1) / 2``. Each entry may carry a
    trailing ``shape`` (a vector for level one, a matrix for level two).
    """

    def __init__(self, n_points: int, shape: tuple[int, ...] = (), values: np.ndarray | None = None):
        self.n_points = n_points
        self.shape = tuple(shape)
        self.offsets = np.concatenate(([0], np.cumsum(np.arange(1, n_points + 1))))
        size = int(self.offsets[-1])
        if values is None:
            values = np.zeros((size,) + self.shape)
        elif values.shape != (size,) + self.shape:
            raise ValueError(f"values has shape {values.shape}, expected {(size,) + self.shape}")
        self.values = values

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "TwoParamField":
        """Pack a square array ``dense[tau, t, ...]`` keeping only ``t <= tau``."""
        n = dense.shape[0]
        tau_idx, t_idx = np.tril_indices(n)
        return cls(n, dense.shape[2:], np.ascontiguousarray(dense[tau_idx, t_idx]))

    def row(self, tau: int) -> np.ndarray:
        """View of ``values[t, tau]`` for ``t = 0..tau``."""
        return self.values[self.offsets[tau]:self.offsets[tau + 1]]

    def __getitem__(self, key):
        t, tau = key
        if not 0 <= t <= tau < self.n_points:
            raise DomainError(f"need 0 <= t <= tau < {self.n_points}, got t={t}, tau={tau}")
        return self.values[self.offsets[tau] + t]

    def dense(self) -> np.ndarray:
        """Square array ``out[tau, t, ...]``, zero above the diagonal."""
        out = np.zeros((self.n_points, self.n_points) + self.shape)
        tau_idx, t_idx = np.tril_indices(self.n_points)
        out[tau_idx, t_idx] = self.values
        return out


def delta_increment(g: Callable[[float, float], np.ndarray], s: float, u: float, t: float):
    """Return ``delta_u g_ts = g_ts - g_tu - g_us``.

    ``g(a, b)`` must return the increment ``g_ba`` over ``[a, b]``.

    Raises
    ------
    DomainError
        Unless ``s <= u <= t``.
    """
    if not s <= u <= t:
        raise DomainError(f"need s <= u <= t, got s={s}, u={u}, t={t}")
    return np.asarray(g(s, t)) - np.asarray(g(u, t)) - np.asarray(g(s, u))
