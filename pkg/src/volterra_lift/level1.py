"""First level of the Volterra lift: ``z^{1,tau}_{ts} = int_s^t (tau - r)^-gamma dx_r``."""

from __future__ import annotations

import numpy as np
from scipy import special

from .driver import PathSample
from .errors import DomainError, ParameterError
from .grid import Grid, TwoParamField

KERNEL_RULES = ("cell_average", "left_point")


def kernel_weights(grid: Grid, gamma: float, rule: str = "cell_average") -> np.ndarray:
    """Weights ``W[tau, k]`` multiplying the driver increment on cell ``k`` under upper index ``tau``.

    ``cell_average`` uses the exact cell mean of ``(tau - r)^-gamma``; ``left_point``
    evaluates the kernel at the left end of the cell. ``W[tau, k] = 0`` for
    ``k >= tau``. The array is Toeplitz: it depends only on ``tau - k``.
    """
    n, h = grid.cells, grid.h
    j = np.arange(1, n + 1, dtype=float)
    if rule == "cell_average":
        w = h**-gamma * (j ** (1 - gamma) - (j - 1) ** (1 - gamma)) / (1 - gamma)
    elif rule == "left_point":
        w = (j * h) ** -gamma
    else:
        raise ParameterError(f"kernel rule must be one of {KERNEL_RULES}")
    return _toeplitz_lower(w, n)


def incell_weights(grid: Grid, gamma: float, rule: str = "cell_average") -> np.ndarray:
    """Weights ``q[tau, k]`` of the second-order in-cell term used at level two.

    For ``cell_average`` this is the exact double integral
    ``h^-2 int_cell (tau - r)^-gamma int_{r_k}^r (r - l)^-gamma dl dr``; for
    ``left_point`` the outer kernel is frozen at the left point.
    """
    n, h = grid.cells, grid.h
    j = np.arange(1, n + 1, dtype=float)
    a, b = 2 - gamma, 1 - gamma
    if rule == "cell_average":
        q = h ** (-2 * gamma) * j ** (2 - 2 * gamma) * special.beta(a, b) * special.betainc(a, b, 1 / j) / b
    elif rule == "left_point":
        q = (j * h) ** -gamma * h**-gamma / (a * b)
    else:
        raise ParameterError(f"kernel rule must be one of {KERNEL_RULES}")
    return _toeplitz_lower(q, n)


def _toeplitz_lower(w: np.ndarray, n: int) -> np.ndarray:
    tau = np.arange(n + 1)[:, None]
    k = np.arange(n)[None, :]
    lag = tau - k
    return np.where(lag >= 1, w[np.clip(lag - 1, 0, n - 1)], 0.0)


def check_level1_gamma(kind: str, hurst: float | None, gamma: float):
    """Reject exponents for which the Wiener integral of the kernel is undefined."""
    if not 0 <= gamma < 1:
        raise ParameterError("gamma not in [0, 1)")
    if kind == "bm" and gamma >= 0.5:
        raise ParameterError("gamma >= 1/2 (bm kernel not square integrable)")
    if kind == "fbm" and gamma >= hurst:
        raise ParameterError("gamma >= H (fbm kernel outside the reproducing space)")


class Level1Field:
    """Values ``z^{1,tau}_{t,0}`` on the grid triangle, one vector of ``m`` components per entry.

    Build with :func:`build_level1`. Increments are additive in the lower
    variable: ``z^{1,tau}_{ts} = z^{1,tau}_{t,0} - z^{1,tau}_{s,0}``.
    """

    def __init__(self, grid: Grid, gamma: float, data: TwoParamField, increments: np.ndarray,
                 weights: np.ndarray, rule: str, path: PathSample | None = None):
        self.grid = grid
        self.gamma = gamma
        self.data = data
        self.increments = increments
        self.weights = weights
        self.rule = rule
        self.path = path

    @property
    def dim(self) -> int:
        return self.increments.shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,)

    def base(self, tau: int) -> np.ndarray:
        """``z^{1,tau}_{t,0}`` for ``t = 0..tau``, shape ``(tau + 1, m)``."""
        return self.data.row(tau)

    def dense(self) -> np.ndarray:
        """``F[tau, t] = z^{1,tau}_{t,0}`` (zero for ``t > tau``)."""
        return self.data.dense()

    def cell_increments(self, tau: int) -> np.ndarray:
        """``z^{1,tau}`` over each cell ``[r_k, r_{k+1}]``, ``k < tau``; shape ``(tau, m)``."""
        return self.weights[tau, :tau, None] * self.increments[:tau]

    def diagonal(self) -> np.ndarray:
        """The Volterra process ``r -> z^{1,r}_{r,0}``, shape ``(n + 1, m)``."""
        return np.array([self.data[k, k] for k in range(self.grid.n_points)])

    def increment_matrix(self, tau: int) -> np.ndarray:
        """``Z[t, s] = z^{1,tau}_{ts}`` for ``s, t <= tau``; shape ``(tau + 1, tau + 1, m)``.

        Entries with ``s > t`` are not meaningful.
        """
        row = self.base(tau)
        return row[:, None, :] - row[None, :, :]


def build_level1(path: PathSample, gamma: float, rule: str = "cell_average") -> Level1Field:
    """Lift a driver path to ``z^{1,tau}_{t,0} = sum_{k < t} W[tau, k] (x_{k+1} - x_k)``.

    Parameters
    ----------
    path : PathSample
        Sampled or deterministic driver.
    gamma : float
        Kernel singularity exponent, ``0 <= gamma``; also ``gamma < 1/2`` for BM
        and ``gamma < H`` for fBm.
    rule : {"cell_average", "left_point"}
        Kernel discretisation; see :func:`kernel_weights`.

    Returns
    -------
    Level1Field
    """
    check_level1_gamma(path.kind, path.hurst, gamma)
    grid = path.grid
    dx = path.increments
    w = kernel_weights(grid, gamma, rule)
    terms = w[:, :, None] * dx[None, :, :]
    dense = np.zeros((grid.n_points, grid.n_points, dx.shape[1]))
    np.cumsum(terms, axis=1, out=dense[:, 1:])
    return Level1Field(grid, gamma, TwoParamField.from_dense(dense), dx, w, rule, path)


def level1_increment(field: Level1Field, s: int, t: int, tau: int) -> np.ndarray:
    """``z^{1,tau}_{ts}`` for grid indices ``s <= t <= tau``."""
    if not 0 <= s <= t <= tau <= field.grid.cells:
        raise DomainError(f"need 0 <= s <= t <= tau <= n, got {(s, t, tau)}")
    return field.data[t, tau] - field.data[s, tau]
