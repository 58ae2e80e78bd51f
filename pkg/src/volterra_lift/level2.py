"""Second level of the Volterra lift.

``z^{2,tau,i,j}_{ts} = int_s^t (tau - r)^-gamma z^{1,r,i}_{rs} dx^j_r`` is stored
anchored at ``s = 0``; general increments are rebuilt with the Chen relation

    z^{2,tau}_{ts} = z^{2,tau}_{t0} - z^{2,tau}_{s0} - sum_{k in [s, t)} z^{1,r_k}_{s0} (x) z^{1,tau}_{[r_k, r_k+1]}

which is exact for the discrete sums used here.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ParameterError
from .grid import Grid, TwoParamField
from .level1 import Level1Field, incell_weights
from .driver import _alg_quad

SCHEMES = ("stratonovich", "ito")
_ALIASES = {"fbm_stratonovich": "stratonovich", "bm_ito": "ito"}


def resolve_scheme(kind: str, hurst: float | None, gamma: float, scheme: str | None = None) -> str:
    """Pick or validate the integration scheme for a driver kind.

    Brownian drivers use Itô sums; fBm and deterministic drivers use the
    mollified (Stratonovich) sums. The fBm construction requires
    ``gamma < 2H - 1``.
    """
    if scheme is None:
        scheme = "ito" if kind == "bm" else "stratonovich"
    scheme = _ALIASES.get(scheme, scheme)
    if scheme not in SCHEMES:
        raise ParameterError(f"scheme must be one of {SCHEMES}")
    if scheme == "ito" and kind != "bm":
        raise ParameterError("ito scheme requires a bm driver")
    if scheme == "stratonovich" and kind == "bm":
        raise ParameterError("stratonovich scheme diverges for a bm driver with singular kernel; use ito")
    if kind == "fbm" and gamma >= 2 * hurst - 1:
        raise ParameterError("gamma >= 2H - 1 (fbm level two outside its regime)")
    return scheme


def incell_mask(m: int, scheme: str, rule: str) -> np.ndarray:
    """Which (i, j) pairs receive the in-cell correction.

    The cell-average rule corrects every pair. The plain left-point rule only
    corrects the Stratonovich diagonal, where the correction carries the mean.
    """
    if rule == "cell_average":
        return np.ones((m, m))
    if scheme == "stratonovich":
        return np.eye(m)
    return np.zeros((m, m))


class Level2Field:
    """Values ``z^{2,tau,i,j}_{t,0}`` on the grid triangle plus the level-one field they came from."""

    def __init__(self, level1: Level1Field, scheme: str, data: TwoParamField):
        self.level1 = level1
        self.grid = level1.grid
        self.gamma = level1.gamma
        self.scheme = scheme
        self.data = data
        self._dense1 = None

    @property
    def dim(self) -> int:
        return self.level1.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim, self.dim)

    def base(self, tau: int) -> np.ndarray:
        """``z^{2,tau}_{t,0}`` for ``t = 0..tau``, shape ``(tau + 1, m, m)``."""
        return self.data.row(tau)

    def _lower(self) -> np.ndarray:
        if self._dense1 is None:
            self._dense1 = self.level1.dense()
        return self._dense1

    def increment_matrix(self, tau: int) -> np.ndarray:
        """``Z[t, s] = z^{2,tau}_{ts}`` for ``s <= t <= tau``; shape ``(tau + 1, tau + 1, m, m)``."""
        row = self.base(tau)
        f1 = self._lower()[:tau, :tau + 1]  # f1[k, s] = z^{1,r_k}_{s,0}, zero for s > k
        c = self.level1.cell_increments(tau)
        g = f1[:, :, :, None] * c[:, None, None, :]
        conv = np.zeros((tau + 1, tau + 1) + self.shape)
        np.cumsum(g, axis=0, out=conv[1:])
        return row[:, None] - row[None, :] - conv


def build_level2(z1: Level1Field, scheme: str | None = None) -> Level2Field:
    """Second level over the same path and grid as ``z1``.

    Cell ``k`` contributes, under upper index ``tau``,

    ``W[tau, k] z^{1,r_k,i}_{r_k,0} dx^j_k + q[tau, k] (dx^i_k dx^j_k - h 1{i = j, ito})``

    where ``W`` are the level-one kernel weights and ``q`` the in-cell weights
    of :func:`volterra_lift.level1.incell_weights`. The in-cell term does not
    depend on the lower variable, so the Chen relation holds exactly.
    """
    path = z1.path
    if path is None:
        raise ParameterError("level-one field carries no driver path")
    scheme = resolve_scheme(path.kind, path.hurst, z1.gamma, scheme)
    grid, dx, m = z1.grid, z1.increments, z1.dim
    diag = z1.diagonal()[:-1]
    q = incell_weights(grid, z1.gamma, z1.rule)
    pair = dx[:, :, None] * dx[:, None, :]
    if scheme == "ito":
        pair = pair - grid.h * np.eye(m)
    pair = pair * incell_mask(m, scheme, z1.rule)
    adapted = diag[:, :, None] * dx[:, None, :]
    terms = z1.weights[:, :, None, None] * adapted[None] + q[:, :, None, None] * pair[None]
    dense = np.zeros((grid.n_points, grid.n_points, m, m))
    np.cumsum(terms, axis=1, out=dense[:, 1:])
    return Level2Field(z1, scheme, TwoParamField.from_dense(dense))


def level2_increment(f2: Level2Field, s: int, t: int, tau: int) -> np.ndarray:
    """``z^{2,tau}_{ts}`` (an ``m x m`` matrix) for grid indices ``s <= t <= tau``."""
    if not 0 <= s <= t <= tau <= f2.grid.cells:
        raise DomainError(f"need 0 <= s <= t <= tau <= n, got {(s, t, tau)}")
    z1 = f2.level1
    lower = np.array([z1.data[s, k] for k in range(s, t)]).reshape(t - s, z1.dim)
    upper = z1.cell_increments(tau)[s:t]
    return f2.data[t, tau] - f2.data[s, tau] - lower.T @ upper


def strat_correction(gamma: float, hurst: float, s: float, t: float, tau: float) -> float:
    """Trace term separating the Stratonovich and Skorohod level-two integrals over fBm.

    ``H (2H - 1) / (2H - 1 - gamma) * int_s^t (tau - r)^-gamma (r - s)^(2H - 1 - gamma) dr``,
    integrated with algebraic endpoint weights so both endpoint singularities
    are handled exactly.
    """
    if not 0.5 < hurst < 1:
        raise ParameterError("hurst not in (1/2, 1)")
    if not 0 <= gamma < 2 * hurst - 1:
        raise ParameterError("gamma >= 2H - 1 (correction diverges)")
    if not s <= t <= tau:
        raise DomainError("need s <= t <= tau")
    e = 2 * hurst - 1 - gamma
    if t == s:
        return 0.0
    if t == tau:
        val = _alg_quad(lambda r: 1.0, s, t, e, -gamma)
    else:
        val = _alg_quad(lambda r: (tau - r) ** -gamma, s, t, e, 0.0)
    return hurst * (2 * hurst - 1) / e * val


def strat_correction_diagonal(gamma: float, hurst: float, length: float) -> float:
    """Closed form of :func:`strat_correction` at ``tau == t`` with ``t - s = length``."""
    e = 2 * hurst - 1 - gamma
    beta = math.exp(math.lgamma(1 - gamma) + math.lgamma(e + 1) - math.lgamma(e + 2 - gamma))
    return hurst * (2 * hurst - 1) / e * beta * length ** (2 * hurst - 2 * gamma)


def ito_strat_divergence_probe(gamma: float, s: float, t: float, tau: float, mesh_levels) -> list[tuple[float, float]]:
    """Mean of the Itô-Stratonovich correction for Brownian motion on successive meshes.

    For each mesh ``h`` dividing ``t - s`` the value is
    ``(1 - gamma)^-1 sum_cells h^(1 - gamma) (tau - r)^-gamma`` with ``r`` the
    right end of the cell; a cell ending at ``tau`` uses the exact cell mean
    ``h^-gamma / (1 - gamma)`` instead. It behaves like ``h^-gamma`` and so
    diverges as ``h -> 0`` for every ``gamma > 0``.
    """
    if not 0 <= gamma < 0.5:
        raise ParameterError("gamma not in [0, 1/2)")
    if not s < t <= tau:
        raise DomainError("need s < t <= tau")
    out = []
    for h in mesh_levels:
        h = float(h)
        cells = round((t - s) / h)
        if h <= 0 or cells < 1 or abs(cells * h - (t - s)) > 1e-9 * h * max(cells, 1):
            raise ParameterError(f"mesh {h} does not divide t - s = {t - s}")
        right = s + h * np.arange(1, cells + 1)
        gap = tau - right
        kern = np.empty(cells)
        touch = gap <= 1e-12 * h
        kern[~touch] = gap[~touch] ** -gamma
        kern[touch] = h**-gamma / (1 - gamma)
        out.append((h, float(np.sum(h ** (1 - gamma) * kern) / (1 - gamma))))
    return out



def chen_residual(f2: Level2Field) -> tuple[float, float]:
    """Largest ``|delta_u z^{2,tau}_{ts} - (z^{1,tau} * z^{1,.})_{tus}|`` over all grid ``s <= u <= t <= tau``.

    The left side comes from :meth:`Level2Field.increment_matrix`; the right
    side is summed cell by cell from the level-one field. Returns the
    residual and ``max |z^{2,tau}_{ts}|`` for scaling.
    """
    z1 = f2.level1
    f1 = z1.dense()
    worst, scale = 0.0, 0.0
    for tau in range(1, f2.grid.n_points):
        z = f2.increment_matrix(tau)
        scale = max(scale, float(np.max(np.abs(z))))
        c = z1.cell_increments(tau)
        for u in range(1, tau):
            # lower factor z^{1,r_k}_{us} for k in [u, tau), s in [0, u]
            y = f1[u:tau, u][:, None, :] - f1[u:tau, :u + 1]
            conv = np.cumsum(y[:, :, :, None] * c[u:tau, None, None, :], axis=0)
            delta = z[u + 1:, :u + 1] - z[u + 1:, u][:, None] - z[u, :u + 1][None]
            worst = max(worst, float(np.max(np.abs(delta - conv))))
    return worst, scale
