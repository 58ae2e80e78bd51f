"""Monte Carlo second moments, jackknife errors, bound ratios and scaling exponents.

Statistics are evaluated for all paths at once from the driver increments, so
no per-path fields are stored. A tuple is given in time units and must land
on grid points.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .driver import DriverSpec, PathSampler, ito_isometry_second_moment, level1_exact_covariance
from .errors import ParameterError
from .grid import Grid
from .level1 import check_level1_gamma, incell_weights, kernel_weights
from .level2 import incell_mask, resolve_scheme
from .regularity import psi1, psi12

TARGETS = ("z1_var", "z1_12_var", "z2_var", "z2_12_var", "z1_cov")
CHUNK = 1000


def worker_count() -> int:
    """Worker cap from ``VOLTERRA_THREADS``; defaults to the CPU count."""
    env = os.environ.get("VOLTERRA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError("VOLTERRA_THREADS must be an integer") from None
    return os.cpu_count() or 1


def draw_increments(spec: DriverSpec, grid: Grid, samples: int) -> np.ndarray:
    """Driver increments ``(samples, n, m)``; identical for any worker count."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    sampler = PathSampler(spec, grid)
    starts = range(0, samples, CHUNK)
    job = lambda a: sampler.increments(a, min(CHUNK, samples - a))  # noqa: E731
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        parts = list(pool.map(job, starts))
    return np.concatenate(parts, axis=0)


def jackknife_mean(x: np.ndarray, blocks: int = 100) -> tuple[float, float]:
    """Mean and delete-one-block jackknife standard error."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    mean = float(np.mean(x))
    if n < 2:
        return mean, float("nan")
    parts = np.array_split(x, min(blocks, n))
    sums = np.array([p.sum() for p in parts])
    counts = np.array([len(p) for p in parts])
    loo = (sums.sum() - sums) / (n - counts)
    b = len(parts)
    return mean, float(np.sqrt((b - 1) / b * np.sum((loo - loo.mean()) ** 2)))


@dataclass
class MomentReport:
    """Second-moment estimate at one tuple with its oracle and psi bound."""

    target: str
    tuple: tuple
    estimate: float
    stderr: float
    oracle: float | None
    bound: float
    ratio: float
    samples: int

    @property
    def z_score(self) -> float | None:
        if self.oracle is None or not self.stderr > 0:
            return None
        return (self.estimate - self.oracle) / self.stderr


@dataclass
class ScalingReport:
    target: str
    mode: str
    exponent_est: float
    exponent_expected: float
    lags: list
    variances: list
    r_squared: float


@dataclass
class StratumResult:
    name: str
    tuples: list
    ratios: list
    max_ratio: float
    reports: list = field(default_factory=list, repr=False)


class MonteCarlo:
    """Holds sampled increments and the discretisation weights for one experiment.

    Parameters
    ----------
    spec : DriverSpec
    grid : Grid
    gamma : float
    samples : int
    rule : str
        Kernel rule passed to :func:`volterra_lift.level1.kernel_weights`.
    eta, zeta : float
        Exponents used by the bound of primed targets.
    pair : (int, int)
        Components ``(i, j)`` of level-two targets; ``i`` for level one.
    increments : array, optional
        Reuse previously drawn increments.
    """

    def __init__(self, spec: DriverSpec, grid: Grid, gamma: float, samples: int, *, rule: str = "cell_average",
                 eta: float = 0.0, zeta: float = 0.0, pair: tuple[int, int] | None = None, increments=None):
        check_level1_gamma(spec.kind, spec.hurst, gamma)
        self.spec, self.grid, self.gamma = spec, grid, gamma
        self.eta, self.zeta = eta, zeta
        self.rule = rule
        self.pair = pair if pair is not None else ((0, 1) if spec.dim > 1 else (0, 0))
        if max(self.pair) >= spec.dim:
            raise ParameterError(f"pair {self.pair} exceeds dim={spec.dim}")
        self.dx = increments if increments is not None else draw_increments(spec, grid, samples)
        self.samples = self.dx.shape[0]
        self.w = kernel_weights(grid, gamma, rule)
        self._q = None
        self._scheme = None

    @property
    def hurst(self) -> float:
        return self.spec.hurst

    def _level2_setup(self):
        if self._scheme is None:
            self._scheme = resolve_scheme(self.spec.kind, self.spec.hurst, self.gamma)
            self._q = incell_weights(self.grid, self.gamma, self.rule)
        return self._scheme, self._q

    # per-path statistics ------------------------------------------------

    def _z1(self, kern: np.ndarray, s: int, t: int, comp: int) -> np.ndarray:
        return self.dx[:, s:t, comp] @ kern[s:t]

    def _z2(self, kern: np.ndarray, qk: np.ndarray, s: int, t: int) -> np.ndarray:
        scheme, _ = self._level2_setup()
        i, j = self.pair
        xi, xj = self.dx[:, s:t, i], self.dx[:, s:t, j]
        inner = xi @ self.w[s:t, s:t].T  # z^{1,r_k}_{r_k s}, k in [s, t)
        pair = xi * xj
        if scheme == "ito" and i == j:
            pair = pair - self.grid.h
        pair = pair * incell_mask(self.spec.dim, scheme, self.rule)[i, j]
        return (inner * xj) @ kern[s:t] + pair @ qk[s:t]

    def statistic(self, target: str, idx: Sequence[int]) -> np.ndarray:
        """Per-path value whose mean is the requested moment."""
        i = self.pair[0]
        if target == "z1_var":
            s, t, tau = idx
            return self._z1(self.w[tau], s, t, i) ** 2
        if target == "z1_12_var":
            s, t, tau_p, tau = idx
            return self._z1(self.w[tau] - self.w[tau_p], s, t, i) ** 2
        if target == "z1_cov":
            s, u, v, tau = idx
            return self._z1(self.w[tau], s, u, i) * self._z1(self.w[tau], s, v, i)
        _, q = self._level2_setup()
        if target == "z2_var":
            s, t, tau = idx
            return self._z2(self.w[tau], q[tau], s, t) ** 2
        if target == "z2_12_var":
            s, t, tau_p, tau = idx
            return self._z2(self.w[tau] - self.w[tau_p], q[tau] - q[tau_p], s, t) ** 2
        raise ParameterError(f"target must be one of {TARGETS}")

    # oracles and bounds --------------------------------------------------

    def oracle(self, target: str, times: Sequence[float]) -> float | None:
        spec, g = self.spec, self.gamma
        cov = lambda a, b: level1_exact_covariance(spec, g, a, b)  # noqa: E731
        if target == "z1_var":
            s, t, tau = times
            return cov((s, t, tau), (s, t, tau))
        if target == "z1_12_var":
            s, t, tau_p, tau = times
            return cov((s, t, tau), (s, t, tau)) + cov((s, t, tau_p), (s, t, tau_p)) - 2 * cov((s, t, tau), (s, t, tau_p))
        if target == "z1_cov":
            s, u, v, tau = times
            return cov((s, u, tau), (s, v, tau))
        if spec.kind != "bm":
            return None
        if target == "z2_var":
            s, t, tau = times
            return ito_isometry_second_moment(g, s, t, tau)
        s, t, tau_p, tau = times
        return ito_isometry_second_moment(g, s, t, tau, tau_p)

    def bound(self, target: str, times: Sequence[float]) -> float:
        h, g = self.hurst, self.gamma
        a = h if target.startswith("z1") else 2 * h - g
        if target in ("z1_var", "z2_var"):
            s, t, tau = times
            return psi1(a, g, tau, t, s) ** 2
        if target == "z1_cov":
            s, _, v, tau = times
            return psi1(a, g, tau, v, s) ** 2
        s, t, tau_p, tau = times
        return psi12(a, g, self.eta, self.zeta, tau, tau_p, t, s) ** 2

    def estimate(self, target: str, times: Sequence[float], *, with_oracle: bool = True) -> MomentReport:
        """Moment estimate with jackknife error, oracle (when one exists) and psi bound."""
        if target not in TARGETS:
            raise ParameterError(f"target must be one of {TARGETS}")
        times = tuple(float(x) for x in times)
        idx = self.grid.indices_of(times)
        if list(idx) != sorted(idx):
            raise ParameterError(f"tuple {times} is not ordered")
        mean, err = jackknife_mean(self.statistic(target, idx))
        oracle = self.oracle(target, times) if with_oracle else None
        bnd = self.bound(target, times)
        ratio = mean / bnd if bnd > 0 else (0.0 if mean == 0 else float("inf"))
        return MomentReport(target, times, mean, err, oracle, bnd, ratio, self.samples)


def estimate_moment(spec: DriverSpec, gamma: float, target: str, times: Sequence[float], samples: int,
                    grid: Grid, **kwargs) -> MomentReport:
    """One-shot :meth:`MonteCarlo.estimate`; see :class:`MonteCarlo` for keywords."""
    return MonteCarlo(spec, grid, gamma, samples, **kwargs).estimate(target, times)


def expected_exponent(kind: str, hurst: float, gamma: float, target: str, mode: str) -> float:
    """Variance exponent in ``t - s`` read off the squared psi weight.

    Diagonal (``tau = t``): ``2(H - gamma)`` for level one, ``4(H - gamma)``
    for level two over fBm and ``2 - 4 gamma`` over BM. Fixed far ``tau``:
    ``2H`` and ``2(2H - gamma)``.
    """
    h = 0.5 if kind == "bm" else hurst
    if target == "z1_var":
        return 2 * (h - gamma) if mode == "diagonal" else 2 * h
    if target == "z2_var":
        return 2 * (2 * h - 2 * gamma) if mode == "diagonal" else 2 * (2 * h - gamma)
    raise ParameterError("scaling targets are z1_var and z2_var")


def scaling_exponent(mc: MonteCarlo, target: str, mode: str, lags: Sequence[float]) -> ScalingReport:
    """Least-squares slope of log variance against log lag.

    ``diagonal`` mode uses ``tau = t = T`` and ``s = T - lag``; ``fixed_tau``
    mode uses ``tau = T``, ``t = T / 2`` and ``s = t - lag``.
    """
    if len(lags) < 5:
        raise ParameterError("scaling needs at least 5 lags")
    if mode not in ("diagonal", "fixed_tau"):
        raise ParameterError("mode must be 'diagonal' or 'fixed_tau'")
    T = mc.grid.horizon
    var = []
    for lag in lags:
        if mode == "diagonal":
            times = (T - lag, T, T)
        else:
            times = (T / 2 - lag, T / 2, T)
        if times[0] < 0:
            raise ParameterError(f"lag {lag} does not fit in the horizon")
        var.append(mc.estimate(target, times, with_oracle=False).estimate)
    fit = stats.linregress(np.log(lags), np.log(var))
    return ScalingReport(target, mode, float(fit.slope),
                         expected_exponent(mc.spec.kind, mc.hurst, mc.gamma, target, mode),
                         [float(x) for x in lags], var, float(fit.rvalue**2))


def stratum_tuples(grid: Grid, target: str) -> dict[str, list[tuple]]:
    """Tuples at fixed fractions of ``T`` so that grids of different size see the same points.

    ``near_diagonal`` puts the upper variable one cell above ``t``;
    ``diagonal`` puts it on ``t``; ``far_field`` keeps it ``T / 2`` away.
    """
    T, h = grid.horizon, grid.h
    lags = (T / 16, T / 8, T / 4)
    if target in ("z1_var", "z2_var"):
        t = T / 2
        return {
            "diagonal": [(t - d, t, t) for d in lags],
            "near_diagonal": [(t - d, t, t + h) for d in lags],
            "far_field": [(t - d, t, T) for d in lags],
        }
    if target in ("z1_12_var", "z2_12_var"):
        t = T / 4
        return {
            "near_diagonal": [(t - d, t, t + h, t + h + T / 4) for d in lags],
            "far_field": [(t - d, t, 3 * T / 4, T) for d in lags],
        }
    if target == "z1_cov":
        t = T / 2
        return {
            "near_diagonal": [(t - 2 * d, t - d, t, t + h) for d in lags[:2]],
            "far_field": [(t - 2 * d, t - d, t, T) for d in lags[:2]],
        }
    raise ParameterError(f"target must be one of {TARGETS}")


def bound_ratio_surface(mc: MonteCarlo, target: str) -> list[StratumResult]:
    """Ratios estimate / psi^2 on the strata of :func:`stratum_tuples`, with each stratum's maximum."""
    out = []
    for name, tuples in stratum_tuples(mc.grid, target).items():
        reports = [mc.estimate(target, tp, with_oracle=False) for tp in tuples]
        ratios = [r.ratio for r in reports]
        out.append(StratumResult(name, tuples, ratios, float(np.max(ratios)), reports))
    return out
