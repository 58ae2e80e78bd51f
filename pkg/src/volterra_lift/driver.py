"""Exact Gaussian sampling of fBm (H > 1/2) and Brownian motion on a grid,
with covariance and second-moment oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, linalg

from .errors import NumericalError, ParameterError
from .grid import Grid

KINDS = ("fbm", "bm")


@dataclass(frozen=True)
class DriverSpec:
    """Description of the driving noise.

    Parameters
    ----------
    kind : {"fbm", "bm"}
    hurst : float
        Hurst index in (1/2, 1) for fBm; forced to 0.5 for BM.
    dim : int
        Number of independent components.
    seed : int
        Master seed; sample ``i``, component ``c`` uses its own stream.
    """

    kind: str = "fbm"
    hurst: float = 0.75
    dim: int = 1
    seed: int = 0

    def __post_init__(self):
        bad = []
        if self.kind not in KINDS:
            bad.append(f"kind must be one of {KINDS}")
        elif self.kind == "fbm" and not 0.5 < self.hurst < 1:
            bad.append("hurst not in (1/2, 1) for fbm")
        if int(self.dim) != self.dim or self.dim < 1:
            bad.append("dim must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            bad.append("seed must be a nonnegative integer")
        if bad:
            raise ParameterError(bad)
        if self.kind == "bm":
            object.__setattr__(self, "hurst", 0.5)

    @property
    def a_h(self) -> float:
        """Constant ``H (2H - 1)`` of the fBm inner product."""
        return self.hurst * (2 * self.hurst - 1)


@dataclass(frozen=True)
class PathSample:
    """A driver path on a grid.

    ``values`` has shape ``(n + 1, m)`` with ``values[0] == 0``. ``kind`` is
    ``"fbm"``, ``"bm"`` or ``"deterministic"``.
    """

    grid: Grid
    values: np.ndarray
    kind: str = "deterministic"
    hurst: float | None = None
    index: int | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.n_points:
            raise ParameterError(f"path has {v.shape[0]} points, grid has {self.grid.n_points}")
        if np.any(v[0] != 0):
            raise ParameterError("path must start at 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable, dim: int = 1) -> "PathSample":
        """Deterministic path ``x_t = fn(t) - fn(0)`` (same in every component)."""
        v = np.asarray([fn(t) for t in grid.points], dtype=float)
        v = v - v[0]
        if v.ndim == 1:
            v = np.repeat(v[:, None], dim, axis=1)
        return cls(grid, v, "deterministic")


def covariance(spec: DriverSpec, s, t):
    """Covariance ``R(s, t)`` of one driver component; broadcasts."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if spec.kind == "bm":
        out = np.minimum(s, t)
    else:
        two_h = 2 * spec.hurst
        out = 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)
    return out if out.ndim else float(out)


def increment_covariance(spec: DriverSpec, a1, b1, a2, b2):
    """``E[(X_b1 - X_a1)(X_b2 - X_a2)]``; for fBm this is the exact cell integral
    ``a_H * int_{a1}^{b1} int_{a2}^{b2} |u - v|^(2H - 2) du dv``."""
    r = lambda x, y: covariance(spec, x, y)  # noqa: E731
    return r(b1, b2) - r(b1, a2) - r(a1, b2) + r(a1, a2)


def inner_product_H(spec: DriverSpec, f, g) -> float:
    """Inner product of two step functions in the driver's reproducing space.

    Each argument is a pair ``(breaks, values)`` with ``len(values) ==
    len(breaks) - 1``: the function equals ``values[k]`` on
    ``[breaks[k], breaks[k + 1])`` and vanishes elsewhere. For fBm the value is
    ``a_H * int int f(u) g(v) |u - v|^(2H - 2) du dv``, evaluated with the
    exact rectangle antiderivative; for BM it is ``int f g``.
    """
    fb, fv = (np.asarray(a, dtype=float) for a in f)
    gb, gv = (np.asarray(a, dtype=float) for a in g)
    if len(fv) != len(fb) - 1 or len(gv) != len(gb) - 1:
        raise ParameterError("step function needs len(values) == len(breaks) - 1")
    if spec.kind == "bm":
        breaks = np.union1d(fb, gb)
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        return float(np.sum(_step_eval(fb, fv, mid) * _step_eval(gb, gv, mid) * np.diff(breaks)))
    a1, b1 = fb[:-1, None], fb[1:, None]
    a2, b2 = gb[None, :-1], gb[None, 1:]
    cell = increment_covariance(spec, a1, b1, a2, b2)
    return float(fv @ cell @ gv)


def _step_eval(breaks, values, x):
    k = np.searchsorted(breaks, x, side="right") - 1
    inside = (k >= 0) & (k < len(values))
    return np.where(inside, values[np.clip(k, 0, len(values) - 1)], 0.0)


def point_covariance_matrix(spec: DriverSpec, grid: Grid) -> np.ndarray:
    """Covariance of ``(X_{t_1}, ..., X_{t_n})`` (the point ``t_0 = 0`` is dropped)."""
    t = grid.points[1:]
    return covariance(spec, t[:, None], t[None, :])


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, trying jitter ``0, 1e-12 tr/n, 1e-10 tr/n`` in turn.

    Raises
    ------
    NumericalError
        If every rung fails; the message reports the smallest eigenvalue.
    """
    n = cov.shape[0]
    scale = np.trace(cov) / n
    for jitter in (0.0, 1e-12 * scale, 1e-10 * scale):
        try:
            return linalg.cholesky(cov + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            continue
    lam = float(linalg.eigvalsh(cov, subset_by_index=[0, 0])[0])
    raise NumericalError(f"covariance not positive definite after jitter; smallest eigenvalue {lam:.3e}")


def stream(seed: int, sample: int, component: int) -> np.random.Generator:
    """Counter-based generator for one (sample, component) pair.

    Philox is keyed by the master seed and starts at a counter that encodes the
    pair, so draws never depend on how samples are split across workers.
    """
    bits = np.random.Philox(key=seed, counter=[0, 0, component, sample])
    return np.random.Generator(bits)


class PathSampler:
    """Reusable sampler holding the shared Cholesky factor for one (spec, grid)."""

    def __init__(self, spec: DriverSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        self.factor = cholesky_with_jitter(point_covariance_matrix(spec, grid))

    def normals(self, start: int, count: int) -> np.ndarray:
        n, m = self.grid.cells, self.spec.dim
        out = np.empty((count, m, n))
        for i in range(count):
            for c in range(m):
                out[i, c] = stream(self.spec.seed, start + i, c).standard_normal(n)
        return out

    def values(self, start: int, count: int) -> np.ndarray:
        """Paths ``(count, n + 1, m)`` for sample indices ``start .. start + count - 1``."""
        z = self.normals(start, count)
        pts = np.einsum("kl,iml->ikm", self.factor, z)
        out = np.zeros((count, self.grid.n_points, self.spec.dim))
        out[:, 1:] = pts
        return out

    def increments(self, start: int, count: int) -> np.ndarray:
        """Increments ``(count, n, m)``."""
        return np.diff(self.values(start, count), axis=1)


def sample_paths(spec: DriverSpec, grid: Grid, count: int, start: int = 0) -> list[PathSample]:
    """Draw ``count`` independent exact samples on ``grid``.

    Sample ``start + i`` is a deterministic function of ``(spec.seed, start + i)``.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    vals = PathSampler(spec, grid).values(start, count)
    return [PathSample(grid, vals[i], spec.kind, spec.hurst, start + i) for i in range(count)]


# Second-moment oracles ------------------------------------------------------

def _check_gamma(spec: DriverSpec, gamma: float):
    if spec.kind == "bm" and not 0 <= gamma < 0.5:
        raise ParameterError("gamma not in [0, 1/2) for bm")
    if spec.kind == "fbm" and not 0 <= gamma < 2 * spec.hurst - 1:
        raise ParameterError("gamma not in [0, 2H - 1) for fbm")


def _alg_quad(f, a, b, left=0.0, right=0.0):
    """``int_a^b f(x) (x - a)^left (b - x)^right dx`` by QUADPACK's algebraic-weight rule."""
    if b <= a:
        return 0.0
    kw = dict(limit=200, epsabs=1e-14, epsrel=1e-11)
    if left or right:
        kw.update(weight="alg", wvar=(left, right))
    with warnings.catch_warnings():
        # roundoff warnings fire once the requested accuracy is already near machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, **kw)
    return val


def kernel_l2_product(gamma, lo, hi, tau1, tau2) -> float:
    """``int_lo^hi (tau1 - r)^-gamma (tau2 - r)^-gamma dr`` for ``hi <= min(tau1, tau2)``."""
    if hi <= lo:
        return 0.0
    if tau1 == tau2:
        return ((tau1 - lo) ** (1 - 2 * gamma) - (tau1 - hi) ** (1 - 2 * gamma)) / (1 - 2 * gamma)
    near, far = min(tau1, tau2), max(tau1, tau2)
    if hi == near:
        return _alg_quad(lambda r: (far - r) ** -gamma, lo, hi, 0.0, -gamma)
    return _alg_quad(lambda r: (near - r) ** -gamma * (far - r) ** -gamma, lo, hi)


def _fbm_inner(h, gamma, tau2, lo2, hi2, r):
    """``int_lo2^hi2 (tau2 - l)^-gamma |r - l|^(2H - 2) dl``, split at ``l = r``."""
    e = 2 * h - 2
    total = 0.0
    if lo2 < r:
        # QUADPACK samples the endpoints, so every factor singular at b goes into the weight
        b = min(r, hi2)
        sing_r = b == r
        sing_tau = b == tau2 and gamma > 0

        def g(l):
            out = 1.0 if sing_r else (r - l) ** e
            return out if sing_tau else out * (tau2 - l) ** -gamma

        total += _alg_quad(g, lo2, b, 0.0, (e if sing_r else 0.0) - (gamma if sing_tau else 0.0))
    if hi2 > r:
        a = max(r, lo2)
        sing_left = a == r
        sing_right = hi2 == tau2 and gamma > 0

        def f(l):
            out = 1.0 if sing_left else (l - r) ** e
            return out if sing_right else out * (tau2 - l) ** -gamma

        total += _alg_quad(f, a, hi2, e if sing_left else 0.0, -gamma if sing_right else 0.0)
    return total


def level1_exact_covariance(spec: DriverSpec, gamma: float, first: Sequence[float], second: Sequence[float]) -> float:
    """``E[z^{1,tau}_{ts} z^{1,tau'}_{t's'}]`` for one component.

    ``first = (s, t, tau)`` and ``second = (s', t', tau')``. BM uses the
    one-dimensional kernel product over the overlap; fBm uses nested adaptive
    quadrature with algebraic endpoint weights for the two integrable
    singularities ``|r - l|^(2H - 2)`` and ``(tau - r)^-gamma``.
    """
    _check_gamma(spec, gamma)
    (s1, t1, tau1), (s2, t2, tau2) = first, second
    if not (s1 <= t1 <= tau1 and s2 <= t2 <= tau2):
        raise ParameterError("increments must satisfy s <= t <= tau")
    if spec.kind == "bm":
        return kernel_l2_product(gamma, max(s1, s2), min(t1, t2), tau1, tau2)
    if gamma == 0:
        return float(increment_covariance(spec, s1, t1, s2, t2))
    if t1 <= s1 or t2 <= s2:
        return 0.0
    h = spec.hurst
    inner = lambda r: _fbm_inner(h, gamma, tau2, s2, t2, r)  # noqa: E731
    pts = sorted({x for x in (s2, t2) if s1 < x < t1})
    full = lambda r: (tau1 - r) ** -gamma * inner(r)  # noqa: E731
    edges = [s1] + pts + [t1]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b == tau1:
            # kernel singular at the right end: move it into the quadrature weight
            total += _alg_quad(inner, a, b, 0.0, -gamma)
        else:
            total += _alg_quad(full, a, b)
    return spec.a_h * total


def ito_isometry_second_moment(gamma: float, s: float, t: float, tau: float, tau_p: float | None = None) -> float:
    """Second moment of the Itô level-two increment over Brownian motion, i != j.

    ``E[(z^{2,tau}_{ts})^2] = (1 - 2 gamma)^-1 int_s^t k(r)^2 (r - s)^(1 - 2 gamma) dr``
    with ``k(r) = (tau - r)^-gamma``, or ``k(r) = (tau - r)^-gamma - (tau' - r)^-gamma``
    for the two-upper-variable increment when ``tau_p`` is given.
    """
    if not 0 <= gamma < 0.5:
        raise ParameterError("gamma not in [0, 1/2) for bm")
    if t <= s:
        return 0.0
    w = 1 - 2 * gamma
    if tau_p is None:
        if t == tau:
            val = _alg_quad(lambda r: 1.0, s, t, w, -2 * gamma)
        else:
            val = _alg_quad(lambda r: (tau - r) ** (-2 * gamma), s, t, w, 0.0)
    else:
        if tau_p == tau:
            return 0.0
        if t == tau_p:
            # (tau - r)^-g - (tau' - r)^-g squared expands into three singular-weight pieces
            a = _alg_quad(lambda r: (tau - r) ** (-2 * gamma), s, t, w, 0.0)
            b = _alg_quad(lambda r: 1.0, s, t, w, -2 * gamma)
            c = _alg_quad(lambda r: (tau - r) ** -gamma, s, t, w, -gamma)
            val = a + b - 2 * c
        else:
            val = _alg_quad(lambda r: ((tau - r) ** -gamma - (tau_p - r) ** -gamma) ** 2, s, t, w, 0.0)
    return val / w


def diagonal_level1_constant(hurst: float, gamma: float) -> float:
    """``C(H, gamma)`` with ``Var(z^{1,t}_{ts}) = C (t - s)^(2H - 2 gamma)`` for fBm.

    Closed form ``2 H (2H - 1) B(1 - gamma, 2H - 1) / (2H - 2 gamma)``.
    """
    return 2 * hurst * (2 * hurst - 1) * math.exp(
        math.lgamma(1 - gamma) + math.lgamma(2 * hurst - 1) - math.lgamma(2 * hurst - gamma)
    ) / (2 * hurst - 2 * gamma)
