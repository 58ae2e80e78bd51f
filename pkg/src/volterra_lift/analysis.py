"""Volterra-Hölder norms, GRR integral functionals and empirical GRR ratios.

Fields are accessed through ``field.grid`` and ``field.increment_matrix(tau)``,
which returns ``Z[t, s] = z^tau_{ts}`` for grid indices ``s <= t <= tau``
(any trailing component shape; magnitudes use the Euclidean/Frobenius norm).
All sups are discrete sups over grid tuples. Continuum quantities are
approximated by cell sums with weight ``h`` per variable.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, ParameterError, VerificationError
from .grid import Grid, strided_indices
from .regularity import RegularityParams, psi1, psi12, validate_params


class ArrayField:
    """Additive field given by ``values[tau, t, ...] = z^tau_{t,0}`` (only ``t <= tau`` is read)."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape[:2] != (grid.n_points, grid.n_points):
            raise ParameterError("values must have leading shape (n + 1, n + 1)")
        self.grid = grid
        self.values = values

    def increment_matrix(self, tau: int) -> np.ndarray:
        row = self.values[tau, :tau + 1]
        return row[:, None] - row[None, :]


@dataclass
class NormResult:
    """A discrete sup with the grid-index tuple where it is attained."""

    value: float
    argmax: tuple | None = None


def _mag(z: np.ndarray) -> np.ndarray:
    """Euclidean norm over the component axes beyond the first two."""
    if z.ndim == 2:
        return np.abs(z)
    return np.sqrt(np.sum(z.reshape(z.shape[:2] + (-1,)) ** 2, axis=-1))


def _lower_pairs(size: int):
    """Index arrays ``(t, s)`` with ``s < t < size`` in lexicographic order."""
    t, s = np.tril_indices(size, -1)
    return t, s


def _check_field(field):
    if field.grid.cells < 1:
        raise DomainError("empty grid")


def volterra_norm1(field, alpha: float, gamma: float) -> NormResult:
    """``sup |z^tau_{ts}| / psi1_{alpha,gamma}(tau, t, s)`` over grid tuples with ``s < t <= tau``."""
    _check_field(field)
    pts = field.grid.points
    best, arg = 0.0, None
    for tau in range(1, field.grid.n_points):
        t, s = _lower_pairs(tau + 1)
        ratio = _mag(field.increment_matrix(tau))[t, s] / psi1(alpha, gamma, pts[tau], pts[t], pts[s])
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best, arg = float(ratio[k]), (int(s[k]), int(t[k]), tau)
    return NormResult(best, arg)


class _UpperCache:
    """Increment matrices for a strided set of upper indices, computed once."""

    def __init__(self, field, upper: np.ndarray):
        self.field = field
        self.upper = upper
        self._store = {}

    def __getitem__(self, tau: int) -> np.ndarray:
        if tau not in self._store:
            self._store[tau] = self.field.increment_matrix(tau)
        return self._store[tau]


def _scan12(field, alpha, gamma, eta, zeta, p, max_upper_points, tau_max=None):
    """One pass over pairs ``tau' < tau`` of the upper subset.

    Returns the 1,2-norm sup, its argmax and (if ``p`` is given) the log of
    the quadruple cell sum entering ``U12``.
    """
    grid = field.grid
    pts, h = grid.points, grid.h
    upper = strided_indices(grid.cells, max_upper_points)
    if tau_max is not None:
        upper = upper[upper <= tau_max]
    stride = int(upper[1] - upper[0]) if len(upper) > 1 else 1
    cache = _UpperCache(field, upper)
    best, arg, logs = 0.0, None, []
    for a, tau in enumerate(upper):
        for tau_p in upper[1:a]:
            size = tau_p + 1
            diff = _mag(cache[tau][:size, :size] - cache[tau_p])
            t, s = _lower_pairs(size)
            if eta > zeta:
                keep = t < tau_p
                t, s = t[keep], s[keep]
            if t.size == 0:
                continue
            w = psi12(alpha, gamma, eta, zeta, pts[tau], pts[tau_p], pts[t], pts[s])
            vals = diff[t, s]
            ratio = vals / w
            k = int(np.argmax(ratio))
            if ratio[k] > best:
                best, arg = float(ratio[k]), (int(s[k]), int(t[k]), int(tau_p), int(tau))
            if p is not None:
                with np.errstate(divide="ignore"):
                    lg = 2 * p * (np.log(vals) - np.log(w)) - 2 * np.log((t - s) * h) - 2 * np.log((tau - tau_p) * h)
                logs.append(logsumexp(lg) + 2 * math.log(h) + 2 * math.log(stride * h))
    log_sum = logsumexp(logs) if logs else -np.inf
    return best, arg, log_sum


def volterra_norm12(field, alpha: float, gamma: float, eta: float, zeta: float, *,
                    max_upper_points: int = 65) -> NormResult:
    """``sup |z^tau_{ts} - z^tau'_{ts}| / psi12(tau, tau', t, s)`` over ``s < t <= tau' < tau``.

    The upper pair ``(tau', tau)`` runs over an evenly strided subset of at
    most ``max_upper_points`` grid indices; ``(s, t)`` runs over the full grid.
    The line ``t = tau'`` is skipped when ``eta > zeta``.
    """
    _check_field(field)
    best, arg, _ = _scan12(field, alpha, gamma, eta, zeta, None, max_upper_points)
    return NormResult(best, arg)


def delta_norms(field, alpha: float, gamma: float, eta: float, zeta: float, *,
                max_points: int = 33) -> tuple[float, float]:
    """Sups of ``|delta_u z^tau_{ts}| / psi1`` and ``|delta_u z^{tau tau'}_{ts}| / psi12``.

    All variables run over an evenly strided subset of at most ``max_points``
    grid indices, which keeps the cost at ``O(max_points^5)``.
    """
    _check_field(field)
    grid = field.grid
    pts = grid.points
    idx_all = strided_indices(grid.cells, max_points)
    deltas = {}
    n1 = 0.0
    for tau in idx_all[1:]:
        idx = idx_all[idx_all <= tau]
        sub = _mag_stack(field.increment_matrix(tau), idx)
        deltas[int(tau)] = sub
        d = _mag3(sub)
        t, u, s = _ordered_triples(len(idx))
        if t.size:
            w = psi1(alpha, gamma, pts[tau], pts[idx[t]], pts[idx[s]])
            n1 = max(n1, float(np.max(d[t, u, s] / w)))
    n12 = 0.0
    keys = sorted(deltas)
    for a, tau in enumerate(keys):
        for tau_p in keys[:a]:
            size = len(idx_all[idx_all <= tau_p])
            diff = deltas[tau][:size, :size, :size] - deltas[tau_p]
            d = _mag3(diff)
            t, u, s = _ordered_triples(size)
            if eta > zeta:
                keep = idx_all[t] < tau_p
                t, u, s = t[keep], u[keep], s[keep]
            if t.size == 0:
                continue
            w = psi12(alpha, gamma, eta, zeta, pts[tau], pts[tau_p], pts[idx_all[t]], pts[idx_all[s]])
            n12 = max(n12, float(np.max(d[t, u, s] / w)))
    return n1, n12


def _mag_stack(z: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``D[t, u, s] = z_ts - z_tu - z_us`` on ``idx`` (component axes kept)."""
    sub = z[np.ix_(idx, idx)]
    return sub[:, None, :] - sub[:, :, None] - sub[None]


def _mag3(d: np.ndarray) -> np.ndarray:
    if d.ndim == 3:
        return np.abs(d)
    return np.sqrt(np.sum(d.reshape(d.shape[:3] + (-1,)) ** 2, axis=-1))


def _ordered_triples(size: int):
    t, u, s = np.meshgrid(np.arange(size), np.arange(size), np.arange(size), indexing="ij")
    keep = (s < u) & (u < t)
    return t[keep], u[keep], s[keep]


def grr_U1(field, alpha: float, gamma: float, eta: float, zeta: float, p: float, tau: int) -> float:
    """``U^tau`` functional: the ``2p``-th root of

    ``sum_{v < w <= tau} h^2 |z^tau_{wv}|^{2p} |tau - w|^{2p(eta - zeta)} / (psi1_{alpha, gamma + zeta}(tau, w, v)^{2p} |w - v|^2)``.

    The line ``w = tau`` is dropped when ``eta < zeta``, where the weight is singular.
    Evaluated in log space so that large ``p`` neither overflows nor underflows.
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    grid = field.grid
    pts, h = grid.points, grid.h
    if not 0 <= tau <= grid.cells:
        raise DomainError("tau outside the grid")
    if tau == 0:
        return 0.0
    w_idx, v_idx = _lower_pairs(tau + 1)
    if eta < zeta:
        # the line w = tau is singular; open-simplex exclusion
        keep = w_idx < tau
        w_idx, v_idx = w_idx[keep], v_idx[keep]
        if w_idx.size == 0:
            return 0.0
    vals = _mag(field.increment_matrix(tau))[w_idx, v_idx]
    weight = psi1(alpha, gamma + zeta, pts[tau], pts[w_idx], pts[v_idx])
    with np.errstate(divide="ignore"):
        lg = 2 * p * (np.log(vals) - np.log(weight))
        if eta != zeta:
            lg = lg + 2 * p * (eta - zeta) * np.log(pts[tau] - pts[w_idx])
        lg = lg - 2 * np.log(pts[w_idx] - pts[v_idx]) + 2 * math.log(h)
    total = logsumexp(lg)
    return 0.0 if total == -np.inf else float(math.exp(total / (2 * p)))


def grr_U12(field, alpha: float, gamma: float, eta: float, zeta: float, p: float, *,
            tau: int | None = None, max_upper_points: int = 65) -> float:
    """``U12`` functional over ``v < w <= r' < r <= tau`` (``w = r'`` skipped when ``eta > zeta``).

    ``(r', r)`` runs over a strided subset of at most ``max_upper_points`` grid
    indices, each weighted by the subset spacing; this is a lower Riemann
    sum of the full quadrature.
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    _, _, log_sum = _scan12(field, alpha, gamma, eta, zeta, p, max_upper_points, tau)
    return 0.0 if log_sum == -np.inf else float(math.exp(log_sum / (2 * p)))


def auto_p(alpha: float, kappa: float, zeta: float = 0.0) -> int:
    """``ceil(max(1 / (alpha - kappa), 1 / zeta)) + 1``; the ``1 / zeta`` term is dropped when ``zeta == 0``."""
    bound = 1 / (alpha - kappa)
    if zeta > 0:
        bound = max(bound, 1 / zeta)
    return int(math.ceil(bound - 1e-9)) + 1


@dataclass
class HolderReport:
    """Norms, GRR functionals and empirical GRR ratios for one field."""

    norm1: float
    norm12: float
    delta_norm1: float
    delta_norm12: float
    u1: float
    u12: float
    grr_ratio1: float
    grr_ratio12: float
    params: RegularityParams
    p: int
    argmax1: tuple | None = None
    argmax12: tuple | None = None
    notes: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        return out


def _ratio(num: float, den: float, label: str) -> float:
    if den > 0:
        return num / den
    if num == 0:
        return 0.0
    raise VerificationError(f"{label}: nonzero norm {num} with zero GRR bound")


def grr_check(field, alpha: float, gamma: float, kappa: float, eta: float, zeta: float,
              p: int | str = "auto", *, max_upper_points: int = 65, delta_points: int = 33) -> HolderReport:
    """Empirical constants of the Volterra GRR bounds at regularity ``kappa < alpha``.

    ``grr_ratio1 = ||z||_{(kappa,gamma),1} / (max_tau U^tau + ||delta z||_{(kappa,gamma),1})``

    ``grr_ratio12 = ||z||_{(kappa,gamma,eta,zeta),1,2} / (U12 + ||delta z||_{(kappa,gamma,eta+1/p,zeta+1/p),1,2} T^(2 + alpha - kappa - 1/p))``

    ``U^tau`` is not monotone in ``tau`` when its integrand depends on ``tau``,
    so the first bound uses the largest ``U^tau`` over the grid.
    """
    if not gamma < kappa < alpha:
        raise ParameterError("need gamma < kappa < alpha")
    params = validate_params(kappa, gamma, eta, zeta)
    if p == "auto":
        p = auto_p(alpha, kappa, zeta)
    p = int(p)
    if p <= 1 / (alpha - kappa) or (zeta > 0 and p <= 1 / zeta):
        raise ParameterError("p <= max(1/(alpha - kappa), 1/zeta)")
    grid = field.grid
    n1 = volterra_norm1(field, kappa, gamma)
    best, arg, log_sum = _scan12(field, kappa, gamma, eta, zeta, p, max_upper_points)
    u12 = 0.0 if log_sum == -np.inf else float(math.exp(log_sum / (2 * p)))
    u_tau = [grr_U1(field, kappa, gamma, 0.0, 0.0, p, tau) for tau in range(1, grid.n_points)]
    u1 = max(u_tau)
    d1, _ = delta_norms(field, kappa, gamma, 0.0, 0.0, max_points=delta_points)
    _, d12 = delta_norms(field, kappa, gamma, eta + 1 / p, zeta + 1 / p, max_points=delta_points)
    scale = grid.horizon ** (2 + alpha - kappa - 1 / p)
    return HolderReport(
        norm1=n1.value, norm12=best, delta_norm1=d1, delta_norm12=d12, u1=u1, u12=u12,
        grr_ratio1=_ratio(n1.value, u1 + d1, "ratio1"),
        grr_ratio12=_ratio(best, u12 + d12 * scale, "ratio12"),
        params=params, p=p, argmax1=n1.argmax, argmax12=arg,
        notes=dict(max_upper_points=max_upper_points, delta_points=delta_points, alpha=alpha),
    )


def classical_grr_ratio(values: np.ndarray, spacing: float, alpha: float, p: float) -> float:
    """``sup |h_ts| / |t - s|^alpha`` divided by ``(sum h^2 |h_uv|^p / |u - v|^(2 + p alpha))^(1/p)``.

    ``values`` is a path sampled with constant ``spacing``; the ratio is the
    empirical constant of the classical Sobolev-GRR embedding.
    """
    v = np.asarray(values, dtype=float)
    v = v.reshape(len(v), -1)
    t, s = _lower_pairs(len(v))
    inc = np.linalg.norm(v[t] - v[s], axis=1)
    lag = (t - s) * spacing
    sup = float(np.max(inc / lag**alpha))
    with np.errstate(divide="ignore"):
        lg = p * np.log(inc) - (2 + p * alpha) * np.log(lag) + 2 * math.log(spacing)
    total = logsumexp(lg)
    den = 0.0 if total == -np.inf else math.exp(total / p)
    return _ratio(sup, den, "classical")
