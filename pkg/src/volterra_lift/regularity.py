"""Singularity-weighted regularity functions psi1, psi12 and exponent checks.

For exponents ``alpha`` (Hölder gain) and ``gamma`` (kernel singularity),

    psi1(tau, t, s) = min(|tau - t|^-gamma |t - s|^alpha, |t - s|^(alpha - gamma))

and the two-upper-variable weight is

    psi12(tau, tau', t, s) = |tau - tau'|^eta |tau' - t|^-(eta - zeta) psi1_{alpha, gamma + zeta}(tau', t, s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError, SingularEvaluation

_ORDER_TOL = 1e-12


@dataclass(frozen=True)
class RegularityParams:
    """Validated exponent bundle; build through :func:`validate_params`."""

    alpha: float
    gamma: float
    eta: float = 0.0
    zeta: float = 0.0
    strong: bool = False

    @property
    def rho(self) -> float:
        return self.alpha - self.gamma


def validate_params(alpha, gamma, eta=0.0, zeta=0.0, require_strong=False) -> RegularityParams:
    """Check the exponent constraints and return a :class:`RegularityParams`.

    Every violated constraint is collected and reported by name in the
    :class:`ParameterError`, e.g. ``"rho <= 0"`` or ``"zeta > rho"``.
    """
    values = dict(alpha=alpha, gamma=gamma, eta=eta, zeta=zeta)
    bad = [f"{k} is not finite" for k, v in values.items() if not math.isfinite(v)]
    if bad:
        raise ParameterError(bad)
    if not 0 < alpha < 1:
        bad.append("alpha not in (0, 1)")
    if not 0 <= gamma < 1:
        bad.append("gamma not in [0, 1)")
    if not 0 <= eta <= 1:
        bad.append("eta not in [0, 1]")
    if not 0 <= zeta <= 1:
        bad.append("zeta not in [0, 1]")
    rho = alpha - gamma
    if rho <= 0:
        bad.append("rho <= 0")
    if zeta > rho:
        bad.append("zeta > rho")
    if zeta > eta:
        bad.append("zeta > eta")
    if require_strong and not eta > 1 - alpha:
        bad.append("eta <= 1 - alpha")
    if bad:
        raise ParameterError(bad)
    return RegularityParams(float(alpha), float(gamma), float(eta), float(zeta), bool(require_strong))


@dataclass(frozen=True)
class FamilyAN:
    """Finite family of ``(eta_k, zeta_k)`` pairs attached to one ``(alpha, gamma)``."""

    pairs: tuple[tuple[float, float], ...]

    @classmethod
    def build(cls, alpha: float, gamma: float, pairs: Sequence[Sequence[float]]) -> "FamilyAN":
        if len(pairs) == 0:
            raise ParameterError("family must contain at least one (eta, zeta) pair")
        clean = []
        for k, (eta, zeta) in enumerate(pairs):
            try:
                validate_params(alpha, gamma, eta, zeta)
            except ParameterError as exc:
                raise ParameterError([f"pair {k}: {c}" for c in exc.constraints]) from None
            clean.append((float(eta), float(zeta)))
        return cls(tuple(clean))

    def params(self, alpha: float, gamma: float) -> list[RegularityParams]:
        return [RegularityParams(alpha, gamma, e, z) for e, z in self.pairs]


def _check_order(*args):
    """Raise unless args are nondecreasing (within rounding)."""
    for lo, hi in zip(args[:-1], args[1:]):
        if np.any(np.asarray(lo) > np.asarray(hi) + _ORDER_TOL):
            raise DomainError("arguments must be ordered s <= t <= tau' <= tau")


def psi1(alpha, gamma, tau, t, s):
    """Evaluate ``psi1_{alpha, gamma}(tau, t, s)``; broadcasts over arrays.

    At ``t == tau`` the singular branch is skipped and the value is
    ``|t - s|^(alpha - gamma)``.

    Examples
    --------
    >>> round(float(psi1(0.5, 0.25, 11.0, 1.0, 0.0)), 6)
    0.562341
    """
    _check_order(s, t, tau)
    d = np.maximum(np.asarray(t, dtype=float) - s, 0.0)
    e = np.maximum(np.asarray(tau, dtype=float) - t, 0.0)
    regular = d ** (alpha - gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        singular = np.where(e > 0, e ** (-gamma) * d**alpha, np.inf) if gamma > 0 else d**alpha
    out = np.minimum(regular, singular)
    return out if out.ndim else float(out)


def psi12(alpha, gamma, eta, zeta, tau, tau_p, t, s, *, allow_singular=False):
    """Evaluate ``psi12_{alpha, gamma, eta, zeta}(tau, tau', t, s)``.

    Computed through the factored form
    ``|tau - tau'|^eta |tau' - t|^-(eta - zeta) psi1_{alpha, gamma + zeta}(tau', t, s)``.

    Raises
    ------
    SingularEvaluation
        At ``tau' == t`` with ``eta > zeta`` (unless ``allow_singular``, in
        which case ``inf`` is returned there).
    """
    _check_order(s, t, tau_p, tau)
    gap = np.maximum(np.asarray(tau, dtype=float) - tau_p, 0.0)
    e = np.maximum(np.asarray(tau_p, dtype=float) - t, 0.0)
    if eta > zeta:
        sing = e == 0
        if np.any(sing) and not allow_singular:
            raise SingularEvaluation("psi12 is singular at tau' == t when eta > zeta")
        with np.errstate(divide="ignore"):
            middle = e ** (-(eta - zeta))
    else:
        middle = np.ones_like(e)
    out = gap**eta * middle * np.asarray(psi1(alpha, gamma + zeta, tau_p, t, s))
    if eta > zeta:
        out = np.where(e == 0, np.inf, out)
    return out if out.ndim else float(out)
