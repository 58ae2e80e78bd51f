"""Convolution product of a Volterra path with a two-parameter lower factor.

For an upper factor ``z`` and lower factor ``y`` the product over ``[u, t]`` is

    (z * y)^tau_{tus} = lim sum_{[a, b] in P} y^a_{us} (x) z^tau_{ba}

the limit being taken over partitions ``P`` of ``[u, t]``. The result is
indexed ``out[i, j] = sum y^i z^j``, the layout of level-two increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError, VerificationError
from .regularity import psi1, psi12


@dataclass
class ConvolutionResult:
    """Value of a convolution product with its refinement history."""

    value: np.ndarray
    partition_levels: list = field(default_factory=list)
    converged: bool = True
    est_order: float = float("nan")


def _lower_from_field(y, s: int, u: int) -> Callable[[int], np.ndarray]:
    return lambda k: np.atleast_1d(y.data[u, k] - y.data[s, k])


def convolve(z, y, s, u, t, tau, mode: str = "same_grid", *, tol: float = 1e-6,
             max_depth: int = 10, start_cells: int = 4) -> ConvolutionResult:
    """Convolution product ``(z * y)`` over ``[u, t]`` with upper index ``tau``.

    Parameters
    ----------
    z
        ``same_grid``: a level-one field (anything with ``grid`` and
        ``cell_increments``). ``refine``: a callable ``z(tau, a, b)`` returning
        ``z^tau_{ba}``.
    y
        ``same_grid``: a level-one field, giving ``y^{r}_{us}``, or a callable
        ``y(k)`` of the cell index. ``refine``: a callable ``y(r, u, s)``.
    s, u, t, tau
        Grid indices (``same_grid``) or times (``refine``), ``s <= u <= t <= tau``.
    mode : {"same_grid", "refine"}
        ``refine`` repeats the sum on dyadic partitions of ``[u, t]`` until two
        successive values differ by less than ``tol``.

    Raises
    ------
    ConvergenceError
        If ``refine`` has not met ``tol`` after ``max_depth`` doublings.
    """
    if not s <= u <= t <= tau:
        raise DomainError(f"need s <= u <= t <= tau, got {(s, u, t, tau)}")
    if mode == "same_grid":
        lower = y if callable(y) and not hasattr(y, "data") else _lower_from_field(y, s, u)
        upper = z.cell_increments(tau)
        total = np.zeros((z.dim, z.dim))
        for k in range(u, t):
            total += np.outer(lower(k), upper[k])
        return ConvolutionResult(total, [(None, total)], True)
    if mode != "refine":
        raise ParameterError("mode must be 'same_grid' or 'refine'")
    if u == t:
        zero = np.zeros((1, 1))
        return ConvolutionResult(zero, [(0.0, zero)], True)
    trace, diffs = [], []
    for depth in range(max_depth + 1):
        cells = start_cells * 2**depth
        edges = np.linspace(u, t, cells + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total = total + np.outer(np.atleast_1d(y(a, u, s)), np.atleast_1d(z(tau, a, b)))
        total = np.asarray(total)
        if trace:
            diffs.append(float(np.max(np.abs(total - trace[-1][1]))))
        trace.append(((t - u) / cells, total))
        if diffs and diffs[-1] < tol:
            order = math.log2(diffs[-2] / diffs[-1]) if len(diffs) > 1 and diffs[-1] > 0 else float("nan")
            return ConvolutionResult(total, trace, True, order)
    raise ConvergenceError(f"no convergence to tol={tol} within {max_depth} refinements", trace)


def convolution_bound_ratio(value, z_norm: float, y_norm: float, alpha: float, gamma: float,
                            times, eta: float | None = None, zeta: float | None = None) -> float:
    """``|z * y| / (||z|| ||y|| psi)`` at one simplex tuple.

    ``times = (s, u, t, tau)`` uses ``psi1_{2 rho + gamma, gamma}(tau, t, s)``;
    ``times = (s, u, t, tau', tau)`` uses the matching ``psi12`` with ``eta, zeta``.

    Raises
    ------
    DomainError
        When the weight vanishes (degenerate tuple).
    VerificationError
        When a norm is zero but the product is not.
    """
    num = float(np.linalg.norm(np.asarray(value, dtype=float)))
    a2 = 2 * (alpha - gamma) + gamma
    if len(times) == 4:
        s, _, t, tau = times
        weight = psi1(a2, gamma, tau, t, s)
    elif len(times) == 5:
        if eta is None or zeta is None:
            raise ParameterError("eta and zeta are required for the primed tuple")
        s, _, t, tau_p, tau = times
        weight = psi12(a2, gamma, eta, zeta, tau, tau_p, t, s)
    else:
        raise ParameterError("times must have 4 or 5 entries")
    if weight == 0:
        raise DomainError("degenerate tuple: weight is zero")
    den = z_norm * y_norm * weight
    if den == 0:
        if num == 0:
            return 0.0
        raise VerificationError("nonzero product with zero norm")
    return num / den
