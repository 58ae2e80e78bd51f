import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volterra_lift.analysis import (
    ArrayField,
    auto_p,
    classical_grr_ratio,
    delta_norms,
    grr_U1,
    grr_U12,
    grr_check,
    volterra_norm1,
    volterra_norm12,
)
from volterra_lift.driver import DriverSpec, PathSample, sample_paths
from volterra_lift.errors import ParameterError
from volterra_lift.grid import make_uniform_grid
from volterra_lift.level1 import build_level1
from volterra_lift.level2 import build_level2
from volterra_lift.regularity import psi1, psi12


def _power_field(n, alpha):
    g = make_uniform_grid(1.0, n)
    vals = np.tile(g.points**alpha, (n + 1, 1))
    return ArrayField(g, vals)


def test_norm1_power_field_is_one():
    res = volterra_norm1(_power_field(16, 0.4), 0.4, 0.0)
    assert res.value == pytest.approx(1.0, abs=1e-14)
    assert res.argmax[0] == 0


def test_norm1_linear_lift():
    # ((tau - s)^0.75 - (tau - t)^0.75) / 0.75 over psi1_{1, 0.25}; worst tuple is the full diagonal
    g = make_uniform_grid(1.0, 32)
    z = build_level1(PathSample.from_function(g, lambda t: t), 0.25)
    res = volterra_norm1(z, 1.0, 0.25)
    assert res.value == pytest.approx(1 / 0.75, rel=1e-12)
    assert res.argmax[1] == res.argmax[2]


@settings(max_examples=20)
@given(st.floats(0.3, 0.9), st.floats(0.05, 0.25))
def test_norm1_embedding(alpha, drop):
    g = make_uniform_grid(1.0, 12)
    z = build_level1(sample_paths(DriverSpec("bm", dim=1, seed=1), g, 1)[0], 0.1)
    lo = volterra_norm1(z, alpha - drop, 0.1).value
    hi = volterra_norm1(z, alpha, 0.1).value
    assert lo <= hi * (1 + 1e-12)


def test_norms_homogeneous_and_zero():
    g = make_uniform_grid(1.0, 16)
    z = build_level1(sample_paths(DriverSpec("fbm", 0.75, 2, 3), g, 1)[0], 0.2)
    arr = ArrayField(g, z.dense())
    scaled = ArrayField(g, -2.5 * z.dense())
    assert volterra_norm1(scaled, 0.6, 0.2).value == pytest.approx(2.5 * volterra_norm1(arr, 0.6, 0.2).value)
    assert volterra_norm12(scaled, 0.6, 0.2, 0.5, 0.1).value == pytest.approx(
        2.5 * volterra_norm12(arr, 0.6, 0.2, 0.5, 0.1).value)
    zero = ArrayField(g, np.zeros_like(z.dense()))
    assert volterra_norm1(zero, 0.6, 0.2).value == 0
    assert volterra_norm12(zero, 0.6, 0.2, 0.5, 0.1).value == 0
    assert grr_U1(zero, 0.6, 0.2, 0.0, 0.0, 4, 16) == 0
    rep = grr_check(zero, 0.6, 0.2, 0.4, 0.6, 0.1)
    assert rep.grr_ratio1 == 0 and rep.grr_ratio12 == 0


def _brute_U1(field, alpha, gamma, eta, zeta, p, tau):
    g = field.grid
    pts, h = g.points, g.h
    z = field.increment_matrix(tau)
    total = 0.0
    for w in range(1, tau + 1):
        if w == tau and eta < zeta:
            continue
        for v in range(w):
            num = np.linalg.norm(z[w, v]) ** (2 * p) * (pts[tau] - pts[w]) ** (2 * p * (eta - zeta))
            den = psi1(alpha, gamma + zeta, pts[tau], pts[w], pts[v]) ** (2 * p) * (pts[w] - pts[v]) ** 2
            total += h * h * num / den
    return total ** (1 / (2 * p))


def _brute_U12(field, alpha, gamma, eta, zeta, p):
    g = field.grid
    pts, h = g.points, g.h
    total = 0.0
    for r in range(g.n_points):
        zr = field.increment_matrix(r)
        for rp in range(1, r):
            zp = field.increment_matrix(rp)
            for w in range(1, rp + 1):
                if w == rp and eta > zeta:
                    continue
                for v in range(w):
                    num = np.linalg.norm(zr[w, v] - zp[w, v]) ** (2 * p)
                    den = psi12(alpha, gamma, eta, zeta, pts[r], pts[rp], pts[w], pts[v]) ** (2 * p)
                    total += h**4 * num / den / ((pts[w] - pts[v]) ** 2 * (pts[r] - pts[rp]) ** 2)
    return total ** (1 / (2 * p))


@pytest.mark.parametrize("eta,zeta", [(0.0, 0.0), (0.3, 0.1), (0.1, 0.3)])
def test_grr_functionals_brute_force(eta, zeta):
    g = make_uniform_grid(1.0, 8)
    z = build_level1(sample_paths(DriverSpec("fbm", 0.75, 2, 9), g, 1)[0], 0.2)
    for tau in (3, 8):
        assert grr_U1(z, 0.5, 0.2, eta, zeta, 3, tau) == pytest.approx(
            _brute_U1(z, 0.5, 0.2, eta, zeta, 3, tau), rel=1e-10)
    assert grr_U12(z, 0.5, 0.2, eta, zeta, 3) == pytest.approx(_brute_U12(z, 0.5, 0.2, eta, zeta, 3), rel=1e-10)


def test_grr_U1_large_p_finite():
    g = make_uniform_grid(1.0, 16)
    z = build_level1(sample_paths(DriverSpec("bm", dim=1, seed=2), g, 1)[0], 0.2)
    val = grr_U1(z, 0.45, 0.2, 0.0, 0.0, 200, 16)
    assert np.isfinite(val) and val > 0


def test_delta_norm_of_additive_field_vanishes():
    g = make_uniform_grid(1.0, 16)
    z = build_level1(sample_paths(DriverSpec("fbm", 0.75, 2, 3), g, 1)[0], 0.2)
    n1, n12 = delta_norms(z, 0.5, 0.2, 0.3, 0.1)
    assert n1 < 1e-12 and n12 < 1e-12


def test_delta_norm_classical_level_two():
    # delta_u z2_ts = (u - s)(t - u) for x = t; sup over (t - s)^2 is 1/4
    g = make_uniform_grid(1.0, 8)
    f2 = build_level2(build_level1(PathSample.from_function(g, lambda t: t), 0.0))
    n1, _ = delta_norms(f2, 2.0, 0.0, 0.0, 0.0)
    assert n1 == pytest.approx(0.25, rel=1e-12)


def test_delta_norm_level_two_bounded_by_level_one():
    # delta z2 is a convolution of z1 with itself, so its size is controlled by the z1 norm squared
    g = make_uniform_grid(1.0, 32)
    z1 = build_level1(sample_paths(DriverSpec("fbm", 0.75, 2, 6), g, 1)[0], 0.2)
    f2 = build_level2(z1)
    a = 0.6
    n1 = volterra_norm1(z1, a, 0.2).value
    d, _ = delta_norms(f2, 2 * a - 0.2, 0.2, 0.0, 0.0)
    assert 0 < d < 10 * n1**2


def test_norm12_stable_under_refinement():
    vals = []
    for n in (64, 128):
        g = make_uniform_grid(1.0, n)
        z = build_level1(PathSample.from_function(g, np.sin), 0.25)
        vals.append(volterra_norm12(z, 0.9, 0.25, 0.6, 0.1, max_upper_points=17).value)
    assert vals[1] == pytest.approx(vals[0], rel=0.05)


def test_auto_p():
    assert auto_p(0.5, 0.45) == 21
    assert auto_p(0.5, 0.3, 0.1) == 11
    assert auto_p(0.75, 0.25) == 3


def test_grr_check_parameter_errors():
    z = _power_field(8, 0.5)
    with pytest.raises(ParameterError):
        grr_check(z, 0.5, 0.2, 0.6, 0.1, 0.0)
    with pytest.raises(ParameterError):
        grr_check(z, 0.5, 0.2, 0.4, 0.1, 0.0, p=5)


def test_grr_ratios_finite_on_sample():
    g = make_uniform_grid(1.0, 32)
    z = build_level1(sample_paths(DriverSpec("fbm", 0.75, 2, 8), g, 1)[0], 0.2)
    rep = grr_check(z, 0.5, 0.2, 0.4, 0.6, 0.1)
    assert rep.p == 11
    assert 0 < rep.grr_ratio1 < 10 and 0 < rep.grr_ratio12 < 10
    assert set(rep.to_dict()) >= {"norm1", "norm12", "u1", "u12", "grr_ratio1", "grr_ratio12", "params"}


def test_classical_grr_ratio():
    grid = np.linspace(0, 1, 33)
    assert classical_grr_ratio(np.zeros(33), 1 / 32, 0.4, 6) == 0
    lin = classical_grr_ratio(grid, 1 / 32, 0.4, 6)
    assert lin == pytest.approx(classical_grr_ratio(3 * grid, 1 / 32, 0.4, 6))
    # linear path: sup is 1, the double sum is computable directly
    t, s = np.tril_indices(33, -1)
    lag = (t - s) / 32
    den = (np.sum(lag**6 / lag ** (2 + 6 * 0.4)) / 32**2) ** (1 / 6)
    assert lin == pytest.approx(1 / den, rel=1e-12)
    assert math.isfinite(lin)
