import math

import numpy as np
import pytest
from scipy import integrate

from volterra_lift.driver import (
    DriverSpec,
    PathSample,
    cholesky_with_jitter,
    covariance,
    diagonal_level1_constant,
    inner_product_H,
    ito_isometry_second_moment,
    level1_exact_covariance,
    point_covariance_matrix,
    sample_paths,
)
from volterra_lift.errors import NumericalError, ParameterError
from volterra_lift.grid import make_uniform_grid

FBM = DriverSpec("fbm", 0.75, 1, 3)
BM = DriverSpec("bm", dim=1, seed=3)


def test_driver_spec_validation():
    with pytest.raises(ParameterError):
        DriverSpec("fbm", 0.4)
    with pytest.raises(ParameterError):
        DriverSpec("levy")
    assert DriverSpec("bm", hurst=0.9).hurst == 0.5


def test_covariance_examples():
    assert covariance(FBM, 1.0, 1.0) == 1.0
    assert covariance(BM, 1.0, 2.0) == 1.0
    # (2^1.5 + 1 - 1) / 2
    assert covariance(FBM, 1.0, 2.0) == pytest.approx(1.4142135623730951, rel=1e-14)


def test_inner_product_examples():
    ind = lambda a, b: ([a, b], [1.0])  # noqa: E731
    assert inner_product_H(FBM, ind(0, 1), ind(0, 1)) == pytest.approx(1.0)
    # R(1, 2) - R(1, 1)
    assert inner_product_H(FBM, ind(0, 1), ind(1, 2)) == pytest.approx(0.41421356237309515, rel=1e-12)
    assert inner_product_H(FBM, ([0, 1], [0.0]), ([0, 1], [0.0])) == 0.0


def test_inner_product_matches_covariance_on_grid():
    g = make_uniform_grid(2.0, 8)
    for s in g.points[1:]:
        for t in g.points[1:]:
            val = inner_product_H(FBM, ([0, s], [1.0]), ([0, t], [1.0]))
            assert val == pytest.approx(covariance(FBM, s, t), abs=1e-8)


def test_inner_product_against_double_quadrature():
    f = ([0.0, 0.3, 1.0], [2.0, -1.0])
    g = ([0.2, 0.6], [1.5])
    aH = FBM.a_h

    def piece(a1, b1, a2, b2):
        # integrate the singular kernel over one rectangle, splitting at the diagonal
        inner = lambda u: integrate.quad(lambda v: abs(u - v) ** (2 * 0.75 - 2), a2, b2,  # noqa: E731
                                         points=[u] if a2 < u < b2 else None, limit=200)[0]
        return integrate.quad(inner, a1, b1, limit=200)[0]

    brute = aH * (2.0 * 1.5 * piece(0.0, 0.3, 0.2, 0.6) - 1.0 * 1.5 * piece(0.3, 1.0, 0.2, 0.6))
    assert inner_product_H(FBM, f, g) == pytest.approx(brute, rel=1e-6)


def test_inner_product_bm_is_l2():
    f = ([0.0, 0.5, 1.0], [1.0, 3.0])
    g = ([0.25, 0.75], [2.0])
    assert inner_product_H(BM, f, g) == pytest.approx(2.0 * 0.25 + 6.0 * 0.25)


def test_cholesky_reports_eigenvalue():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericalError, match="smallest eigenvalue -1"):
        cholesky_with_jitter(bad)


def test_covariance_matrix_symmetric_and_factorises():
    g = make_uniform_grid(1.0, 256)
    cov = point_covariance_matrix(FBM, g)
    np.testing.assert_array_equal(cov, cov.T)
    low = cholesky_with_jitter(cov)
    np.testing.assert_allclose(low @ low.T, cov, atol=1e-9)


def test_sampling_is_deterministic_and_starts_at_zero():
    g = make_uniform_grid(1.0, 16)
    a = sample_paths(DriverSpec("fbm", 0.75, 2, 9), g, 3)
    b = sample_paths(DriverSpec("fbm", 0.75, 2, 9), g, 3)
    for x, y in zip(a, b):
        assert x.values.tobytes() == y.values.tobytes()
        assert np.all(x.values[0] == 0)
    # sample i does not depend on how many were requested
    c = sample_paths(DriverSpec("fbm", 0.75, 2, 9), g, 1, start=2)[0]
    assert c.values.tobytes() == a[2].values.tobytes()
    assert not np.array_equal(a[0].values, a[1].values)


@pytest.mark.slow
def test_sample_moments():
    g = make_uniform_grid(2.0, 8)
    n = 20000
    bm = np.array([p.values[-1, 0] for p in sample_paths(DriverSpec("bm", seed=1), g, n)])
    var, se = np.mean(bm**2), np.std(bm**2) / math.sqrt(n)
    assert abs(var - 2.0) < 4 * se
    fb = sample_paths(DriverSpec("fbm", 0.75, 1, 2), g, n)
    prod = np.array([p.values[4, 0] * p.values[8, 0] for p in fb])
    assert abs(prod.mean() - 1.4142135623730951) < 4 * prod.std() / math.sqrt(n)


def test_path_from_function():
    g = make_uniform_grid(1.0, 4)
    p = PathSample.from_function(g, lambda t: t + 3.0, dim=2)
    np.testing.assert_allclose(p.values[:, 1], g.points)
    with pytest.raises(ParameterError):
        PathSample(g, np.ones(5))


def test_bm_level1_variance_closed_form():
    # (1^0.5 - 0.5^0.5) / 0.5
    assert level1_exact_covariance(BM, 0.25, (0, 0.5, 1), (0, 0.5, 1)) == pytest.approx(0.5857864376269049, rel=1e-12)


def test_fbm_gamma_zero_reduces_to_increments():
    assert level1_exact_covariance(FBM, 0.0, (0.2, 0.7, 0.9), (0.2, 0.7, 1.0)) == pytest.approx(0.5**1.5)


def test_fbm_diagonal_constant():
    # 2 H (2H - 1) B(1 - gamma, 2H - 1) / (2H - 2 gamma) at H = 0.75, gamma = 0.2
    frozen = 1.567696239850888
    assert diagonal_level1_constant(0.75, 0.2) == pytest.approx(frozen, rel=1e-13)
    assert level1_exact_covariance(FBM, 0.2, (0, 1, 1), (0, 1, 1)) == pytest.approx(frozen, rel=1e-9)
    # self-similarity
    assert level1_exact_covariance(FBM, 0.2, (0.3, 0.55, 0.55), (0.3, 0.55, 0.55)) == pytest.approx(
        frozen * 0.25**1.1, rel=1e-9)


def test_fbm_covariance_against_coarse_double_integral():
    # independent check: tensor Gauss-Jacobi would be overkill; use scipy dblquad away from singular corners
    s, t, tau, s2, t2, tau2 = 0.0, 0.4, 0.9, 0.5, 0.8, 1.0
    f = lambda l, r: (tau - r) ** -0.2 * (tau2 - l) ** -0.2 * abs(r - l) ** -0.5  # noqa: E731
    brute = 0.375 * integrate.dblquad(f, s, t, s2, t2, epsabs=1e-12)[0]
    assert level1_exact_covariance(FBM, 0.2, (s, t, tau), (s2, t2, tau2)) == pytest.approx(brute, rel=1e-8)


def test_covariance_symmetric_and_additive():
    a = (0.1, 0.6, 0.8)
    b = (0.0, 0.7, 0.7)
    assert level1_exact_covariance(FBM, 0.2, a, b) == pytest.approx(level1_exact_covariance(FBM, 0.2, b, a), rel=1e-10)
    left = level1_exact_covariance(FBM, 0.2, (0.1, 0.35, 0.8), b)
    right = level1_exact_covariance(FBM, 0.2, (0.35, 0.6, 0.8), b)
    assert left + right == pytest.approx(level1_exact_covariance(FBM, 0.2, a, b), rel=1e-10)


def test_covariance_regime():
    with pytest.raises(ParameterError):
        level1_exact_covariance(FBM, 0.5, (0, 1, 1), (0, 1, 1))
    with pytest.raises(ParameterError):
        level1_exact_covariance(BM, 0.5, (0, 1, 1), (0, 1, 1))


def test_ito_isometry_values():
    # (1 - 2g)^-1 B(2 - 2g, 1 - 2g) at g = 0.25 equals pi
    assert ito_isometry_second_moment(0.25, 0, 1, 1) == pytest.approx(math.pi, rel=1e-12)
    brute = integrate.quad(lambda r: (1.5 - r) ** -0.5 * r**0.5, 0, 1)[0] / 0.5
    assert ito_isometry_second_moment(0.25, 0, 1, 1.5) == pytest.approx(brute, rel=1e-10)
    k = lambda r: (1.0 - r) ** -0.25 - (0.5 - r) ** -0.25  # noqa: E731
    brute = integrate.quad(lambda r: k(r) ** 2 * r**0.5, 0, 0.5, limit=200)[0] / 0.5
    assert ito_isometry_second_moment(0.25, 0, 0.5, 1.0, 0.5) == pytest.approx(brute, rel=1e-7)
