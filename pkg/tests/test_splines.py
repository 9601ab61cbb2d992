import numpy as np
import pytest

from csbm import SplineBasis, rate_eval, rate_gradient, rate_integral

from .oracles import basis_naive, gl_rate_integral


def test_uniform_basis_shape():
    basis = SplineBasis.uniform(8)
    assert basis.nbasis == 8
    assert basis.degree == 3
    # clamped ends: multiplicity degree+1
    assert np.all(basis.knots[:4] == 0.0)
    assert np.all(basis.knots[-4:] == 24.0)


def test_partition_of_unity():
    basis = SplineBasis.uniform(8)
    grid = np.linspace(0.0, 24.0, 1000)
    sums = basis.design(grid).sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) < 1e-12


@pytest.mark.parametrize("nbasis,degree", [(8, 3), (5, 2), (1, 0), (12, 3)])
def test_design_matches_cox_de_boor(nbasis, degree):
    basis = SplineBasis.uniform(nbasis, degree)
    grid = np.linspace(0.0, 24.0, 31)
    mat = basis.design(grid)
    for gi, t in enumerate(grid):
        for j in range(nbasis):
            assert mat[gi, j] == pytest.approx(
                basis_naive(t, basis.knots, degree, j), abs=1e-12)


def test_rate_eval_identity_and_scaling():
    basis = SplineBasis.uniform(8)
    grid = np.linspace(0.0, 24.0, 97)
    assert np.allclose(rate_eval(basis, np.zeros(8), grid), 1.0, atol=1e-12)
    assert np.allclose(rate_eval(basis, np.full(8, np.log(2.0)), grid), 2.0,
                       atol=1e-12)


def test_rate_eval_right_end_clamped_basis():
    basis = SplineBasis.uniform(8)
    coeffs = np.zeros(8)
    coeffs[-1] = np.log(3.0)
    # only the last clamped basis is active at the right end
    assert rate_eval(basis, coeffs, 24.0) == pytest.approx(3.0, abs=1e-12)
    assert basis_naive(24.0, basis.knots, 3, 7) == 1.0


def test_rate_eval_positive():
    rng = np.random.default_rng(0)
    basis = SplineBasis.uniform(8)
    for _ in range(20):
        coeffs = rng.normal(0.0, 2.0, 8)
        assert np.all(rate_eval(basis, coeffs, np.linspace(0, 24, 200)) > 0)


def test_rate_eval_range_errors():
    basis = SplineBasis.uniform(8)
    with pytest.raises(ValueError):
        rate_eval(basis, np.zeros(8), 24.5)
    with pytest.raises(ValueError):
        rate_eval(basis, np.zeros(8), -0.1)
    with pytest.raises(ValueError):
        rate_eval(basis, np.zeros(7), 1.0)
    with pytest.raises(ValueError):
        rate_eval(basis, np.r_[np.zeros(7), np.inf], 1.0)


def test_rate_integral_constants():
    basis = SplineBasis.uniform(8)
    assert rate_integral(basis, np.zeros(8), 0.0, 24.0) == pytest.approx(
        24.0, abs=1e-10)
    assert rate_integral(basis, np.zeros(8), 7.3, 7.3) == 0.0
    assert rate_integral(basis, np.full(8, np.log(2.0)), 0.0, 12.0) == \
        pytest.approx(24.0, abs=1e-10)


def test_rate_integral_vs_gauss_legendre():
    rng = np.random.default_rng(1)
    basis = SplineBasis.uniform(8)
    for _ in range(25):
        coeffs = rng.normal(0.0, 1.0, 8)
        t0, t1 = np.sort(rng.uniform(0.0, 24.0, 2))
        exact = rate_integral(basis, coeffs, t0, t1)
        quad = gl_rate_integral(basis, coeffs, t0, t1)
        assert exact == pytest.approx(quad, abs=1e-10)


def test_rate_integral_additivity():
    rng = np.random.default_rng(2)
    basis = SplineBasis.uniform(8)
    for _ in range(25):
        coeffs = rng.normal(0.0, 1.0, 8)
        a, b, c = np.sort(rng.uniform(0.0, 24.0, 3))
        whole = rate_integral(basis, coeffs, a, c)
        split = rate_integral(basis, coeffs, a, b) + \
            rate_integral(basis, coeffs, b, c)
        assert whole == pytest.approx(split, abs=1e-10)


def test_rate_integral_errors():
    basis = SplineBasis.uniform(8)
    with pytest.raises(ValueError):
        rate_integral(basis, np.zeros(8), 5.0, 4.0)
    with pytest.raises(ValueError):
        rate_integral(basis, np.zeros(8), -1.0, 4.0)


def test_gradient_point_identity():
    basis = SplineBasis.uniform(8)
    t = 9.7
    grad = rate_gradient(basis, np.zeros(8), t)
    assert np.allclose(grad, basis.design(t)[0], atol=1e-14)


def test_gradient_empty_interval():
    basis = SplineBasis.uniform(8)
    grad = rate_gradient(basis, np.random.default_rng(3).normal(size=8),
                         (5.0, 5.0))
    assert np.allclose(grad, 0.0)


def _fd_integral_gradient(basis, coeffs, t0, t1, h=1e-5):
    fd = np.empty(len(coeffs))
    for p in range(len(coeffs)):
        up, dn = coeffs.copy(), coeffs.copy()
        up[p] += h
        dn[p] -= h
        fd[p] = (rate_integral(basis, up, t0, t1)
                 - rate_integral(basis, dn, t0, t1)) / (2 * h)
    return fd


def test_gradient_matches_finite_differences_fixed_interval():
    rng = np.random.default_rng(4)
    basis = SplineBasis.uniform(8)
    for _ in range(100):
        coeffs = rng.normal(0.0, 1.0, 8)
        grad = rate_gradient(basis, coeffs, (3.0, 17.0))
        fd = _fd_integral_gradient(basis, coeffs, 3.0, 17.0)
        for p in range(8):
            if fd[p] == 0.0:
                assert grad[p] == pytest.approx(0.0, abs=1e-12)
            else:
                assert abs(grad[p] - fd[p]) / abs(fd[p]) < 1e-6


def test_gradient_matches_finite_differences_random_intervals():
    # components whose basis barely overlaps the interval are dominated by
    # finite-difference roundoff, so compare whole vectors
    rng = np.random.default_rng(14)
    basis = SplineBasis.uniform(8)
    for _ in range(100):
        coeffs = rng.normal(0.0, 1.0, 8)
        t0, t1 = np.sort(rng.uniform(0.0, 24.0, 2))
        grad = rate_gradient(basis, coeffs, (t0, t1))
        fd = _fd_integral_gradient(basis, coeffs, t0, t1)
        assert np.linalg.norm(grad - fd) <= 1e-6 * max(np.linalg.norm(fd),
                                                       1e-9)
