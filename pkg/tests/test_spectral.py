import math

import numpy as np
import pytest
from scipy import integrate

from nodal import (AtomSet, CovarianceKernel, CubeLebesgue, GaussianDensity,
                   SphereSurface, TabulatedDensity, barrier_search,
                   check_rho1, check_rho2, check_rho3, check_rho4,
                   check_rho4_interior_point, check_rho4_quadratic,
                   covariance_from_spectrum, kernel_derivative)
from nodal.quadrature import adaptive_gauss_legendre


# ---------------------------------------------------------------------------
# independent oracles


def circle_kernel_quadrature(x):
    """Fourier integral over the unit circle by direct quadrature."""
    r = np.linalg.norm(x)
    val, _ = integrate.quad(lambda th: math.cos(2 * math.pi * r * math.cos(th)),
                            0.0, 2 * math.pi, limit=200)
    return val / (2 * math.pi)


def central_second_difference(f, x, i, j, h=5e-5):
    x = np.asarray(x, dtype=float)

    def shift(di, dj):
        y = x.copy()
        y[i] += di * h
        y[j] += dj * h
        return f(y)

    if i == j:
        return (shift(1, 0) - 2 * f(x) + shift(-1, 0)) / h ** 2
    return (shift(1, 1) - shift(1, -1) - shift(-1, 1) + shift(-1, -1)) \
        / (4 * h ** 2)


def bessel_j0_series(z, terms=60):
    total = 0.0
    term = 1.0
    for k in range(terms):
        if k > 0:
            term *= -(z * z) / (4.0 * k * k)
        total += term
    return total


# ---------------------------------------------------------------------------
# covariance_from_spectrum


def test_cube_kernel_at_zero_is_one():
    rho = CubeLebesgue(1.0, 2)
    assert covariance_from_spectrum(rho, np.zeros(2)) == pytest.approx(1.0)


def test_cube_kernel_sinc_zero():
    rho = CubeLebesgue(1.0, 1)
    assert covariance_from_spectrum(rho, np.array([0.5])) == \
        pytest.approx(0.0, abs=1e-14)


def test_circle_kernel_first_zero_matches_quadrature():
    rho = SphereSurface(1.0, 2)
    x = np.array([0.38274, 0.0])
    k = covariance_from_spectrum(rho, x)
    assert abs(k) < 1e-4
    assert k == pytest.approx(circle_kernel_quadrature(x), abs=1e-9)


def test_kernel_even_in_x():
    rng = np.random.default_rng(3)
    measures = [CubeLebesgue(0.7, 2), SphereSurface(1.3, 2),
                GaussianDensity(0.4, 2),
                AtomSet([[1.0, 0.3], [-1.0, -0.3]], [0.5, 0.5])]
    for rho in measures:
        for _ in range(5):
            x = rng.normal(size=2)
            assert covariance_from_spectrum(rho, x) == \
                pytest.approx(covariance_from_spectrum(rho, -x), rel=1e-12)


def test_atom_kernel_is_cosine_sum():
    pts = np.array([[0.7, 0.2], [-0.7, -0.2], [0.1, -1.1], [-0.1, 1.1]])
    w = np.array([0.3, 0.3, 0.2, 0.2])
    rho = AtomSet(pts, w)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.normal(size=2)
        expected = np.sum(w * np.cos(2 * np.pi * pts @ x)) / w.sum()
        assert rho.kernel(x) == pytest.approx(expected, rel=1e-12)


def test_tabulated_matches_cube():
    grid = np.linspace(-1, 1, 201)
    rho_tab = TabulatedDensity(grid, np.ones_like(grid))
    rho_cube = CubeLebesgue(1.0, 1)
    for x in (0.0, 0.2, 0.5, 1.7):
        assert rho_tab.kernel(np.array([x])) == \
            pytest.approx(rho_cube.kernel(np.array([x])), abs=1e-9)


# ---------------------------------------------------------------------------
# kernel_derivative


def test_gaussian_limit_second_derivative():
    rho = GaussianDensity(1.0 / (2 * math.pi), 2)   # kernel exp(-|u|^2/2)
    kern = CovarianceKernel(rho)
    assert kernel_derivative(kern, np.zeros(2), [2, 0]) == pytest.approx(-1.0)


def test_sinc_second_derivative():
    rho = CubeLebesgue(1.0, 1)
    kern = CovarianceKernel(rho)
    val = kernel_derivative(kern, np.zeros(1), [2])
    assert val == pytest.approx(-(2 * math.pi) ** 2 / 3.0, rel=1e-12)
    fd = central_second_difference(lambda x: rho.kernel(x), np.zeros(1), 0, 0)
    assert val == pytest.approx(fd, abs=1e-5)


def test_odd_derivative_vanishes_at_zero():
    for rho in (CubeLebesgue(1.0, 2), SphereSurface(1.0, 2),
                GaussianDensity(0.5, 2)):
        kern = CovarianceKernel(rho)
        assert kernel_derivative(kern, np.zeros(2), [1, 0]) == \
            pytest.approx(0.0, abs=1e-12)


def test_derivative_order_cap():
    kern = CovarianceKernel(CubeLebesgue(1.0, 2))
    with pytest.raises(ValueError):
        kernel_derivative(kern, np.zeros(2), [2, 1])


@pytest.mark.parametrize("rho", [CubeLebesgue(0.8, 2), SphereSurface(1.2, 2),
                                 GaussianDensity(0.3, 2),
                                 AtomSet([[0.9, 0.1]], [1.0])])
def test_closed_form_derivatives_match_differences(rho):
    rng = np.random.default_rng(11)
    kern = CovarianceKernel(rho)
    pts = rng.normal(scale=0.7, size=(100, 2))
    for x in pts[:20]:
        for (i, j) in ((0, 0), (0, 1), (1, 1)):
            alpha = np.zeros(2, dtype=int)
            alpha[i] += 1
            alpha[j] += 1
            fd = central_second_difference(lambda y: rho.kernel(y), x, i, j)
            assert kernel_derivative(kern, x, alpha) == \
                pytest.approx(fd, abs=1e-6)


# ---------------------------------------------------------------------------
# rho1, rho2, rho3


def test_rho1_atom_pair():
    rho = AtomSet([[1.0], [-1.0]], [0.5, 0.5])
    assert check_rho1(rho) == pytest.approx(1.0)


def test_rho1_cube_fifth():
    rho = CubeLebesgue(1.0, 1)
    oracle, _ = adaptive_gauss_legendre(lambda lam: lam ** 4, -1.0, 1.0)
    assert check_rho1(rho) == pytest.approx(oracle / 2.0)
    assert check_rho1(rho) == pytest.approx(0.2)


def test_rho1_sphere_unit():
    assert check_rho1(SphereSurface(1.0, 2)) == pytest.approx(1.0)


def test_rho2_verdicts():
    assert not check_rho2(SphereSurface(1.0, 2)).has_atoms
    assert not check_rho2(CubeLebesgue(1.0, 2)).has_atoms
    rep = check_rho2(AtomSet([[1.0], [-1.0]], [0.5, 0.5]))
    assert rep.has_atoms
    assert len(rep.atoms) == 2


def test_rho3_cube():
    mm = check_rho3(CubeLebesgue(1.0, 2))
    val, _ = integrate.quad(lambda lam: lam * lam, -1, 1)
    assert np.allclose(mm.entries, np.eye(2) * (val / 2.0), atol=1e-12)
    assert np.allclose(mm.entries, np.eye(2) / 3.0)
    assert mm.passed


def test_rho3_sphere():
    mm = check_rho3(SphereSurface(1.0, 2))
    val, _ = integrate.quad(lambda th: math.cos(th) ** 2, 0, 2 * math.pi)
    assert np.allclose(mm.entries, np.eye(2) * (val / (2 * math.pi)),
                       atol=1e-12)
    assert mm.passed


def test_rho3_atom_pair_fails_in_2d():
    mm = check_rho3(AtomSet([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5]))
    assert np.allclose(mm.entries, np.diag([1.0, 0.0]))
    assert not mm.passed


def test_moment_matrix_is_scaled_kernel_hessian():
    for rho in (CubeLebesgue(1.0, 2), SphereSurface(1.0, 2),
                GaussianDensity(0.5, 2)):
        mm = check_rho3(rho).entries
        hess = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                alpha = np.zeros(2, dtype=int)
                alpha[i] += 1
                alpha[j] += 1
                hess[i, j] = rho.kernel_deriv(np.zeros(2), alpha)
        assert np.allclose(mm, -hess / (4 * math.pi ** 2), atol=1e-6)


# ---------------------------------------------------------------------------
# rho4


def test_interior_point_origin_shortcut():
    pts = np.array([[0.0, 0.0], [1, 0], [-1, 0], [0, 1], [0, -1]])
    cert = check_rho4_interior_point(pts)
    assert cert.satisfied
    assert np.allclose(cert.witness["point"], 0.0)


def test_interior_point_circle_inconclusive():
    th = 2 * np.pi * np.arange(64) / 64
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert not check_rho4_interior_point(pts).satisfied


def test_interior_point_cross_polytope():
    pts = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [0.4, 0.4],
                    [-0.4, -0.4]], dtype=float)
    cert = check_rho4_interior_point(pts)
    assert cert.satisfied
    w = cert.witness["point"]
    # oracle: hull is |x| + |y| <= 1, so (0.4, 0.4) is strictly inside
    assert abs(np.abs(w).sum() - 0.8) < 1e-12
    assert np.abs(w).sum() < 1.0


def test_quadratic_circle_variety():
    th = 2 * np.pi * np.arange(32) / 32
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    cert = check_rho4_quadratic(pts)
    assert not cert.satisfied
    const = cert.witness["constant"]
    quad = cert.witness["quadratic"]
    # the variety lambda1^2 + lambda2^2 = 1, up to scale
    assert quad[0, 0] == pytest.approx(quad[1, 1], rel=1e-6)
    assert quad[0, 1] == pytest.approx(0.0, abs=1e-9)
    assert const == pytest.approx(-quad[0, 0], rel=1e-6)


def test_quadratic_five_points_satisfied():
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [2, 0]], dtype=float)
    # oracle: rank of (1, l1^2, l1 l2, l2^2) rows
    V = np.array([[1, p[0] ** 2, p[0] * p[1], p[1] ** 2] for p in pts])
    assert np.linalg.matrix_rank(V) == 4
    assert check_rho4_quadratic(pts).satisfied


def test_quadratic_single_pair_inconclusive():
    pts = np.array([[1.0], [-1.0]])
    assert not check_rho4_quadratic(pts).satisfied


def test_rho4_never_satisfied_on_antipodal_pair():
    pts = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert not check_rho4_interior_point(pts).satisfied
    assert not check_rho4_quadratic(pts).satisfied


def test_barrier_sphere_measure():
    cert = barrier_search(SphereSurface(1.0, 2), max_radius=1.0,
                          grid_step=0.5)
    assert cert.verdict == "satisfied_barrier"
    assert cert.witness["domain"]["radius"] == pytest.approx(0.5)
    # oracle: radial profile is J0(2 pi t); at t = 1/2 -> J0(pi)
    assert cert.witness["boundary_max"] == \
        pytest.approx(bessel_j0_series(math.pi), abs=1e-9)
    assert cert.witness["boundary_max"] == pytest.approx(-0.304, abs=5e-4)
    assert cert.witness["interior_value"] == pytest.approx(1.0)


def test_barrier_gaussian_inconclusive():
    cert = barrier_search(GaussianDensity(0.5, 2), max_radius=2.0,
                          grid_step=0.25)
    assert not cert.satisfied
    assert cert.witness["profile_min"] > 0


def test_barrier_cosine_atoms():
    rho = AtomSet([[1.0], [-1.0]], [0.5, 0.5])
    cert = barrier_search(rho, max_radius=1.0, grid_step=0.5)
    assert cert.verdict == "satisfied_barrier"
    assert cert.witness["boundary_max"] == pytest.approx(-1.0)
    assert cert.witness["interior_value"] == pytest.approx(1.0)


def test_check_rho4_composite_sphere_uses_barrier():
    cert = check_rho4(SphereSurface(1.0, 2))
    assert cert.verdict == "satisfied_barrier"


def test_check_rho4_composite_cube_interior_point():
    cert = check_rho4(CubeLebesgue(1.0, 2))
    assert cert.verdict == "satisfied_interior_point"


def test_check_rho4_composite_gaussian_origin():
    cert = check_rho4(GaussianDensity(0.5, 2))
    assert cert.verdict == "satisfied_interior_point"
    assert cert.witness.get("origin")
