import math

import numpy as np
import pytest

from nodal import (AtomSet, CubeLebesgue, DegenerateMeasureError,
                   GaussianDensity, GridWindow, Kostlan, SphereSurface,
                   Stationary, Trigonometric, controllability_entry,
                   controllability_probe, exact_kernel, gradient_covariance,
                   kernel_convergence_report, limit_measure,
                   sample_kostlan_chart, sample_kostlan_sphere,
                   sample_stationary, sample_trigonometric, scaled_kernel,
                   rng_stream)
from nodal.util import STREAM_COEF, STREAM_FREQ


def small_window(m=2, half=1.0, h=0.25):
    return GridWindow.box(np.zeros(m), half, h)


# ---------------------------------------------------------------------------
# stationary sampler


def test_atom_pair_field_is_exact_two_mode():
    rho = AtomSet([[1.0], [-1.0]], [0.5, 0.5])
    win = GridWindow.box([0.0], 2.0, 0.01)
    f = sample_stationary(rho, win, seed=3)
    xs = win.axis(0)
    # recover the two coefficients from two grid points, then check all
    c, s0 = np.cos(2 * np.pi * xs), np.sin(2 * np.pi * xs)
    A = np.stack([c[:2], s0[:2]], axis=1)
    ab = np.linalg.solve(A, f.values[:2])
    assert np.allclose(f.values, ab[0] * c + ab[1] * s0, atol=1e-10)
    assert np.allclose(f.gradients[0],
                       2 * np.pi * (-ab[0] * s0 + ab[1] * c), atol=1e-8)


def test_stationary_variance_normalized():
    rho = SphereSurface(1.0, 2)
    win = small_window()
    vals = []
    for s in range(600):
        f = sample_stationary(rho, win, n_modes=128, seed=11, sample_index=s)
        vals.append(f.values[0, 0])
    v = np.var(vals)
    assert abs(v - 1.0) < 4 * math.sqrt(2.0 / len(vals))


def test_stationary_empirical_covariance_matches_kernel():
    rho = SphereSurface(1.0, 2)
    u = np.array([0.25, 0.0])
    win = GridWindow.make(np.array([0.0, 0.0]), u[0] * np.ones(2), (2, 2))
    n = 10000
    prods = np.empty(n)
    for s in range(n):
        f = sample_stationary(rho, win, n_modes=64, seed=21, sample_index=s,
                              check=False)
        prods[s] = f.values[0, 0] * f.values[1, 0]
    k = rho.kernel(u)
    se = prods.std(ddof=1) / math.sqrt(n)
    assert abs(prods.mean() - k) < 3 * se


def test_stationary_refuses_hyperplane_measure():
    rho = AtomSet([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5])
    with pytest.raises(DegenerateMeasureError):
        sample_stationary(rho, small_window(), seed=0)


def test_stationary_determinism_bit_identical():
    rho = CubeLebesgue(1.0, 2)
    win = small_window()
    f1 = sample_stationary(rho, win, n_modes=64, seed=9, sample_index=4)
    f2 = sample_stationary(rho, win, n_modes=64, seed=9, sample_index=4)
    assert np.array_equal(f1.values, f2.values)
    assert np.array_equal(f1.gradients, f2.gradients)


def test_stationary_stationarity_two_base_points():
    rho = CubeLebesgue(1.0, 1)
    lag = 0.3
    win1 = GridWindow.make(np.array([0.0]), np.array([lag]), (2,))
    win2 = GridWindow.make(np.array([5.2]), np.array([lag]), (2,))
    n = 4000
    p1 = np.empty(n)
    p2 = np.empty(n)
    for s in range(n):
        f1 = sample_stationary(rho, win1, n_modes=64, seed=31,
                               sample_index=s, check=False)
        f2 = sample_stationary(rho, win2, n_modes=64, seed=631,
                               sample_index=s, check=False)
        p1[s] = f1.values[0] * f1.values[1]
        p2[s] = f2.values[0] * f2.values[1]
    se = math.sqrt(p1.var() / n + p2.var() / n)
    assert abs(p1.mean() - p2.mean()) < 3.5 * se


def test_value_gradient_independence_at_a_point():
    rho = SphereSurface(1.0, 2)
    win = GridWindow.make(np.zeros(2), np.ones(2), (2, 2))
    n = 10000
    v = np.empty(n)
    g = np.empty((n, 2))
    for s in range(n):
        f = sample_stationary(rho, win, n_modes=32, seed=44, sample_index=s,
                              check=False)
        v[s] = f.values[0, 0]
        g[s] = f.gradients[:, 0, 0]
    for a in range(2):
        cov = np.mean(v * g[:, a])
        se = np.std(v * g[:, a], ddof=1) / math.sqrt(n)
        assert abs(cov) < 4 * se


# ---------------------------------------------------------------------------
# trigonometric ensemble


def test_trig_kernel_diagonal_is_one():
    spec = Trigonometric(7, 2)
    x = np.array([0.3, 0.8])
    assert exact_kernel(spec, x, x) == pytest.approx(1.0)


def test_trig_kernel_dirichlet_zero():
    spec = Trigonometric(1, 1)
    assert exact_kernel(spec, np.array([1.0 / 3]), np.array([0.0])) == \
        pytest.approx(0.0, abs=1e-14)


def test_trig_empirical_covariance():
    n_deg = 6
    lag_idx = 1
    n = 10000
    prods = np.empty(n)
    spacing = None
    for s in range(n):
        f = sample_trigonometric(n_deg, 1, grid_step=1.0 / (2 * n_deg + 1),
                                 seed=17, sample_index=s, scaled=False)
        prods[s] = f.values[0] * f.values[lag_idx]
        spacing = f.window.spacing[0]
    # the sampler snaps the grid to at least 2n+2 points; compare at the
    # realized one-cell lag (close to 1/(2n+1))
    exact = exact_kernel(Trigonometric(n_deg, 1),
                         np.array([lag_idx * spacing]), np.array([0.0]))
    se = prods.std(ddof=1) / math.sqrt(n)
    assert abs(prods.mean() - exact) < 3 * se


def test_trig_variance_normalized_over_grid():
    f = sample_trigonometric(16, 2, grid_step=0.1, seed=2)
    assert abs(f.values.var() - 1.0) < 0.1


def test_trig_determinism_independent_of_grid():
    # same draw evaluated on two grids agrees at shared points
    f1 = sample_trigonometric(8, 1, grid_step=0.1, seed=5)
    f2 = sample_trigonometric(8, 1, grid_step=0.05, seed=5)
    assert np.allclose(f1.values, f2.values[::2], atol=1e-10)


# ---------------------------------------------------------------------------
# Kostlan ensemble


def test_kostlan_kernel_values():
    spec = Kostlan(5)
    x = np.array([0.0, 0.0, 1.0])
    y = np.array([1.0, 0.0, 0.0])
    assert exact_kernel(spec, x, x) == pytest.approx(1.0)
    assert exact_kernel(spec, x, y) == pytest.approx(0.0)


def test_kostlan_empirical_covariance_on_sphere():
    n_deg = 50
    theta = 0.1
    pts = np.array([[0.0, 0.0, 1.0],
                    [math.sin(theta), 0.0, math.cos(theta)]])
    # evaluate via the chart sampler machinery at two chart points
    from nodal.ensembles import kostlan_coefficients, _eval_homogeneous
    n = 10000
    prods = np.empty(n)
    for s in range(n):
        rows = kostlan_coefficients(n_deg, seed=8, sample_index=s)
        vals = _eval_homogeneous(rows, n_deg, pts)
        prods[s] = vals[0] * vals[1]
    exact = math.cos(theta) ** n_deg
    se = prods.std(ddof=1) / math.sqrt(n)
    assert abs(prods.mean() - exact) < 3 * se


def test_kostlan_sphere_sample_matches_direct_evaluation():
    n_deg = 12
    sample = sample_kostlan_sphere(n_deg, seed=3, with_gradient=False)
    from nodal.ensembles import kostlan_coefficients, _eval_homogeneous
    rows = kostlan_coefficients(n_deg, seed=3, sample_index=0)
    mesh = sample.mesh
    x, y, z = mesh.face_centers_xyz()
    pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    direct = _eval_homogeneous(rows, n_deg, pts).reshape(x.shape)
    assert np.allclose(sample.values, direct, rtol=1e-9, atol=1e-12)


def test_kostlan_chart_budget_guard():
    win = GridWindow.box(np.zeros(2), 3.0, 0.05)
    with pytest.raises(ValueError):
        sample_kostlan_chart(300, win, seed=0, budget=10_000)


def test_kostlan_chart_leaves_hemisphere():
    win = GridWindow.box(np.zeros(2), 30.0, 1.0)
    with pytest.raises(ValueError):
        sample_kostlan_chart(4, win, seed=0)


# ---------------------------------------------------------------------------
# scaled kernels and convergence


def test_scaled_kernel_trig_diagonal():
    spec = Trigonometric(12, 2)
    u = np.array([0.7, -0.4])
    assert scaled_kernel(spec, np.zeros(2), u, u) == pytest.approx(1.0)


def test_scaled_kernel_kostlan_gaussian_limit():
    spec = Kostlan(400)
    val = scaled_kernel(spec, np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))
    # independent numeric evaluation of the chart dot power
    L = math.sqrt(400)
    p = np.array([1.0 / L, 0.0, math.sqrt(1 - 1.0 / L ** 2)])
    direct = p[2] ** 400
    assert val == pytest.approx(direct, rel=1e-12)
    assert abs(val - math.exp(-0.5)) < 0.01


def test_scaled_kernel_trig_sinc_limit():
    spec = Trigonometric(50, 1)
    val = scaled_kernel(spec, np.zeros(1), np.array([0.5]), np.array([0.0]))
    assert abs(val - 0.0) < 0.02


def test_kernel_convergence_trig():
    rep = kernel_convergence_report("trigonometric", 2, [10, 40, 160])
    assert rep.strictly_decreasing()
    assert rep.sup_errors[-1] < 0.02


def test_kernel_convergence_kostlan():
    rep = kernel_convergence_report("kostlan", 2, [100, 400, 1600])
    assert rep.strictly_decreasing()
    assert rep.sup_errors[-1] < 0.02


def test_kernel_convergence_zero_at_origin():
    for kind in ("trigonometric", "kostlan"):
        rep = kernel_convergence_report(kind, 2, [25], probe_extent=0.0,
                                        step=1.0)
        assert rep.sup_errors[0] < 1e-9


# ---------------------------------------------------------------------------
# controllability


def test_controllability_order_zero_is_one():
    assert controllability_entry(Trigonometric(9, 2), [0, 0]) == 1.0
    assert controllability_entry(Kostlan(9), [0, 0]) == 1.0


def test_controllability_trig_first_order_limit():
    vals = [controllability_entry(Trigonometric(n, 1), [1]) for n in
            (50, 200, 800)]
    target = (2 * math.pi) ** 2 / 3.0
    assert abs(vals[-1] - target) < 0.2

    # finite-difference oracle on the exact kernel at n = 50
    spec = Trigonometric(50, 1)
    h = 1e-5

    def K(x, y):
        return exact_kernel(spec, np.array([x]), np.array([y]))

    fd = (K(h, h) - K(h, -h) - K(-h, h) + K(-h, -h)) / (4 * h * h)
    assert controllability_entry(spec, [1]) == \
        pytest.approx(fd / spec.L ** 2, rel=1e-4)


def test_controllability_kostlan_first_order_limit():
    vals = [controllability_entry(Kostlan(n), [1, 0]) for n in
            (16, 64, 256)]
    assert vals[-1] == pytest.approx(1.0, abs=1e-9)

    # finite differences on the unscaled chart kernel at the pole
    spec = Kostlan(64)
    h = 1e-5

    def K(u1, v1):
        return scaled_kernel(spec, np.zeros(2), np.array([u1, 0.0]),
                             np.array([v1, 0.0]), L=1.0)

    fd = (K(h, h) - K(h, -h) - K(-h, h) + K(-h, -h)) / (4 * h * h)
    assert controllability_entry(spec, [1, 0]) == \
        pytest.approx(fd / spec.L ** 2, rel=1e-3)


def test_gradient_covariance_bounded_away_from_zero():
    # trig: C converges to (2 pi)^2/3 I; running min above half the limit
    limitv = (2 * math.pi) ** 2 / 3.0
    eigs = [np.linalg.eigvalsh(gradient_covariance(Trigonometric(n, 2)))[0]
            for n in (8, 16, 32, 64, 128)]
    assert min(eigs) > limitv / 2
    # Kostlan: C -> identity at the pole
    eigs_k = [np.linalg.eigvalsh(gradient_covariance(Kostlan(n)))[0]
              for n in (8, 16, 32, 64, 128)]
    assert min(eigs_k) > 0.5


def test_limit_measures():
    assert isinstance(limit_measure(Trigonometric(5, 2)), CubeLebesgue)
    g = limit_measure(Kostlan(5))
    assert isinstance(g, GaussianDensity)
    # Bargmann-Fock kernel exp(-|u|^2/2)
    assert g.kernel(np.array([1.0, 0.0])) == pytest.approx(math.exp(-0.5))
    rho = SphereSurface(1.0, 2)
    assert limit_measure(Stationary(rho)) is rho


def test_rng_streams_are_role_separated():
    a = rng_stream(7, 3, STREAM_FREQ).normal(size=4)
    b = rng_stream(7, 3, STREAM_COEF).normal(size=4)
    assert not np.allclose(a, b)
    c = rng_stream(7, 3, STREAM_FREQ).normal(size=4)
    assert np.array_equal(a, c)
