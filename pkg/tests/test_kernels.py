import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylsampl import (FitFailure, InvalidInputError, OutOfBandError, SpectralMultiplier,
                       TruncationUnsafeError, analytic_basis, candidate_pool,
                       counting_identity_check, gaussian_bound_fit, heat_diag, heat_diagnostics,
                       heat_trace, kernel_diag, kernel_monotonicity_check, make_manifold,
                       mesh_basis, quadrature, spectral_function, spectral_function_bounds)
from weylsampl.kernels import gaussian, heat_kernel, indicator, t_min, zero_multiplier

THETA_1 = 1 + 2 * sum(math.exp(-k * k) for k in range(1, 40))
SPHERE_1 = sum((2 * l + 1) * math.exp(-l * (l + 1)) for l in range(40))


def test_indicator_kernel(circle_basis):
    for x in (0.0, 1.3, 5.0):
        v = kernel_diag(circle_basis, indicator(1), 1, x)
        assert v.value == pytest.approx(3 / (2 * math.pi), abs=1e-14)
        assert v.tail_bound == 0


def test_zero_multiplier(circle_basis):
    assert kernel_diag(circle_basis, zero_multiplier(), 0.5, 1.0).value == 0


def test_gaussian_multiplier_is_heat(circle_basis):
    for t in (0.5, 1.0, 2.0):
        xs = np.linspace(0, 6, 5)
        a = kernel_diag(circle_basis, gaussian(), t, xs).value
        np.testing.assert_allclose(a, heat_diag(circle_basis, t * t, xs), rtol=1e-12)


def test_kernel_refuses_uncertified_tail(circle_basis):
    with pytest.raises(TruncationUnsafeError):
        kernel_diag(circle_basis, SpectralMultiplier(lambda x: np.ones_like(x)), 1, 0.0)
    with pytest.raises(TruncationUnsafeError):
        kernel_diag(analytic_basis(circle_basis.manifold, 4), gaussian(), 0.1, 0.0)
    with pytest.raises(InvalidInputError):
        kernel_diag(circle_basis, gaussian(), 0, 0.0)


def test_heat_diag_examples(circle_basis, sphere_basis):
    assert heat_diag(circle_basis, 1, 0.7) == pytest.approx(THETA_1 / (2 * math.pi), abs=1e-13)
    assert heat_diag(circle_basis, 1, 0.7) == pytest.approx(0.2821239, abs=1e-7)
    assert heat_diag(circle_basis, 50, 0.3) == pytest.approx(1 / (2 * math.pi), abs=1e-12)
    a, b = candidate_pool(sphere_basis.manifold, 2, 8)
    assert heat_diag(sphere_basis, 0.3, a) == pytest.approx(heat_diag(sphere_basis, 0.3, b), abs=1e-10)


def test_heat_below_t_min(sphere_basis):
    with pytest.raises(TruncationUnsafeError):
        heat_diag(sphere_basis, t_min(sphere_basis) / 2, [0, 0, 1])


def test_heat_trace_examples(circle_basis, sphere_basis, torus_basis):
    s, q = heat_trace(circle_basis, 1, quadrature(circle_basis.manifold, 256))
    assert s == pytest.approx(THETA_1, abs=1e-12) and q == pytest.approx(s, rel=1e-6)
    s, q = heat_trace(sphere_basis, 1, quadrature(sphere_basis.manifold, 64))
    assert s == pytest.approx(SPHERE_1, abs=1e-12) and q == pytest.approx(s, rel=1e-6)
    s, q = heat_trace(torus_basis, 0.2, quadrature(torus_basis.manifold, 32))
    assert q == pytest.approx(s, rel=1e-6)
    s, _ = heat_trace(sphere_basis, 200, quadrature(sphere_basis.manifold, 8))
    assert s == pytest.approx(1, abs=1e-12)


@given(st.floats(0.05, 2), st.floats(0.05, 2))
def test_trace_semigroup(sphere_basis, t1, t2):
    lam = sphere_basis.eigenvalues
    s, _ = heat_trace(sphere_basis, t1 + t2, quadrature(sphere_basis.manifold, 4))
    assert s == pytest.approx(np.sum(np.exp(-t1 * lam) * np.exp(-t2 * lam)), rel=1e-12)


def test_heat_diag_positive_and_decreasing(sphere_basis):
    ts = np.geomspace(t_min(sphere_basis), 5, 12)
    x = candidate_pool(sphere_basis.manifold, 3, 1)
    vals = np.array([heat_diag(sphere_basis, t, x) for t in ts])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals, axis=0) < 0)


def test_literal_squared_exponent(circle_basis):
    lit = heat_diag(circle_basis, 1, 0.0, literal=True)
    assert lit == pytest.approx((1 + 2 * sum(math.exp(-k ** 4) for k in range(1, 6))) / (2 * math.pi))


def test_spectral_function_examples(circle_basis, sphere_basis):
    assert spectral_function(sphere_basis, 12, [0, 0, 1]) == pytest.approx(16 / (4 * math.pi))
    assert spectral_function(circle_basis, 0, 2.0) == pytest.approx(1 / (2 * math.pi))
    assert spectral_function(circle_basis, 100, 2.0) == pytest.approx(21 / (2 * math.pi))
    with pytest.raises(OutOfBandError):
        spectral_function(circle_basis, 2e4, 0.0)


def test_spectral_function_jumps_at_eigenvalues(sphere_basis):
    x = [0.6, 0.0, 0.8]
    assert spectral_function(sphere_basis, 11.999, x) == pytest.approx(9 / (4 * math.pi))
    assert spectral_function(sphere_basis, 12, x) == pytest.approx(16 / (4 * math.pi))
    s = np.linspace(0, 100, 200)
    e = [spectral_function(sphere_basis, v, x) for v in s]
    assert np.all(np.diff(e) >= -1e-12)


def test_spectral_function_bounds(circle_basis, sphere_basis):
    m = circle_basis.manifold
    a1, a2 = spectral_function_bounds(circle_basis, m, [16, 100, 400], np.linspace(0, 6, 7))
    vals = [(1 + 2 * math.floor(math.sqrt(s))) * (2 / math.sqrt(s)) / (2 * math.pi) for s in (16, 100, 400)]
    assert a1 == pytest.approx(min(vals)) and a2 == pytest.approx(max(vals))
    s1, s2 = spectral_function_bounds(sphere_basis, sphere_basis.manifold, [12, 110],
                                      candidate_pool(sphere_basis.manifold, 10, 0))
    assert s2 / s1 <= 2
    one = spectral_function_bounds(circle_basis, m, [50], [1.0])
    assert one[0] == one[1]
    lit = spectral_function_bounds(circle_basis, m, [100], [1.0], radius="literal")
    assert lit[0] == pytest.approx(21 / (2 * math.pi) * 0.02)
    with pytest.raises(InvalidInputError):
        spectral_function_bounds(circle_basis, m, [], [1.0])
    with pytest.raises(InvalidInputError):
        spectral_function_bounds(circle_basis, m, [2.0], [1.0])


def test_monotonicity_examples():
    m = make_manifold("circle")
    b = analytic_basis(m, 4000)
    xs = np.linspace(0, 6, 9)
    assert kernel_monotonicity_check(b, indicator(10), gaussian(10, math.e), 1, xs)
    assert kernel_monotonicity_check(b, gaussian(), gaussian(), 1, xs)
    with pytest.raises(InvalidInputError):
        kernel_monotonicity_check(b, gaussian(10, math.e), indicator(10), 1, xs)


@given(st.integers(0, 10 ** 6))
def test_monotonicity_random_pairs(circle_basis, seed):
    rng = np.random.default_rng(seed)
    scale, amp = rng.uniform(0.5, 3), rng.uniform(0.1, 2)
    f1 = gaussian(scale, amp)
    f2 = gaussian(scale, 2 * amp)
    assert kernel_monotonicity_check(circle_basis, f1, f2, rng.uniform(0.5, 2), rng.uniform(0, 6, 5))


def test_gaussian_fit_circle_diagonal():
    m = make_manifold("circle")
    b = analytic_basis(m, 40_000)
    fit = gaussian_bound_fit(b, m, [0.01, 0.1], (np.array([0.0, 2.0]), np.array([0.0, 2.0])))
    assert fit.ok
    assert fit.C1 <= 1 / (2 * math.sqrt(math.pi)) + 1e-9 <= fit.C2 + 2e-9


def test_gaussian_fit_sphere_random_pairs(sphere_basis):
    m = sphere_basis.manifold
    fit = gaussian_bound_fit(sphere_basis, m, [0.02, 0.1],
                             (candidate_pool(m, 200, 1), candidate_pool(m, 200, 2)))
    assert fit.ok and fit.c1 >= fit.c2


def test_gaussian_fit_brackets_diagonal(sphere_basis):
    m = sphere_basis.manifold
    x = candidate_pool(m, 5, 3)
    fit = gaussian_bound_fit(sphere_basis, m, [0.05], (x, x))
    p = heat_diag(sphere_basis, 0.05, x)
    assert np.all(fit.C1 / 0.05 <= p * (1 + 1e-9)) and np.all(p <= fit.C2 / 0.05 * (1 + 1e-9))


def test_gaussian_fit_failure_when_nothing_reliable(sphere_basis):
    m = sphere_basis.manifold
    # antipodal points at small t: p_t is far below its rounding error
    with pytest.raises(FitFailure):
        gaussian_bound_fit(sphere_basis, m, [0.02], (np.array([[0, 0, 1.0]]), np.array([[0, 0, -1.0]])))


def test_heat_kernel_symmetric(sphere_basis):
    m = sphere_basis.manifold
    x, y = candidate_pool(m, 5, 1), candidate_pool(m, 5, 2)
    np.testing.assert_allclose(heat_kernel(sphere_basis, 0.1, x, y), heat_kernel(sphere_basis, 0.1, y, x))


def test_counting_identity(circle_basis, sphere_basis):
    assert counting_identity_check(circle_basis, quadrature(circle_basis.manifold, 256), 100) <= 1e-10
    assert counting_identity_check(circle_basis, quadrature(circle_basis.manifold, 256), 0) <= 1e-14
    assert counting_identity_check(sphere_basis, quadrature(sphere_basis.manifold, 16), 12) <= 1e-9


def test_mesh_heat_trace():
    m = make_manifold("mesh", icosphere=2)
    b = mesh_basis(m, m.n_vertices)
    s, q = heat_trace(b, 1.0, quadrature(m, 1))
    assert q == pytest.approx(s, rel=1e-8)


def test_heat_diagnostics_export(sphere_basis):
    m = sphere_basis.manifold
    x = candidate_pool(m, 3, 0)
    d = heat_diagnostics(sphere_basis, m, [0.5, 0.1], x, quadrature(m, 32), (x, x))
    assert d.t_grid == [0.1, 0.5]
    assert d.trace_spectral[0] > d.trace_spectral[1] > 0
    assert all(v < 1e-12 for v in d.truncation)
    data = json.loads(d.to_json())
    assert data["fit"]["ok"] is True
    lines = d.to_csv().splitlines()
    assert lines[0] == "t,x_id,p_diag,trace_spectral,trace_quadrature"
    assert len(lines) == 1 + 2 * 3
