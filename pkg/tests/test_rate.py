"""Path-space rate functional and its ingredients."""

import numpy as np
import pytest
from scipy import integrate

from dyson_ldp import (
    SEMICIRCLE,
    EmpiricalMeasure,
    F_functional,
    FixedTimeQuery,
    G_functional,
    InvalidParameterError,
    RateParams,
    ScalarPath,
    WallViolationError,
    closed_form_linear_rate,
    k_phi,
    lln_path,
    optimal_path,
    rate_I,
    sc_density,
    sup_J_lower,
    t0_of,
    uniform_grid,
    x_transform,
)

GRID = uniform_grid(2000)
LINEAR_RATE = 0.9646273330056354  # cost of the straight path 1 + 2t, two closed forms


def linear_path(theta=1.0, slope=2.0, grid=GRID):
    return ScalarPath(grid, theta + slope * grid, np.full(grid.size, slope))


class TestLLNPath:
    def test_zero_spike(self):
        f = lln_path(0.0, GRID)
        assert f.at(0.25) == pytest.approx(1.0, abs=1e-12)

    def test_spike_branch(self):
        f = lln_path(1.0, GRID)
        assert f.at(0.25) == pytest.approx(1.25, abs=1e-12)

    def test_edge_branch(self):
        f = lln_path(0.5, GRID)
        assert f.at(0.5) == pytest.approx(2 * np.sqrt(0.5), abs=1e-9)

    def test_derivative_continuous_at_junction(self):
        f = lln_path(0.5, GRID)
        j = np.searchsorted(GRID, 0.25)
        assert f.derivative[j - 1] == pytest.approx(f.derivative[j + 1], rel=1e-2)


class TestKPhi:
    def test_lln_paths_have_zero_excess(self):
        for theta in (0.5, 1.0, 2.0):
            k = k_phi(lln_path(theta, GRID), theta)
            assert np.max(np.abs(k.values)) < 1e-7

    def test_wall_path_zero(self):
        # pointwise cancellation of sqrt(phi^2 - 4t) is O(sqrt(eps)/sqrt(t));
        # the integrated rate is held to 1e-10 separately
        k = k_phi(lln_path(0.0, GRID), 0.0)
        assert np.max(np.abs(k.values)) < 1e-6

    def test_linear_value_at_one(self):
        k = k_phi(linear_path(), 1.0)
        golden = 2.0 - 0.5 * (3.0 - np.sqrt(5.0))
        assert k.values[-1] == pytest.approx(golden, abs=1e-12)
        assert k.values[-1] == pytest.approx(1.618034, abs=1e-6)

    def test_linear_matches_quadrature_drift(self):
        # cross-check b(phi(s), sigma_s) against the Cauchy integral
        phi = linear_path()
        k = k_phi(phi, 1.0)
        for idx in (500, 1000, 1999):
            s, v = GRID[idx], phi.values[idx]
            edge = 2 * np.sqrt(s)
            b_quad, _ = integrate.quad(
                lambda y: sc_density(s, y) / (v - y), -edge, edge, points=[-edge, edge], limit=200
            )
            assert 2.0 - k.values[idx] == pytest.approx(b_quad, abs=1e-7)

    def test_wall_violation(self):
        bad = ScalarPath(GRID, np.maximum(2 * np.sqrt(GRID) - 0.2, 0.0))
        with pytest.raises(WallViolationError):
            k_phi(bad, 0.0)


class TestXTransform:
    def test_wall_maps_to_sqrt(self):
        x = x_transform(lln_path(0.0, GRID))
        np.testing.assert_allclose(x.values, np.sqrt(GRID), atol=1e-7)

    def test_lln_spike_is_constant_before_junction(self):
        theta = 0.8
        x = x_transform(lln_path(theta, GRID))
        before = GRID <= theta**2 - 1e-3
        np.testing.assert_allclose(x.values[before], theta, atol=1e-9)

    def test_round_trip_random_admissible(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            margin = rng.uniform(0.0, 1.0)
            bump = rng.uniform(0, 0.5) * np.sin(np.pi * rng.integers(1, 4) * GRID) ** 2
            phi = ScalarPath(GRID, 2 * np.sqrt(GRID) + margin + bump)
            x = x_transform(phi)
            with np.errstate(invalid="ignore"):
                back = x.values + GRID / x.values
            err = np.max(np.abs(back[1:] - phi.values[1:]))
            assert err <= 1e-12


class TestRateI:
    def test_zero_on_lln(self):
        for theta in (0.0, 0.5, 1.0, 2.0):
            assert rate_I(lln_path(theta, GRID), RateParams(theta)) <= 1e-10

    def test_linear_value(self):
        val = rate_I(linear_path(), RateParams(1.0))
        assert val == pytest.approx(LINEAR_RATE, abs=2e-8)
        assert val == pytest.approx(closed_form_linear_rate(1.0, 3.0), abs=2e-8)

    def test_wall_dip_is_infinite(self):
        # value 0.5 at t = 0.5 sits below the edge 2 sqrt(0.5)
        phi = ScalarPath(GRID, np.where(GRID < 0.5, 2 * np.sqrt(GRID) + 0.5, 0.5))
        assert rate_I(phi, RateParams(0.5)) == np.inf

    def test_endpoint_mismatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            rate_I(linear_path(theta=1.0), RateParams(2.0))

    def test_beta1_is_half(self):
        phi = linear_path()
        assert rate_I(phi, RateParams(1.0, beta=1)) == pytest.approx(
            0.5 * rate_I(phi, RateParams(1.0, beta=2)), rel=1e-14
        )


class TestFunctionals:
    def test_zero_test_function(self):
        phi = linear_path()
        h = ScalarPath(GRID, np.zeros_like(GRID), np.zeros_like(GRID))
        assert G_functional(phi, SEMICIRCLE, h) == 0.0
        assert F_functional(phi, SEMICIRCLE, h) == 0.0

    def test_linearity_in_h(self):
        phi = linear_path()
        h = ScalarPath(GRID, np.sin(np.pi * GRID), np.pi * np.cos(np.pi * GRID))
        lam = 2.75
        lh = ScalarPath(GRID, lam * h.values, lam * h.derivative)
        assert G_functional(phi, SEMICIRCLE, lh) == pytest.approx(
            lam * G_functional(phi, SEMICIRCLE, h), rel=1e-10
        )

    def test_parts_identity_on_lln(self):
        # G written with boundary terms equals int h (phi' - b) = 0 on the limit path
        phi = lln_path(1.0, GRID)
        h = ScalarPath(GRID, GRID.copy(), np.ones_like(GRID))
        assert abs(G_functional(phi, SEMICIRCLE, h)) < 1e-6

    def test_f_at_k_phi_equals_rate(self):
        phi = linear_path()
        kv = k_phi(phi, 1.0)
        h = ScalarPath(GRID, kv.values)
        assert F_functional(phi, SEMICIRCLE, h) == pytest.approx(
            rate_I(phi, RateParams(1.0)), abs=1e-5
        )

    def test_f_below_rate_for_random_h(self):
        rng = np.random.default_rng(23)
        phi = linear_path()
        bound = rate_I(phi, RateParams(1.0))
        for _ in range(10):
            c = rng.normal(size=3)
            vals = c[0] + c[1] * GRID + c[2] * np.sin(2 * np.pi * GRID)
            dv = c[1] + 2 * np.pi * c[2] * np.cos(2 * np.pi * GRID)
            h = ScalarPath(GRID, vals, dv)
            assert F_functional(phi, SEMICIRCLE, h) <= bound + 1e-4

    def test_empirical_measure_path(self):
        # constant empirical bulk: b is the plain one-sided sum
        grid = uniform_grid(50)
        phi = ScalarPath(grid, np.full(grid.size, 3.0), np.zeros(grid.size))
        mu = [EmpiricalMeasure.from_values([-1.0, 1.0])] * grid.size
        h = ScalarPath(grid, np.ones(grid.size), np.zeros(grid.size))
        b = 0.5 * (1 / (3 - 1) + 1 / (3 + 1))
        assert G_functional(phi, mu, h) == pytest.approx(-b, abs=1e-12)


class TestSupJLower:
    def test_zero_on_lln(self):
        assert sup_J_lower(lln_path(1.0, GRID), 16) <= 1e-6

    def test_monotone_in_basis_size(self):
        phi = linear_path()
        vals = [sup_J_lower(phi, m) for m in (1, 2, 4, 8, 16, 32, 64)]
        assert np.all(np.diff(vals) >= -1e-12)

    def test_linear_approaches_rate(self):
        val = sup_J_lower(linear_path(), 64)
        assert val == pytest.approx(LINEAR_RATE, rel=0.02)

    def test_sandwich_with_quadrature_allowance(self):
        paths = [
            linear_path(),
            linear_path(theta=0.5, slope=2.5),
            lln_path(1.0, GRID),
            ScalarPath(GRID, 1.0 + GRID + 0.3 * np.sin(np.pi * GRID)),
            optimal_path(FixedTimeQuery(0.0, 2.5), GRID),
        ]
        thetas = [1.0, 0.5, 1.0, 1.0, 0.0]
        for phi, theta in zip(paths, thetas):
            bound = rate_I(phi, RateParams(theta))
            for m in (4, 16, 64):
                assert sup_J_lower(phi, m) <= bound + 5e-4 * max(1.0, bound)


class TestT0:
    def test_wall_path(self):
        assert t0_of(lln_path(0.0, GRID)) == pytest.approx(1.0)

    def test_optimal_path_departure(self):
        # wall segment of the theta = 0 minimizer ends at the tangent time
        phi = optimal_path(FixedTimeQuery(0.0, 2.5), GRID)
        assert t0_of(phi) == pytest.approx(0.25, abs=1e-3)

    def test_perturbed_after_threshold(self):
        vals = 2 * np.sqrt(GRID) + np.where(GRID > 0.3, (GRID - 0.3) ** 2, 0.0)
        phi = ScalarPath(GRID, vals)
        assert t0_of(phi) == pytest.approx(0.3, abs=2 * (GRID[1] - GRID[0]) + 1e-3)

    def test_requires_zero_start(self):
        with pytest.raises(InvalidParameterError):
            t0_of(linear_path())


class TestEdgeRatioNearZero:
    def test_finite_rate_paths_hug_twice_sqrt(self):
        # phi(t)/sqrt(t) -> 2 for finite-rate zero-spike paths
        for c in (0.5, 1.0):
            vals = 2 * np.sqrt(GRID) + c * GRID
            phi = ScalarPath(GRID, vals)
            assert np.isfinite(rate_I(phi, RateParams(0.0)))
            for t_min in (1e-2, 1e-3):
                ratio = phi.at(t_min) / np.sqrt(t_min)
                assert 2.0 <= ratio <= 2.0 + 1.1 * c * np.sqrt(t_min)
