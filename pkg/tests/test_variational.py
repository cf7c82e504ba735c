"""Obstacle-constrained minimization oracle and extremality diagnostics."""

import numpy as np
import pytest

from dyson_ldp import (
    EmptySegmentError,
    FixedTimeQuery,
    K_theta,
    ScalarPath,
    VarProblem,
    dbr_constant,
    discretized_objective,
    el_residual,
    minimize_path,
    objective_gradient,
    optimal_path,
    uniform_grid,
)

GRID = uniform_grid(800)


def random_feasible(rng, grid, theta, x):
    phi = theta + (x - theta) * grid
    phi = phi + sum(rng.uniform(-0.2, 0.5) * np.sin(np.pi * k * grid) ** 2 for k in range(1, 4))
    phi = np.maximum(phi, 2 * np.sqrt(grid) + 0.05)
    phi[0], phi[-1] = theta, x
    return phi


class TestMinimize:
    def test_trivial_wall_target(self):
        # the discrete action of the exact wall path is O(dt), not zero
        res = minimize_path(VarProblem(theta=0.0, x=2.0, grid=GRID))
        assert res.objective <= 1e-4
        np.testing.assert_allclose(res.path.values, 2 * np.sqrt(GRID), atol=5e-3)

    def test_linear_case(self):
        res = minimize_path(VarProblem(theta=1.0, x=3.0, grid=GRID), restarts=1)
        assert res.objective == pytest.approx(0.96463, abs=1e-2)

    def test_wall_branch_case(self):
        res = minimize_path(VarProblem(theta=0.5, x=2.2, grid=GRID), restarts=1)
        assert res.objective == pytest.approx(0.12103, abs=1e-2)

    def test_obstacle_respected(self):
        res = minimize_path(VarProblem(theta=0.0, x=2.5, grid=GRID), restarts=2, seed=3)
        assert np.all(res.path.values >= 2 * np.sqrt(GRID) - 1e-12)

    def test_monotone_objective_trace(self):
        res = minimize_path(
            VarProblem(theta=0.5, x=2.6, grid=uniform_grid(150)), record_trace=True
        )
        objs = [row[1] for row in res.trace]
        assert np.all(np.diff(objs) <= 1e-14)

    def test_oracle_brackets_closed_form(self):
        # discretization keeps the minimized action within a one-sided band of K
        for theta, x in ((0.0, 3.0), (1.0, 2.5)):
            res = minimize_path(VarProblem(theta=theta, x=x, grid=GRID), restarts=3, seed=9)
            k = K_theta(FixedTimeQuery(theta, x))
            assert res.objective >= k - 5e-3
            assert res.objective <= k + 2e-2

    def test_restarts_deterministic(self):
        a = minimize_path(VarProblem(theta=0.5, x=2.4, grid=uniform_grid(200)), restarts=3, seed=1)
        b = minimize_path(VarProblem(theta=0.5, x=2.4, grid=uniform_grid(200)), restarts=3, seed=1)
        assert a.objective == b.objective
        assert np.array_equal(a.path.values, b.path.values)


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(77)
        grid = uniform_grid(90)
        for _ in range(5):
            theta, x = rng.uniform(0.3, 1.5), rng.uniform(2.2, 3.2)
            p = VarProblem(theta=theta, x=x, grid=grid)
            phi = random_feasible(rng, grid, theta, x)
            g = objective_gradient(phi, p)
            eps = 1e-6
            for j in rng.integers(1, grid.size - 1, size=12):
                up, dn = phi.copy(), phi.copy()
                up[j] += eps
                dn[j] -= eps
                fd = (discretized_objective(up, p) - discretized_objective(dn, p)) / (2 * eps)
                assert g[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_endpoints_pinned(self):
        p = VarProblem(theta=1.0, x=3.0, grid=uniform_grid(50))
        phi = np.linspace(1.0, 3.0, 51)
        g = objective_gradient(phi, p)
        assert g[0] == 0.0 and g[-1] == 0.0


class TestELResidual:
    def test_linear_path_extremal(self):
        grid = uniform_grid(2000)
        phi = ScalarPath(grid, 1.0 + 2.0 * grid, np.full(grid.size, 2.0))
        r = el_residual(phi)
        assert np.nanmax(np.abs(r.values)) <= 1e-3

    def test_wall_path_empty(self):
        grid = uniform_grid(500)
        r = el_residual(ScalarPath(grid, 2 * np.sqrt(grid)))
        assert len(r) == 0

    def test_perturbed_path_nonzero(self):
        grid = uniform_grid(2000)
        phi = ScalarPath(grid, 1.0 + 2.0 * grid + 0.1 * np.sin(np.pi * grid))
        r = el_residual(phi)
        assert np.nanmax(np.abs(r.values)) >= 0.1

    def test_active_nodes_reported_nan(self):
        grid = uniform_grid(1000)
        phi = optimal_path(FixedTimeQuery(0.0, 2.5), grid)
        r = el_residual(phi)
        active = np.isnan(r.values)
        # wall segment [0, 0.25] active, departure arc clean
        assert active[: np.searchsorted(r.t, 0.2)].all()
        assert np.nanmax(np.abs(r.values)) <= 1e-2


class TestDBR:
    def test_linear_path_constant(self):
        grid = uniform_grid(2000)
        phi = ScalarPath(grid, 1.0 + 2.0 * grid, np.full(grid.size, 2.0))
        _, dev = dbr_constant(phi)
        assert dev <= 1e-3

    def test_wall_path_raises(self):
        grid = uniform_grid(500)
        with pytest.raises(EmptySegmentError):
            dbr_constant(ScalarPath(grid, 2 * np.sqrt(grid)))

    def test_non_extremal_deviates(self):
        grid = uniform_grid(2000)
        phi = ScalarPath(grid, 1.0 + 2.0 * grid + 0.1 * np.sin(np.pi * grid))
        _, dev = dbr_constant(phi)
        assert dev >= 1e-2
