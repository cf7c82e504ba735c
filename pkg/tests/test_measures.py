"""Semicircle law, empirical measures, and the Stieltjes drift."""

import numpy as np
import pytest
from scipy import integrate

from dyson_ldp import (
    DomainError,
    EmpiricalMeasure,
    InvalidParameterError,
    NoDensityError,
    SemicircleLaw,
    SimConfig,
    emp_drift,
    leave_top_out,
    sc_density,
    sc_drift,
    simulate_matrix,
    uniform_grid,
    w1_distance,
)


def quad_sc_drift(x, t):
    """Independent oracle: Cauchy integral of the semicircle density."""
    edge = 2 * np.sqrt(t)
    val, _ = integrate.quad(
        lambda y: sc_density(t, y) / (x - y), -edge, edge, points=[-edge, edge], limit=200
    )
    return val


class TestScDensity:
    def test_center_value(self):
        assert sc_density(1.0, 0.0) == pytest.approx(1 / np.pi, abs=1e-15)

    def test_outside_support(self):
        assert sc_density(1.0, 2.5) == 0.0
        assert sc_density(0.25, -1.001) == 0.0

    def test_total_mass_by_quadrature(self):
        for t in (0.3, 1.0, 2.5):
            edge = 2 * np.sqrt(t)
            mass, _ = integrate.quad(
                lambda x: sc_density(t, x), -edge, edge, points=[-edge, edge], limit=200
            )
            assert mass == pytest.approx(1.0, abs=1e-8)

    def test_errors(self):
        with pytest.raises(InvalidParameterError):
            sc_density(-1.0, 0.0)
        with pytest.raises(NoDensityError):
            sc_density(0.0, 0.0)


class TestScDrift:
    def test_edge_value(self):
        assert sc_drift(2.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_off_edge_value(self):
        assert sc_drift(2.5, 1.0) == pytest.approx(0.5, abs=1e-12)
        assert sc_drift(2.5, 1.0) == pytest.approx(quad_sc_drift(2.5, 1.0), abs=1e-7)

    def test_scaling_property(self):
        for c in (1.0, 1.3, 2.0):
            for t in (0.25, 1.0, 3.0):
                lhs = sc_drift(2 * c * np.sqrt(t), t) * np.sqrt(t)
                assert lhs == pytest.approx(sc_drift(2 * c, 1.0), rel=1e-12)

    def test_inside_support_rejected(self):
        with pytest.raises(DomainError):
            sc_drift(1.9, 1.0)
        with pytest.raises(InvalidParameterError):
            sc_drift(1.0, 0.0)

    def test_matches_quadrature_on_grid(self):
        for x in np.linspace(2 + 1e-3, 10, 25):
            assert sc_drift(x, 1.0) == pytest.approx(quad_sc_drift(x, 1.0), abs=1e-6)

    def test_strictly_decreasing(self):
        for t in (0.5, 1.0):
            xs = np.linspace(2 * np.sqrt(t), 2 * np.sqrt(t) + 8, 200)
            vals = [sc_drift(x, t) for x in xs]
            assert np.all(np.diff(vals) < 0)
        assert 0 < sc_drift(50.0, 1.0) < sc_drift(2.0, 1.0) <= 1.0


class TestEmpDrift:
    def test_single_atom(self):
        assert emp_drift(1.0, EmpiricalMeasure.from_values([0.0])) == 1.0

    def test_two_atoms(self):
        mu = EmpiricalMeasure.from_values([-1.0, 1.0])
        assert emp_drift(2.0, mu) == pytest.approx(2 / 3, abs=1e-15)

    def test_atom_collision_is_infinite(self):
        assert emp_drift(0.0, EmpiricalMeasure.from_values([0.0])) == np.inf

    def test_one_sided(self):
        # atoms above the evaluation point do not contribute
        mu = EmpiricalMeasure.from_values([-1.0, 5.0])
        assert emp_drift(0.0, mu) == pytest.approx(0.5, abs=1e-15)

    def test_decreasing_right_of_top_atom(self):
        rng = np.random.default_rng(2)
        mu = EmpiricalMeasure.from_values(rng.normal(size=12))
        xs = np.linspace(mu.atoms[0] + 1e-6, mu.atoms[0] + 5, 100)
        vals = [emp_drift(x, mu) for x in xs]
        assert np.all(np.diff(vals) < 0)


class TestLeaveTopOut:
    def test_basic(self):
        mu = EmpiricalMeasure.from_values([3.0, 1.0, 0.0])
        out = leave_top_out(mu, 1)
        assert out.atoms.tolist() == [1.0, 0.0]
        assert out.weight == 0.5

    def test_identity(self):
        mu = EmpiricalMeasure.from_values([3.0, 1.0])
        assert leave_top_out(mu, 0) is mu

    def test_invalid_j(self):
        mu = EmpiricalMeasure.from_values([1.0, 0.0])
        with pytest.raises(InvalidParameterError):
            leave_top_out(mu, 2)

    def test_w1_bound(self):
        rng = np.random.default_rng(7)
        for n in (20, 50, 200):
            atoms = np.clip(rng.normal(size=n), -2, 2)
            mu = EmpiricalMeasure.from_values(atoms)
            for j in (1, 2, 5):
                d = w1_distance(leave_top_out(mu, j), mu)
                assert d <= 4.0 * j / n + 1e-12


class TestW1:
    def test_identity(self):
        mu = EmpiricalMeasure.from_values([0.3, -1.2, 2.0])
        assert w1_distance(mu, mu) == 0.0

    def test_point_masses(self):
        a = EmpiricalMeasure.from_values([0.0])
        b = EmpiricalMeasure.from_values([1.0])
        assert w1_distance(a, b) == pytest.approx(1.0, abs=1e-15)

    def test_point_mass_reference(self):
        mu = EmpiricalMeasure.from_values([-1.0, 3.0])
        assert w1_distance(mu, SemicircleLaw(0.0)) == pytest.approx(2.0, abs=1e-15)

    def test_translation(self):
        rng = np.random.default_rng(3)
        vals = rng.normal(size=30)
        mu = EmpiricalMeasure.from_values(vals)
        nu = EmpiricalMeasure.from_values(vals + 0.7)
        assert w1_distance(mu, nu) == pytest.approx(0.7, abs=1e-12)

    def test_gue_spectrum_close_to_semicircle(self):
        cfg = SimConfig(n=200, theta=0.0, grid=uniform_grid(1), seed=19, mode="matrix")
        sc = SemicircleLaw(1.0)
        for r in range(3):
            spec = EmpiricalMeasure(simulate_matrix(cfg, r).values[-1].copy())
            assert w1_distance(spec, sc) <= 0.05

    def test_semicircle_cdf_sanity(self):
        sc = SemicircleLaw(1.0)
        assert sc.cdf(0.0) == pytest.approx(0.5, abs=1e-12)
        assert sc.cdf(-2.0) == 0.0
        assert sc.cdf(2.0) == 1.0
        # CDF matches integrated density
        val, _ = integrate.quad(lambda x: sc_density(1.0, x), -2, 0.7)
        assert sc.cdf(0.7) == pytest.approx(val, abs=1e-9)
