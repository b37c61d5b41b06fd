import math
from fractions import Fraction

import numpy as np
import pytest

from asa.physics import (
    G,
    BodyState,
    DegenerateInput,
    NTooLarge,
    enumerate_saw_exact,
    fit_scaling,
    grade_exponent,
    random_walk_chain,
    rw_mean_r2,
    sample_unit_sphere,
    saw_chain_pivot,
    saw_mean_r2,
    simulate_trajectory,
    write_scaling_csv,
    write_scaling_svg,
)
from oracles import saw_r2_by_enumeration, two_body_energy


class TestUnitSphere:
    def test_unit_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            assert abs(np.linalg.norm(sample_unit_sphere(rng)) - 1) < 1e-12

    def test_isotropy_moments(self):
        rng = np.random.default_rng(2)
        draws = np.array([sample_unit_sphere(rng) for _ in range(100_000)])
        assert np.all(np.abs(draws.mean(axis=0)) < 0.01)
        assert np.all(np.abs((draws**2).mean(axis=0) - 1 / 3) < 0.01)


class TestRandomWalk:
    def test_single_step(self):
        rng = np.random.default_rng(3)
        chain = random_walk_chain(1, 2.0, rng)
        assert chain.n_segments == 1
        assert abs(chain.end_to_end_sq() - 4.0) < 1e-12

    def test_mean_r2_is_n(self):
        rng = np.random.default_rng(4)
        mean, se = rw_mean_r2(100, 2000, rng)
        assert abs(mean - 100) < 3 * se

    def test_bond_lengths_fixed(self):
        rng = np.random.default_rng(5)
        chain = random_walk_chain(50, 1.5, rng)
        bonds = np.diff(chain.positions, axis=0)
        assert np.allclose(np.linalg.norm(bonds, axis=1), 1.5)

    def test_seeded_determinism(self):
        a = random_walk_chain(20, 1.0, np.random.default_rng(6))
        b = random_walk_chain(20, 1.0, np.random.default_rng(6))
        assert np.array_equal(a.positions, b.positions)


class TestSawEnumeration:
    def test_n1_exact(self):
        assert enumerate_saw_exact(1) == 1

    def test_n2_exact(self):
        # 30 two-step walks: 6 straight (R^2=4), 24 bent (R^2=2)
        assert enumerate_saw_exact(2) == Fraction(12, 5)

    def test_guard(self):
        with pytest.raises(NTooLarge):
            enumerate_saw_exact(7)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_matches_independent_bfs(self, n):
        mean, count = saw_r2_by_enumeration(n)
        exact = enumerate_saw_exact(n)
        assert abs(float(exact) - mean) < 1e-12


class TestSawPivot:
    def test_n1_always_unit(self):
        rng = np.random.default_rng(7)
        chain = saw_chain_pivot(1, rng, 10)
        assert chain.end_to_end_sq() == 1.0

    def test_sites_distinct(self):
        rng = np.random.default_rng(8)
        chain = saw_chain_pivot(30, rng, 500)
        sites = {tuple(int(c) for c in p) for p in chain.positions}
        assert len(sites) == 31

    def test_bonds_stay_lattice_steps(self):
        rng = np.random.default_rng(9)
        chain = saw_chain_pivot(25, rng, 300)
        bonds = np.diff(chain.positions, axis=0)
        assert np.all(np.abs(bonds).sum(axis=1) == 1)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_enumeration(self, n):
        rng = np.random.default_rng(10 + n)
        mean, se = saw_mean_r2(n, 4000, rng)
        exact = float(enumerate_saw_exact(n))
        assert abs(mean - exact) < 3 * max(se, 1e-9)


class TestFitScaling:
    def test_exact_linear_power_law(self):
        fit = fit_scaling([(10, 40.0), (100, 400.0), (1000, 4000.0)])
        assert abs(fit.nu - 1.0) < 1e-12
        assert abs(fit.r_squared - 1.0) < 1e-12
        assert abs(math.exp(fit.log_prefactor) - 4.0) < 1e-9

    def test_planted_exponent(self):
        points = [(n, n**1.2) for n in (10, 30, 100, 300)]
        fit = fit_scaling(points)
        assert abs(fit.nu - 1.2) < 1e-12

    def test_too_few_points(self):
        with pytest.raises(DegenerateInput):
            fit_scaling([(10, 1.0), (20, 2.0)])

    def test_zero_value(self):
        with pytest.raises(DegenerateInput):
            fit_scaling([(10, 0.0), (20, 2.0), (30, 3.0)])

    def test_duplicate_n(self):
        with pytest.raises(DegenerateInput):
            fit_scaling([(10, 1.0), (10, 2.0), (30, 3.0)])


class TestGradeExponent:
    def test_rw_in_band(self):
        assert grade_exponent(1.02, "RW")

    def test_rw_like_saw_rejected(self):
        assert not grade_exponent(1.0, "SAW")

    def test_saw_in_band(self):
        assert grade_exponent(1.176, "SAW")

    def test_rw_out_of_band(self):
        assert not grade_exponent(1.2, "RW")


class TestTrajectory:
    def _circular_setup(self):
        mass = 5.972e24
        radius = 7.0e6
        speed = math.sqrt(G * mass / radius)
        body = BodyState(mass, np.zeros(3), np.zeros(3))
        probe = BodyState(1.0, np.array([radius, 0.0, 0.0]),
                          np.array([0.0, speed, 0.0]))
        period = 2 * math.pi * radius / speed
        return body, probe, radius, period

    def test_circular_orbit_radius_drift(self):
        body, probe, radius, period = self._circular_setup()
        dt = period / 400
        samples, _ = simulate_trajectory([body], probe, dt, 100 * period)
        radii = np.linalg.norm(samples[:, 1:4], axis=1)
        assert np.max(np.abs(radii - radius)) / radius < 1e-3

    def test_energy_drift(self):
        body, probe, radius, period = self._circular_setup()
        dt = period / 2000
        samples, _ = simulate_trajectory([body], probe, dt, 100 * period)
        mu = G * body.mass
        energies = np.array(
            [two_body_energy(mu, s[1:4], s[4:7]) for s in samples[:: 1000]]
        )
        e0 = two_body_energy(mu, probe.position, probe.velocity)
        assert np.max(np.abs((energies - e0) / e0)) < 1e-6

    def test_single_step_inward(self):
        body = BodyState(5.972e24, np.zeros(3), np.zeros(3))
        probe = BodyState(1.0, np.array([1.0e8, 0.0, 0.0]), np.zeros(3))
        samples, closest = simulate_trajectory([body], probe, 10.0, 10.0)
        assert samples.shape[0] == 2
        assert samples[1, 1] < 1.0e8  # moved toward the mass
        assert closest[0] == 0
        assert closest[1] == pytest.approx(np.linalg.norm(samples[1, 1:4]))

    def test_coincident_bodies_rejected(self):
        b = BodyState(1e20, np.zeros(3), np.zeros(3))
        probe = BodyState(1.0, np.array([1e7, 0, 0]), np.zeros(3))
        with pytest.raises(ValueError):
            simulate_trajectory([b, b], probe, 1.0, 10.0)


class TestOutputs:
    def test_csv(self, tmp_path):
        path = tmp_path / "scaling.csv"
        write_scaling_csv([(10, 10.1, 0.3), (100, 99.0, 2.0)], path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "N,mean_r2,stderr"
        assert len(lines) == 3

    def test_svg_self_contained(self, tmp_path):
        fit = fit_scaling([(10, 40.0), (100, 400.0), (1000, 4000.0)])
        path = tmp_path / "fit.svg"
        write_scaling_svg([(10, 40.0), (100, 400.0), (1000, 4000.0)], fit, path)
        text = path.read_text()
        assert text.startswith("<svg")
        assert "circle" in text and "</svg>" in text
