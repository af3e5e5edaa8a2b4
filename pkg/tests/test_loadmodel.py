import numpy as np
import pytest

import ifcalc
import loadmodel as lm
import scenario as scn
from errors import DimensionError


def unit_scenario(gains, demand, noise=1.0, power=1.0, resource_units=1, cap=None):
    """Scenario with B/RU = 1 so efficiencies are plain log2(1 + SINR)."""
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    m, n = gains.shape
    return scn.make_scenario(
        [(100.0 * i, 0.0) for i in range(m)], [(10.0 * j, 50.0) for j in range(n)], demand,
        power_per_ru=power, static_energy=1.0, resource_units=resource_units,
        bandwidth_per_ru=1.0, noise_power=noise, spectral_efficiency_cap=cap, gains=gains)


def nearest(scenario):
    return lm.AssignmentMatrix.from_choice(np.argmax(scenario.gains, axis=0), scenario.num_stations)


SYMMETRIC = ((1.0, 0.5), (0.5, 1.0))


class TestAssignmentMatrix:
    def test_columns_must_sum_to_one(self):
        with pytest.raises(ValueError, match="test point 1"):
            lm.AssignmentMatrix([[1.0, 0.5], [0.0, 0.4]])

    def test_discrete_rejects_fractions(self):
        with pytest.raises(ValueError, match="0 or 1"):
            lm.AssignmentMatrix([[0.5], [0.5]], relaxed=False)

    def test_covering_needs_every_station(self):
        with pytest.raises(ValueError, match="station 1"):
            lm.AssignmentMatrix([[1.0, 1.0], [0.0, 0.0]], covering=True)

    def test_from_choice(self):
        x = lm.AssignmentMatrix.from_choice([1, 0, 1], 3)
        np.testing.assert_array_equal(x.entries, [[0, 1, 0], [1, 0, 1], [0, 0, 0]])
        assert not x.relaxed
        np.testing.assert_array_equal(x.active_stations([1.0, 2.0, 3.0]), [0, 1])

    def test_entries_are_read_only(self):
        x = lm.AssignmentMatrix.uniform(2, 3)
        with pytest.raises(ValueError):
            x.entries[0, 0] = 1.0


class TestSpectralEfficiency:
    def test_unit_sinr_gives_one_bit(self):
        s = unit_scenario([[1.0]], 1.0)
        assert lm.spectral_efficiency(s, 0, 0, [0.0]) == pytest.approx(1.0)

    def test_interference_counts_other_station_load(self):
        s = unit_scenario(SYMMETRIC, 1.0, noise=0.5)
        # received 1, interference 0.5 * 1, noise 0.5 -> SINR 1
        assert lm.spectral_efficiency(s, 0, 0, [0.0, 1.0]) == pytest.approx(1.0)
        assert lm.spectral_efficiency(s, 0, 0, [1.0, 0.0]) == pytest.approx(np.log2(3.0))

    def test_matrix_matches_pointwise(self):
        s = scn.generate_hex_scenario(5, 12, seed=3)
        rho = np.random.default_rng(0).random(5)
        omega = lm.efficiency_matrix(s, rho)
        for i in range(5):
            for j in range(12):
                assert omega[i, j] == pytest.approx(lm.spectral_efficiency(s, i, j, rho), rel=1e-12)

    def test_cap_limits_matrix(self):
        s = unit_scenario(SYMMETRIC, 1.0, noise=1e-3)
        assert lm.efficiency_matrix(s, np.zeros(2), cap=2.0).max() == pytest.approx(2.0)

    def test_wrong_load_length(self):
        s = unit_scenario(SYMMETRIC, 1.0)
        with pytest.raises(DimensionError):
            lm.spectral_efficiency(s, 0, 0, [0.0])


class TestLoadMapping:
    def test_full_load_is_exactly_one(self):
        s = unit_scenario([[1.0]], 1.0)
        mapping = lm.load_limited_mapping(lm.load_mapping(s, nearest(s)))
        result = ifcalc.fixed_point(mapping)
        assert result.fixed_point[0] == pytest.approx(1.0)

    def test_linear_in_demand(self):
        s = scn.generate_hex_scenario(4, 15, seed=1)
        x = nearest(s)
        rho = np.full(x.active_stations(s.demand).size, 0.3)
        single = lm.load_mapping(s, x)(rho)
        double = lm.load_mapping(s.with_demand(2 * s.demand), x)(rho)
        np.testing.assert_allclose(double, 2 * single, rtol=1e-12)

    def test_batch_matches_single(self):
        s = scn.generate_hex_scenario(4, 15, seed=2)
        mapping = lm.load_mapping(s, nearest(s))
        rho = np.random.default_rng(1).random((mapping.dimension, 6))
        batch = mapping(rho)
        for k in range(6):
            np.testing.assert_allclose(batch[:, k], mapping(rho[:, k]), rtol=1e-12)

    def test_symmetric_fixed_point(self):
        s = unit_scenario(SYMMETRIC, 0.3, noise=0.5)
        mapping = lm.load_limited_mapping(lm.load_mapping(s, lm.AssignmentMatrix.from_choice([0, 1], 2)))
        rho = ifcalc.fixed_point(mapping, tolerance=1e-12).fixed_point
        assert rho[0] == pytest.approx(rho[1], abs=1e-12)

    def test_idle_station_in_set_is_rejected(self):
        s = unit_scenario(SYMMETRIC, 1.0)
        with pytest.raises(DimensionError, match="serve no demand"):
            lm.load_mapping(s, lm.AssignmentMatrix.from_choice([0, 0], 2), stations=[0, 1])

    def test_active_stations_attached(self):
        s = unit_scenario([[1.0, 1.0], [0.5, 0.5], [0.2, 2.0]], 1.0)
        mapping = lm.load_mapping(s, lm.AssignmentMatrix.from_choice([0, 2], 3))
        np.testing.assert_array_equal(mapping.stations, [0, 2])
        assert mapping.dimension == 2

    def test_axioms_hold_on_generated_scenarios(self):
        for seed in range(3):
            s = scn.generate_hex_scenario(6, 30, seed=seed)
            report = ifcalc.check_axioms(lm.load_mapping(s, nearest(s)), sample_count=500, seed=seed)
            assert report.ok, [str(v) for v in report.violations[:3]]


class TestCappedLoad:
    def test_cap_raises_load(self):
        s = scn.generate_hex_scenario(4, 20, seed=5)
        x = nearest(s)
        plain = lm.load_mapping(s, x)
        capped = lm.capped_load_mapping(s, x, 2e5)
        rho = np.random.default_rng(2).random((plain.dimension, 20))
        assert np.all(capped(rho) >= plain(rho) * (1 - 1e-12))

    def test_huge_cap_is_inactive(self):
        s = unit_scenario(SYMMETRIC, 1.0, noise=0.5)
        x = lm.AssignmentMatrix.from_choice([0, 1], 2)
        rho = np.array([0.2, 0.7])
        np.testing.assert_allclose(lm.capped_load_mapping(s, x, 1e9)(rho), lm.load_mapping(s, x)(rho))

    def test_tiny_cap_dominates(self):
        s = unit_scenario(SYMMETRIC, 1.0, noise=0.5)
        x = lm.AssignmentMatrix.from_choice([0, 1], 2)
        np.testing.assert_allclose(lm.capped_load_mapping(s, x, 1e-3)(np.array([0.2, 0.7])), 1000.0)

    def test_cap_must_be_positive(self):
        s = unit_scenario(SYMMETRIC, 1.0)
        with pytest.raises(ValueError):
            lm.capped_load_mapping(s, lm.AssignmentMatrix.uniform(2, 2), 0.0)


class TestLoadLimited:
    def test_constant_above_one_is_clamped(self):
        result = ifcalc.fixed_point(lm.load_limited_mapping(ifcalc.constant(2.0, 3)))
        np.testing.assert_allclose(result.fixed_point, 1.0)

    def test_overloaded_station_pins_at_one(self):
        s = unit_scenario([[1.0, 0.1], [0.1, 1.0]], [10.0, 1.0], noise=0.1)
        inner = lm.load_mapping(s, lm.AssignmentMatrix.from_choice([0, 1], 2))
        result = ifcalc.fixed_point(lm.load_limited_mapping(inner), tolerance=1e-12)
        rho = result.fixed_point
        assert rho[0] == pytest.approx(1.0)
        assert rho[1] == pytest.approx(inner(rho)[1], abs=1e-10)
        assert rho[1] < 1.0


class TestFeasibility:
    def test_light_load_is_feasible(self):
        s = unit_scenario([[1.0]], 0.1)
        result = lm.feasibility_check(s, nearest(s))
        assert result.feasible
        assert result.load.values[0] == pytest.approx(0.1)
        assert result.solution.residual <= 1e-8

    def test_heavy_load_is_overloaded(self):
        s = unit_scenario([[1.0]], 2.0)
        result = lm.feasibility_check(s, nearest(s))
        assert not result.feasible
        assert result.overloaded == (0,)
        assert "resource units" in result.reason

    def test_margin_rejects_exactly_full_station(self):
        s = unit_scenario([[1.0]], 1.0)
        assert not lm.feasibility_check(s, nearest(s)).feasible

    def test_two_station_overload(self):
        s = unit_scenario([[1.0, 0.1], [0.1, 1.0]], [10.0, 1.0], noise=0.1)
        result = lm.feasibility_check(s, lm.AssignmentMatrix.from_choice([0, 1], 2))
        assert result.overloaded == (0,)
        assert result.load.overloaded == ()
        assert result.load.max_load == pytest.approx(1.0)

    def test_full_length_load_vector(self):
        s = unit_scenario([[1.0, 1.0], [0.5, 0.5], [0.2, 2.0]], 0.1)
        result = lm.feasibility_check(s, lm.AssignmentMatrix.from_choice([0, 2], 3))
        assert len(result.load) == 3
        assert result.load.values[1] == 0.0

    def test_capped_scenario_uses_cap(self):
        s = unit_scenario([[1.0]], 0.1, noise=1e-3, cap=0.05)
        result = lm.feasibility_check(s, nearest(s))
        assert not result.feasible

    def test_load_grows_with_demand(self):
        s = scn.generate_hex_scenario(5, 25, seed=4)
        x = nearest(s)
        previous = None
        for scale in (1, 5, 20, 60):
            load = lm.feasibility_check(s.with_demand(scale * s.demand), x).load.values
            if previous is not None:
                assert np.all(load >= previous - 1e-9)
            previous = load


class TestCertifiedSolve:
    def test_random_scenarios(self):
        rng = np.random.default_rng(11)
        for trial in range(100):
            m = int(rng.integers(1, 21))
            n = int(rng.integers(m, 4 * m + 5))
            s = scn.generate_hex_scenario(m, n, seed=trial)
            s = s.with_demand(s.demand * rng.uniform(1.0, 200.0))
            mapping = lm.load_limited_mapping(lm.load_mapping(s, nearest(s)))
            result = ifcalc.fixed_point(mapping, tolerance=1e-10, keep_history=True)
            for (lo, hi), (lo_next, hi_next) in zip(result.history, result.history[1:]):
                assert np.all(lo_next >= lo - 1e-12)
                assert np.all(hi_next <= hi + 1e-12)
            assert result.residual <= 1e-8
            for _ in range(5):
                start = rng.random(mapping.dimension)
                other = ifcalc.fixed_point(mapping, tolerance=1e-11, start=start)
                np.testing.assert_allclose(other.fixed_point, result.fixed_point, atol=1e-8)
