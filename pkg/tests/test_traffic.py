import math

import numpy as np
import pytest
from scipy import stats

import traffic as tr
from errors import ConfigError, NumericalError


def binomial_exceedance(n, k, p):
    return 1.0 - sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(k, n + 1))


class TestExceedance:
    def test_single_sample(self):
        assert tr.exceedance_probability(1, 1, 0.9) == pytest.approx(0.1)

    def test_maximum_of_two(self):
        assert tr.exceedance_probability(2, 2, 0.9) == pytest.approx(1 - 0.81)

    def test_grows_with_k(self):
        values = [tr.exceedance_probability(20, k, 0.7) for k in range(1, 21)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_log_space_agrees_with_direct_sum(self):
        for k in (50, 85, 90, 95, 100):
            assert tr.exceedance_probability(100, k, 0.9) == pytest.approx(
                binomial_exceedance(100, k, 0.9), rel=1e-9, abs=1e-15)

    @pytest.mark.parametrize("n,k,p", [(0, 1, 0.5), (5, 0, 0.5), (5, 6, 0.5), (5, 2, 1.0), (5, 2, 0.0)])
    def test_rejects_bad_arguments(self, n, k, p):
        with pytest.raises(ValueError):
            tr.exceedance_probability(n, k, p)

    def test_prediction_coverage(self):
        assert tr.prediction_coverage(9, 9) == pytest.approx(0.9)


def _empirical_exceedance(rng, draw, quantile, n, k, trials):
    samples = np.sort(draw(rng, (trials, n)), axis=1)
    return float(np.mean(samples[:, k - 1] > quantile))


DISTRIBUTIONS = {
    "uniform": (lambda rng, size: rng.uniform(size=size), lambda p: p),
    "exponential": (lambda rng, size: rng.exponential(size=size), lambda p: -math.log1p(-p)),
    "lognormal": (lambda rng, size: rng.lognormal(size=size), lambda p: math.exp(stats.norm.ppf(p))),
}

# n above 60 goes through the log-space tail
GRID_ORDERS = {
    10: (5, 7, 8, 9, 10),
    30: (15, 21, 24, 27, 30),
    60: (30, 42, 48, 54, 60),
    80: (40, 56, 64, 72, 80),
    120: (60, 84, 96, 108, 120),
}
GRID_QUANTILES = (0.5, 0.8, 0.9)


def _sorted_draws(rng, draw, n, trials, chunk=25000):
    for start in range(0, trials, chunk):
        yield np.sort(draw(rng, (min(chunk, trials - start), n)), axis=1)


class TestDistributionFree:
    def test_uniform_monte_carlo(self):
        rng = np.random.default_rng(0)
        draw, quantile = DISTRIBUTIONS["uniform"]
        trials = 4000
        for k in (25, 28, 30):
            expected = tr.exceedance_probability(30, k, 0.9)
            se = math.sqrt(expected * (1 - expected) / trials)
            assert abs(_empirical_exceedance(rng, draw, quantile(0.9), 30, k, trials) - expected) <= 4 * se + 1e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(DISTRIBUTIONS))
    def test_monte_carlo_grid(self, name):
        rng = np.random.default_rng(1)
        draw, quantile = DISTRIBUTIONS[name]
        trials = 100_000
        cells = 0
        misses = []
        for n, orders in GRID_ORDERS.items():
            idx = np.array(orders) - 1
            above = np.zeros((len(GRID_QUANTILES), len(orders)))
            for samples in _sorted_draws(rng, draw, n, trials):
                picked = samples[:, idx]
                for row, p in enumerate(GRID_QUANTILES):
                    above[row] += np.sum(picked > quantile(p), axis=0)
            for row, p in enumerate(GRID_QUANTILES):
                for col, k in enumerate(orders):
                    expected = tr.exceedance_probability(n, k, p)
                    se = math.sqrt(expected * (1 - expected) / trials)
                    cells += 1
                    if abs(above[row, col] / trials - expected) > 3 * se:
                        misses.append((n, k, p))
        assert cells == 75
        assert len(misses) <= 0.05 * cells, misses


class TestProvisioning:
    def test_matches_linear_scan(self):
        samples = np.random.default_rng(3).uniform(size=50)
        expected_k = next(k for k in range(1, 51) if 1 - binomial_exceedance(50, k, 0.9) <= 0.05)
        result = tr.select_provisioning_level(samples, 0.9, 0.05)
        assert result.k == expected_k
        assert result.level == np.sort(samples)[expected_k - 1]
        assert not result.unattainable
        assert result.shortfall_probability <= 0.05

    def test_constant_samples(self):
        assert tr.select_provisioning_level(np.full(40, 5.0), 0.9, 0.05).level == 5.0

    def test_too_few_samples(self):
        samples = np.arange(10.0)
        result = tr.select_provisioning_level(samples, 0.9, 0.05)
        assert result.unattainable
        assert result.k == 10
        assert result.level == 9.0

    def test_thirty_samples_reach_the_maximum(self):
        result = tr.select_provisioning_level(np.arange(30.0), 0.9, 0.05)
        assert result.k == 30
        assert not result.unattainable

    def test_rejects_bad_risk(self):
        with pytest.raises(ValueError):
            tr.select_provisioning_level([1.0, 2.0], 0.9, 1.0)

    def test_hourly_groups(self):
        series = tr.generate_synthetic_traffic("voice", 4, seed=0)
        levels = tr.hourly_provisioning_levels(series, 0.8, 0.05)
        assert [level.hour for level in levels] == list(range(24))
        assert all(level.result.n == 28 for level in levels)
        assert all(level.iid is not None for level in levels)


class TestTurningPoints:
    def test_monotone_series(self):
        result = tr.turning_point_test(np.arange(10.0))
        assert result.turning_points == 0
        assert result.reject

    def test_alternating_series(self):
        result = tr.turning_point_test(np.tile([0.0, 1.0], 5))
        assert result.turning_points == 8

    def test_ties_are_collapsed(self):
        result = tr.turning_point_test([1.0, 2.0, 2.0, 3.0, 1.0])
        assert result.turning_points == 1
        assert result.n == 4

    def test_too_short(self):
        with pytest.raises(ValueError):
            tr.turning_point_test([1.0, 1.0, 2.0])

    def test_size_under_iid(self):
        rng = np.random.default_rng(5)
        n, trials = 200, 2000
        results = [tr.turning_point_test(rng.standard_normal(n)) for _ in range(trials)]
        assert 0.03 <= np.mean([r.reject for r in results]) <= 0.08
        mean_turns = np.mean([r.turning_points for r in results])
        se = math.sqrt((16 * n - 29) / 90 / trials)
        assert abs(mean_turns - 2 * (n - 2) / 3) <= 3 * se


class TestSyntheticTraffic:
    def test_deterministic(self):
        a = tr.generate_synthetic_traffic("data", 2, seed=7, burstiness=1.0)
        b = tr.generate_synthetic_traffic("data", 2, seed=7, burstiness=1.0)
        np.testing.assert_array_equal(a.values, b.values)
        assert len(a) == 2 * 168
        assert a.values.max() == pytest.approx(1.0)

    def test_no_bursts_means_voice(self):
        voice = tr.generate_synthetic_traffic("voice", 2, seed=3)
        data = tr.generate_synthetic_traffic("data", 2, seed=3, burstiness=0.0)
        np.testing.assert_array_equal(voice.values, data.values)

    def test_daily_correlation(self):
        series = tr.generate_synthetic_traffic("voice", 4, seed=1)
        assert tr.autocorrelation(series.values, 24) > 0.7

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            tr.generate_synthetic_traffic("video", 1, seed=0)

    def test_autocorrelation_lag_range(self):
        with pytest.raises(ValueError):
            tr.autocorrelation([1.0, 2.0, 3.0], 0)


class TestKernels:
    def test_product_rejects_noise(self):
        with pytest.raises(ValueError, match="white noise"):
            tr.Periodic(1.0, 1.0, 24.0) * tr.WhiteNoise(0.1)

    def test_noise_free(self):
        kernel = tr.Periodic(1.0, 1.0, 24.0) + tr.WhiteNoise(0.1)
        assert isinstance(kernel.noise_free(), tr.Periodic)

    def test_periodic_repeats(self):
        k = tr.Periodic(0.5, 0.7, 24.0)
        assert k(np.array([0.0]), np.array([48.0]))[0, 0] == pytest.approx(0.5)

    def test_candidate_count(self):
        spec = tr.kernel_spec("periodic")
        assert len(list(spec.candidates())) == 3 * 5 * 2 * len(tr.NOISE_GRID)

    def test_unknown_kernel(self):
        with pytest.raises(ValueError, match="unknown kernel"):
            tr.kernel_spec("matern")


def _se_oracle(times, values, variance, lengthscale, noise, new_times):
    y = values - values.mean()
    d = np.subtract.outer(times, times)
    K = variance * np.exp(-0.5 * (d / lengthscale) ** 2) + (noise + tr.JITTER) * np.eye(times.size)
    K_inv = np.linalg.inv(K)
    ll = -0.5 * y @ K_inv @ y - 0.5 * np.linalg.slogdet(K)[1] - 0.5 * times.size * math.log(2 * math.pi)
    cross = variance * np.exp(-0.5 * (np.subtract.outer(new_times, times) / lengthscale) ** 2)
    mean = cross @ K_inv @ y + values.mean()
    var = variance + noise - np.sum((cross @ K_inv) * cross, axis=1)
    return ll, mean, np.sqrt(var)


class TestGaussianProcess:
    def test_matches_closed_form(self):
        series = tr.TrafficSeries([0.2, 0.5, 0.3])
        grid = {"variance": 1.0, "lengthscale": 1.5, "noise": 0.01}
        model = tr.gp_fit(series, "se", grid=grid, min_samples=1)
        forecast = tr.gp_predict(model, horizon=2)
        ll, mean, std = _se_oracle(np.arange(3.0), series.values, 1.0, 1.5, 0.01, np.array([3.0, 4.0]))
        assert model.log_likelihood == pytest.approx(ll, abs=1e-10)
        np.testing.assert_allclose(forecast.mean, mean, atol=1e-10)
        np.testing.assert_allclose(forecast.std, std, atol=1e-10)
        np.testing.assert_allclose(forecast.times, [3.0, 4.0])

    def test_tiny_noise_interpolates(self):
        t = np.arange(48.0)
        series = tr.TrafficSeries(0.5 + 0.3 * np.sin(2 * np.pi * t / 24))
        model = tr.gp_fit(series, "se", grid={"variance": 1.0, "lengthscale": 3.0, "noise": 1e-6})
        forecast = tr.gp_predict(model, times=t, include_noise=False)
        np.testing.assert_allclose(forecast.mean, series.values, atol=1e-2)

    def test_training_inputs_reproduced(self):
        # samples 10 h apart are uncorrelated at lengthscale 1
        series = tr.TrafficSeries([0.2, 0.9, 0.4], cadence_hours=10.0)
        model = tr.gp_fit(series, "se", grid={"variance": 1.0, "lengthscale": 1.0, "noise": 1e-9},
                          min_samples=1)
        forecast = tr.gp_predict(model, times=series.hours, include_noise=False)
        np.testing.assert_allclose(forecast.mean, series.values, atol=1e-6)

    def test_selects_best_grid_point(self):
        series = tr.generate_synthetic_traffic("voice", 1, seed=2)
        model = tr.gp_fit(series, "periodic", grid={"variance": (0.05, 0.2), "lengthscale": (0.5, 1.0),
                                                      "period": 24.0, "noise": (1e-3, 4e-3)})
        assert len(model.grid_scores) == 8
        assert all(model.log_likelihood >= score for _, score in model.grid_scores)
        forecast = tr.gp_predict(model, horizon=24)
        prior = math.sqrt(model.hyperparameters["variance"] + model.hyperparameters["noise"])
        assert np.all(forecast.std <= prior + 1e-12)

    def test_threaded_search_matches_serial(self):
        series = tr.generate_synthetic_traffic("voice", 1, seed=4)
        grid = {"variance": (0.05, 0.2), "lengthscale": (0.5, 1.0), "period": 24.0, "noise": (1e-3, 4e-3)}
        serial = tr.gp_fit(series, "periodic", grid=grid)
        threaded = tr.gp_fit(series, "periodic", grid=grid, jobs=4)
        assert threaded.hyperparameters == serial.hyperparameters
        assert threaded.log_likelihood == pytest.approx(serial.log_likelihood)

    def test_negative_variance(self):
        series = tr.generate_synthetic_traffic("voice", 1, seed=0)
        with pytest.raises(NumericalError) as info:
            tr.gp_fit(series, "se", grid={"variance": (-1.0, -2.0), "lengthscale": 2.0, "noise": 1e-3})
        failed = info.value.hyperparameters
        assert [h["variance"] for h in failed] == [-1.0, -2.0]
        assert all(h["lengthscale"] == 2.0 for h in failed)

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="training samples"):
            tr.gp_fit(tr.TrafficSeries(np.ones(10)), "se")

    def test_window_longer_than_series(self):
        with pytest.raises(ValueError, match="exceeds"):
            tr.gp_fit(tr.TrafficSeries(np.ones(60)), "se", train_window=100)

    def test_coverage_mismatch(self):
        forecast = tr.GpForecast(np.arange(3.0), np.zeros(3), np.ones(3), {}, 10)
        with pytest.raises(ValueError):
            tr.forecast_coverage(forecast, [0.0, 0.0])

    def test_week_ahead_coverage(self):
        series = tr.generate_synthetic_traffic("voice", 4, seed=0)
        model = tr.gp_fit(series, "periodic", train_window=3 * 168)
        forecast = tr.gp_predict(model, horizon=168)
        assert 0.8 <= tr.forecast_coverage(forecast, series.values[3 * 168:]) <= 1.0

    @pytest.mark.slow
    def test_week_ahead_coverage_across_seeds(self):
        good = 0
        for seed in range(10):
            series = tr.generate_synthetic_traffic("voice", 4, seed=seed)
            model = tr.gp_fit(series, "periodic", train_window=3 * 168)
            coverage = tr.forecast_coverage(tr.gp_predict(model, horizon=168), series.values[3 * 168:])
            good += 0.85 <= coverage <= 0.99
        assert good >= 8


class TestSeriesCsv:
    def test_write_then_read(self, tmp_path):
        series = tr.generate_synthetic_traffic("voice", 1, seed=0)
        path = tr.write_series_csv(series, tmp_path / "series.csv")
        loaded = tr.read_series_csv(path)
        np.testing.assert_allclose(loaded.values, series.values, rtol=1e-8)
        assert loaded.cadence_hours == 1.0
        assert loaded.kind == "measured"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            tr.read_series_csv(tmp_path / "absent.csv")

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("hour,value\n0,1.0\n1,abc\n")
        with pytest.raises(ConfigError, match="malformed"):
            tr.read_series_csv(path)

    def test_forecast_csv(self, tmp_path):
        forecast = tr.GpForecast(np.arange(2.0), np.array([0.5, 0.6]), np.array([0.1, 0.1]), {}, 10)
        path = tr.write_forecast_csv(forecast, tmp_path / "f.csv", actual=[0.5, 0.9])
        lines = path.read_text().splitlines()
        assert lines[0] == "hour,mean,std,lower,upper,actual"
        assert len(lines) == 3
