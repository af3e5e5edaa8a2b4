"""Traffic series: synthetic generation, i.i.d. checks, tolerance levels and GP forecasts.

Samples taken 24 hours apart behave roughly like i.i.d. draws, which makes
the order statistics of each hour-of-day group usable for distribution-free
provisioning: the probability that the k-th smallest of n samples lies
above the p-quantile of the traffic distribution does not depend on the
distribution at all.
"""

import csv
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import linalg, stats
from scipy.special import gammaln, logsumexp

from errors import ConfigError, NumericalError

log = logging.getLogger(__name__)

HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168
JITTER = 1e-8
MIN_TRAINING_SAMPLES = 48
LOG_SPACE_THRESHOLD = 60
SERIES_KINDS = ("voice", "data", "measured")


@dataclass(frozen=True, eq=False)
class TrafficSeries:
    values: np.ndarray
    cadence_hours: float = 1.0
    start_offset: float = 0.0
    kind: str = "voice"

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise ValueError("traffic series needs at least one sample")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("traffic samples must be finite and nonnegative")
        if not self.cadence_hours > 0:
            raise ValueError(f"cadence must be > 0 hours, got {self.cadence_hours}")
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def hours(self):
        return self.start_offset + self.cadence_hours * np.arange(self.values.size)

    def window(self, start, stop=None):
        stop = self.values.size if stop is None else stop
        return TrafficSeries(self.values[start:stop], self.cadence_hours,
                             self.start_offset + start * self.cadence_hours, self.kind)


# -- tolerance levels ---------------------------------------------------------

def _check_order(n, k, p):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ValueError(f"k must be an integer in [1, {n}], got {k!r}")
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")


def exceedance_probability(n, k, p):
    """P(F(X_{k:n}) > p) = 1 - sum_{i=k}^{n} C(n, i) p^i (1-p)^(n-i).

    Evaluated as the lower binomial tail sum_{i<k}, in log space when n is
    large enough for the terms to under- or overflow.
    """
    _check_order(n, k, p)
    if n <= LOG_SPACE_THRESHOLD:
        total = sum(math.comb(n, i) * p ** i * (1.0 - p) ** (n - i) for i in range(k))
    else:
        i = np.arange(k)
        log_terms = (gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
                     + i * math.log(p) + (n - i) * math.log1p(-p))
        total = float(np.exp(logsumexp(log_terms)))
    return min(1.0, max(0.0, total))


def prediction_coverage(n, k):
    """P(X_{n+1} <= X_{k:n}) = k / (n + 1) for any continuous distribution."""
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    return k / (n + 1.0)


@dataclass(frozen=True)
class ToleranceResult:
    k: int
    level: float
    exceedance_probability: float
    p: float
    n: int
    risk: float
    unattainable: bool = False

    @property
    def shortfall_probability(self):
        """Probability that the chosen level lies at or below the p-quantile."""
        return 1.0 - self.exceedance_probability

    @property
    def prediction_coverage(self):
        return prediction_coverage(self.n, self.k)


def select_provisioning_level(samples, p, risk):
    """Smallest order statistic that covers the p-quantile with probability >= 1 - risk.

    If even the sample maximum is not enough (p**n > risk) the maximum is
    returned with ``unattainable`` set.
    """
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    if samples.size == 0:
        raise ValueError("no samples to provision from")
    if not 0 < risk < 1:
        raise ValueError(f"risk must be in (0, 1), got {risk}")
    n = int(samples.size)
    for k in range(1, n + 1):
        exceed = exceedance_probability(n, k, p)
        if 1.0 - exceed <= risk:
            return ToleranceResult(k, float(samples[k - 1]), exceed, p, n, risk)
    exceed = exceedance_probability(n, n, p)
    log.debug("risk %.3g unattainable with %d samples at p=%.3g", risk, n, p)
    return ToleranceResult(n, float(samples[-1]), exceed, p, n, risk, unattainable=True)


@dataclass(frozen=True)
class TurningPointResult:
    statistic: float
    turning_points: int
    n: int
    p_value: float
    reject: bool


def turning_point_test(values, alpha=0.05):
    """Turning-point test of the i.i.d. hypothesis.

    Adjacent equal values are collapsed before counting. Under i.i.d. the
    count T has mean 2(n-2)/3 and variance (16n-29)/90.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 3:
        raise ValueError(f"turning-point test needs at least 3 samples, got {values.size}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    steps = np.diff(values)
    steps = steps[steps != 0]
    n = steps.size + 1
    if n < 3:
        raise ValueError("series has fewer than 3 distinct consecutive values")
    signs = np.sign(steps)
    turns = int(np.sum(signs[1:] != signs[:-1]))
    z = (turns - 2.0 * (n - 2) / 3.0) / math.sqrt((16.0 * n - 29.0) / 90.0)
    p_value = float(2.0 * stats.norm.sf(abs(z)))
    return TurningPointResult(float(z), turns, n, p_value, abs(z) > stats.norm.ppf(1.0 - alpha / 2.0))


@dataclass(frozen=True)
class HourlyLevel:
    hour: int
    result: ToleranceResult
    iid: Optional[TurningPointResult] = None


def hourly_provisioning_levels(series, p, risk, check_iid=True, alpha=0.05):
    """Provisioning level for each hour of the day from the samples 24 h apart."""
    hour_of_day = np.floor(np.mod(series.hours, HOURS_PER_DAY)).astype(int)
    levels = []
    for hour in range(HOURS_PER_DAY):
        group = series.values[hour_of_day == hour]
        if group.size == 0:
            continue
        iid = None
        if check_iid and group.size >= 3 and np.unique(group).size >= 3:
            try:
                iid = turning_point_test(group, alpha)
            except ValueError:
                iid = None
            if iid is not None and iid.reject:
                log.warning("hour %02d: turning-point test rejects i.i.d. (z=%.2f)", hour, iid.statistic)
        levels.append(HourlyLevel(hour, select_provisioning_level(group, p, risk), iid))
    return levels


# -- synthetic traffic --------------------------------------------------------

def generate_synthetic_traffic(kind, weeks, seed, burstiness=0.0, noise=0.03, cadence_hours=1.0):
    """Voice-like or data-like hourly traffic, normalised to a peak of 1.

    Both kinds share a daily and weekly sinusoidal profile with Gaussian
    noise. Data traffic adds Pareto-sized spikes at Poisson times, on
    average ``burstiness`` spikes per day; with burstiness 0 the two kinds
    are identical.
    """
    if kind not in ("voice", "data"):
        raise ValueError(f"kind must be 'voice' or 'data', got {kind!r}")
    if not isinstance(weeks, (int, np.integer)) or weeks < 1:
        raise ValueError(f"weeks must be a positive integer, got {weeks!r}")
    if burstiness < 0 or noise < 0:
        raise ValueError("burstiness and noise must be nonnegative")
    noise_rng, burst_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    n = int(round(weeks * HOURS_PER_WEEK / cadence_hours))
    t = cadence_hours * np.arange(n)
    day = 2.0 * np.pi * t / HOURS_PER_DAY
    week = 2.0 * np.pi * t / HOURS_PER_WEEK
    values = (0.55 + 0.3 * np.sin(day - np.pi / 2.0) + 0.1 * np.sin(week)
              + 0.05 * np.sin(2.0 * day) + noise * noise_rng.standard_normal(n))

    if kind == "data" and burstiness > 0:
        count = burst_rng.poisson(burstiness * weeks * 7)
        at = burst_rng.integers(0, n, size=count)
        amplitude = 0.2 * (1.0 + burst_rng.pareto(1.5, size=count))
        np.add.at(values, at, amplitude)
        log.debug("added %d bursts to %d samples", count, n)

    values = np.clip(values, 0.0, None)
    peak = values.max()
    if peak > 0:
        values = values / peak
    return TrafficSeries(values, cadence_hours=cadence_hours, start_offset=0.0, kind=kind)


def autocorrelation(values, lag):
    values = np.asarray(values, dtype=float).ravel()
    if not 0 < lag < values.size:
        raise ValueError(f"lag must be in (0, {values.size}), got {lag}")
    centred = values - values.mean()
    denom = float(centred @ centred)
    if denom == 0:
        return 1.0
    return float(centred[:-lag] @ centred[lag:]) / denom


# -- Gaussian process forecasting --------------------------------------------

class Kernel:
    """Covariance function on scalar times; kernels combine with + and *."""

    has_noise = False

    def __call__(self, t1, t2):
        raise NotImplementedError

    def noise_free(self):
        """The same kernel with white-noise terms removed."""
        return self

    def __add__(self, other):
        return SumKernel(self, other)

    def __mul__(self, other):
        return ProductKernel(self, other)


class Periodic(Kernel):
    def __init__(self, variance, lengthscale, period):
        self.variance = variance
        self.lengthscale = lengthscale
        self.period = period

    def __call__(self, t1, t2):
        d = np.abs(np.subtract.outer(t1, t2))
        return self.variance * np.exp(-2.0 * np.sin(np.pi * d / self.period) ** 2 / self.lengthscale ** 2)

    def __repr__(self):
        return f"Periodic(variance={self.variance:g}, lengthscale={self.lengthscale:g}, period={self.period:g})"


class SquaredExponential(Kernel):
    def __init__(self, variance, lengthscale):
        self.variance = variance
        self.lengthscale = lengthscale

    def __call__(self, t1, t2):
        d = np.subtract.outer(t1, t2)
        return self.variance * np.exp(-0.5 * (d / self.lengthscale) ** 2)

    def __repr__(self):
        return f"SquaredExponential(variance={self.variance:g}, lengthscale={self.lengthscale:g})"


class WhiteNoise(Kernel):
    has_noise = True

    def __init__(self, variance):
        self.variance = variance

    def __call__(self, t1, t2):
        return self.variance * (np.subtract.outer(t1, t2) == 0).astype(float)

    def noise_free(self):
        return None

    def __repr__(self):
        return f"WhiteNoise(variance={self.variance:g})"


class SumKernel(Kernel):
    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.has_noise = left.has_noise or right.has_noise

    def __call__(self, t1, t2):
        return self.left(t1, t2) + self.right(t1, t2)

    def noise_free(self):
        left, right = self.left.noise_free(), self.right.noise_free()
        if left is None or right is None:
            return left if right is None else right
        return SumKernel(left, right)

    def __repr__(self):
        return f"({self.left!r} + {self.right!r})"


class ProductKernel(Kernel):
    def __init__(self, left, right):
        if left.has_noise or right.has_noise:
            raise ValueError("white noise can only be added to a kernel, not multiplied")
        self.left = left
        self.right = right

    def __call__(self, t1, t2):
        return self.left(t1, t2) * self.right(t1, t2)

    def __repr__(self):
        return f"({self.left!r} * {self.right!r})"


NOISE_GRID = (2.5e-4, 5e-4, 1e-3, 2e-3, 4e-3, 8e-3)


@dataclass(frozen=True)
class KernelSpec:
    """Named kernel family with the hyperparameter grid searched by gp_fit."""
    name: str
    build: object
    grid: dict

    def candidates(self):
        names = list(self.grid)
        for combo in itertools.product(*(self.grid[k] for k in names)):
            yield dict(zip(names, combo))


def _periodic(h):
    return Periodic(h["variance"], h["lengthscale"], h["period"]) + WhiteNoise(h["noise"])


def _se(h):
    return SquaredExponential(h["variance"], h["lengthscale"]) + WhiteNoise(h["noise"])


def _periodic_plus_se(h):
    return (Periodic(h["variance"], h["lengthscale"], h["period"])
            + SquaredExponential(h["se_variance"], h["se_lengthscale"]) + WhiteNoise(h["noise"]))


def _periodic_times_se(h):
    return (Periodic(h["variance"], h["lengthscale"], h["period"])
            * SquaredExponential(1.0, h["se_lengthscale"]) + WhiteNoise(h["noise"]))


KERNELS = {
    "periodic": KernelSpec("periodic", _periodic, {
        "variance": (0.01, 0.05, 0.2), "lengthscale": (0.1, 0.2, 0.5, 1.0, 2.0),
        "period": (HOURS_PER_DAY, HOURS_PER_WEEK), "noise": NOISE_GRID}),
    "se": KernelSpec("se", _se, {
        "variance": (0.01, 0.05, 0.2), "lengthscale": (2.0, 6.0, 24.0, 72.0), "noise": NOISE_GRID}),
    "periodic+se": KernelSpec("periodic+se", _periodic_plus_se, {
        "variance": (0.05, 0.2), "lengthscale": (0.1, 0.3, 1.0),
        "period": (HOURS_PER_DAY, HOURS_PER_WEEK), "se_variance": (0.005, 0.02),
        "se_lengthscale": (24.0, 168.0), "noise": NOISE_GRID}),
    "periodic*se": KernelSpec("periodic*se", _periodic_times_se, {
        "variance": (0.05, 0.2), "lengthscale": (0.1, 0.3, 1.0),
        "period": (HOURS_PER_DAY, HOURS_PER_WEEK), "se_lengthscale": (168.0, 504.0),
        "noise": NOISE_GRID}),
}


def kernel_spec(name):
    if isinstance(name, KernelSpec):
        return name
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of {sorted(KERNELS)}") from None


@dataclass(frozen=True, eq=False)
class GpModel:
    times: np.ndarray
    targets: np.ndarray
    mean_offset: float
    kernel: Kernel
    hyperparameters: dict
    log_likelihood: float
    factor: tuple = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    cadence_hours: float = 1.0
    grid_scores: tuple = field(default=(), repr=False)

    @property
    def train_window(self):
        return self.times.size


@dataclass(frozen=True, eq=False)
class GpForecast:
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    hyperparameters: dict
    train_window: int

    def band(self, z=1.96):
        return self.mean - z * self.std, self.mean + z * self.std


def _score(kernel, times, targets):
    """Cholesky factor, weights and exact log marginal likelihood; None if not PD."""
    K = kernel(times, times)
    K[np.diag_indices_from(K)] += JITTER
    try:
        factor = linalg.cho_factor(K, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    alpha = linalg.cho_solve(factor, targets, check_finite=False)
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    ll = -0.5 * float(targets @ alpha) - 0.5 * log_det - 0.5 * targets.size * math.log(2.0 * math.pi)
    return factor, alpha, ll


def gp_fit(series, kernel="periodic", train_window=None, jobs=1, grid=None,
           min_samples=MIN_TRAINING_SAMPLES):
    """Fit a zero-mean GP to the centred first ``train_window`` samples.

    Hyperparameters are chosen by exhaustive grid search on the exact log
    marginal likelihood; ``grid`` overrides the kernel family's default
    grid (e.g. a single fixed point).
    """
    spec = kernel_spec(kernel)
    if grid is not None:
        spec = KernelSpec(spec.name, spec.build, {k: tuple(np.atleast_1d(v)) for k, v in grid.items()})
    n = len(series) if train_window is None else int(train_window)
    if n > len(series):
        raise ValueError(f"training window of {n} samples exceeds series length {len(series)}")
    if n < min_samples:
        raise ValueError(f"need at least {min_samples} training samples, got {n}")
    times = series.hours[:n].astype(float)
    offset = float(series.values[:n].mean())
    targets = series.values[:n] - offset

    candidates = list(spec.candidates())

    def evaluate(params):
        return params, _score(spec.build(params), times, targets)

    if jobs == 1:
        scored = [evaluate(p) for p in candidates]
    else:
        with ThreadPoolExecutor(max_workers=None if jobs < 1 else jobs) as pool:
            scored = list(pool.map(evaluate, candidates))

    best = None
    scores = []
    failed = []
    for params, outcome in scored:
        if outcome is None:
            log.warning("covariance not positive definite for %s, skipping", params)
            failed.append(params)
            continue
        scores.append((params, outcome[2]))
        if best is None or outcome[2] > best[1][2]:
            best = (params, outcome)
    if best is None:
        raise NumericalError(
            f"covariance matrix is not positive definite for any of {len(failed)} grid point(s)",
            hyperparameters=failed)

    params, (factor, alpha, ll) = best
    log.info("gp fit (%s): log-likelihood %.3f at %s", spec.name, ll, params)
    return GpModel(times, targets, offset, spec.build(params), dict(params), ll, factor, alpha,
                   series.cadence_hours, tuple(scores))


def gp_predict(model, horizon=None, times=None, include_noise=True):
    """Posterior mean and pointwise standard deviation at ``times``.

    By default predicts ``horizon`` samples following the training window.
    """
    if times is None:
        if horizon is None or horizon < 1:
            raise ValueError("need a positive horizon or explicit prediction times")
        times = model.times[-1] + model.cadence_hours * np.arange(1, horizon + 1)
    times = np.asarray(times, dtype=float).ravel()
    signal = model.kernel.noise_free() or model.kernel
    cross = signal(times, model.times)
    mean = cross @ model.alpha + model.mean_offset
    solved = linalg.cho_solve(model.factor, cross.T, check_finite=False)
    prior = np.diag(model.kernel(times, times) if include_noise else signal(times, times))
    var = np.maximum(prior - np.sum(cross * solved.T, axis=1), 0.0)
    return GpForecast(times, mean, np.sqrt(var), dict(model.hyperparameters), model.train_window)


def forecast_coverage(forecast, actual, z=1.96):
    """Fraction of ``actual`` inside mean +/- z * std."""
    actual = np.asarray(actual, dtype=float).ravel()
    if actual.size != forecast.mean.size:
        raise ValueError(f"{actual.size} actual values for a forecast of {forecast.mean.size}")
    lower, upper = forecast.band(z)
    return float(np.mean((actual >= lower) & (actual <= upper)))


# -- CSV ----------------------------------------------------------------------

def read_series_csv(path, kind="measured"):
    """Read a two-column ``hour,value`` CSV with a header row."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read traffic series {path}: {e}") from e
    try:
        body = [r for r in rows[1:] if r]
        hours = np.array([float(r[0]) for r in body])
        values = np.array([float(r[1]) for r in body])
    except (IndexError, ValueError) as e:
        raise ConfigError(f"malformed traffic series {path}: {e}") from e
    if hours.size == 0:
        raise ConfigError(f"traffic series {path} has no samples")
    cadence = float(np.median(np.diff(hours))) if hours.size > 1 else 1.0
    try:
        return TrafficSeries(values, cadence_hours=cadence, start_offset=float(hours[0]), kind=kind)
    except ValueError as e:
        raise ConfigError(f"invalid traffic series {path}: {e}") from e


def write_series_csv(series, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["hour", "value"])
        for hour, value in zip(series.hours, series.values):
            writer.writerow([f"{hour:g}", f"{value:.9g}"])
    return Path(path)


def write_forecast_csv(forecast, path, z=1.96, actual=None):
    lower, upper = forecast.band(z)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        header = ["hour", "mean", "std", "lower", "upper"]
        if actual is not None:
            header.append("actual")
        writer.writerow(header)
        for idx, hour in enumerate(forecast.times):
            row = [f"{hour:g}", f"{forecast.mean[idx]:.9g}", f"{forecast.std[idx]:.9g}",
                   f"{lower[idx]:.9g}", f"{upper[idx]:.9g}"]
            if actual is not None:
                row.append(f"{actual[idx]:.9g}")
            writer.writerow(row)
    return Path(path)
