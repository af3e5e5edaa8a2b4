"""Cellular load coupling: the load of a station depends on how busy its neighbours are.

For an assignment ``x`` of test points to stations, the load of station i is

    I_i(rho) = sum_j d_j x_ij / (K * omega_ij(rho))

where the spectral efficiency omega_ij falls as the interfering stations get
busier. ``I`` is a standard interference mapping, so the network load is its
fixed point and the network is feasible iff that fixed point is <= 1.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import ifcalc
from errors import DimensionError

log = logging.getLogger(__name__)

FEASIBILITY_MARGIN = 1e-6
COLUMN_SUM_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class AssignmentMatrix:
    """M x N matrix; column j says how test point j's demand is split across stations."""
    entries: np.ndarray
    relaxed: bool = True
    covering: bool = False

    def __post_init__(self):
        x = np.array(self.entries, dtype=float)
        if x.ndim != 2:
            raise DimensionError(f"assignment must be a 2-D matrix, got shape {x.shape}")
        if np.any(x < -COLUMN_SUM_TOLERANCE) or np.any(x > 1 + COLUMN_SUM_TOLERANCE):
            raise ValueError("assignment entries must lie in [0, 1]")
        x = np.clip(x, 0.0, 1.0)
        sums = x.sum(axis=0)
        bad = np.nonzero(np.abs(sums - 1.0) > COLUMN_SUM_TOLERANCE)[0]
        if bad.size:
            raise ValueError(f"test point {int(bad[0])} is not fully served "
                             f"(column sum {sums[bad[0]]:.9g})")
        if not self.relaxed and np.any((x != 0.0) & (x != 1.0)):
            raise ValueError("discrete assignment entries must be 0 or 1")
        if self.covering:
            idle = np.nonzero(x.sum(axis=1) <= 0)[0]
            if idle.size:
                raise ValueError(f"covering assignment leaves station {int(idle[0])} without test points")
        x.setflags(write=False)
        object.__setattr__(self, "entries", x)

    @classmethod
    def from_choice(cls, choice, num_stations):
        """Discrete assignment where test point j is served by station ``choice[j]``."""
        choice = np.asarray(choice, dtype=int)
        if np.any(choice < 0) or np.any(choice >= num_stations):
            raise ValueError(f"station index out of range for M={num_stations}")
        x = np.zeros((num_stations, choice.size))
        x[choice, np.arange(choice.size)] = 1.0
        return cls(x, relaxed=False)

    @classmethod
    def uniform(cls, num_stations, num_test_points):
        return cls(np.full((num_stations, num_test_points), 1.0 / num_stations), relaxed=True)

    @property
    def shape(self):
        return self.entries.shape

    def served_demand(self, demand):
        """Demand routed to each station, sum_j d_j x_ij."""
        return self.entries @ np.asarray(demand, dtype=float)

    def active_stations(self, demand):
        return np.nonzero(self.served_demand(demand) > 0)[0]


@dataclass(frozen=True, eq=False)
class LoadVector:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("load vector entries must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def feasible(self):
        return bool(np.all(self.values <= 1.0))

    @property
    def overloaded(self):
        return tuple(int(i) for i in np.nonzero(self.values > 1.0)[0])

    @property
    def max_load(self):
        return float(self.values.max()) if self.values.size else 0.0


def spectral_efficiency(scenario, i, j, rho):
    """Bits/s per resource unit from station ``i`` to test point ``j`` under loads ``rho``."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (scenario.num_stations,):
        raise DimensionError(f"load vector must have length {scenario.num_stations}, got shape {rho.shape}")
    if np.any(rho < 0):
        raise ValueError("loads must be nonnegative")
    power = scenario.power
    received = power * scenario.gains[:, j]
    interference = float(np.sum(np.delete(received * rho, i)))
    sinr = received[i] / (scenario.sinr_scaling * (interference + scenario.noise_power))
    return scenario.bandwidth_per_ru * float(np.log2(1.0 + sinr))


def efficiency_matrix(scenario, rho, cap=None):
    """All omega_ij at once for a full-length load vector; optionally capped at ``cap``."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (scenario.num_stations,):
        raise DimensionError(f"load vector must have length {scenario.num_stations}, got shape {rho.shape}")
    received = scenario.power[:, None] * scenario.gains
    others = 1.0 - np.eye(scenario.num_stations)
    interference = others @ (received * rho[:, None])
    omega = scenario.bandwidth_per_ru * np.log2(
        1.0 + received / (scenario.sinr_scaling * (interference + scenario.noise_power)))
    if cap is not None:
        omega = np.minimum(omega, cap)
    return omega


def _active_set(scenario, assignment, stations):
    if assignment.shape != (scenario.num_stations, scenario.num_test_points):
        raise DimensionError(f"assignment shape {assignment.shape} does not match scenario "
                             f"({scenario.num_stations}, {scenario.num_test_points})")
    served = assignment.served_demand(scenario.demand)
    if stations is None:
        return np.nonzero(served > 0)[0]
    stations = np.asarray(sorted({int(i) for i in stations}), dtype=int)
    idle = [int(i) for i in stations if served[i] <= 0]
    if idle:
        raise DimensionError(
            f"station(s) {idle} serve no demand, so their load would be 0 and the mapping "
            f"would not be strictly positive; leave them out of the station set")
    return stations


def _load_terms(scenario, assignment, stations, cap):
    """Vectorised evaluator of I over the active stations; returns (fn, active)."""
    active = _active_set(scenario, assignment, stations)
    if active.size == 0:
        raise DimensionError("assignment routes no demand to any station")
    received = scenario.power[active, None] * scenario.gains[active]
    others = 1.0 - np.eye(active.size)
    weights = (assignment.entries[active] * scenario.demand[None, :]) / scenario.resource_units
    scale = scenario.sinr_scaling
    noise = scenario.noise_power
    bandwidth = scenario.bandwidth_per_ru

    def evaluate(rho):
        if rho.ndim == 1:
            interference = others @ (received * rho[:, None])
            omega = bandwidth * np.log2(1.0 + received / (scale * (interference + noise)))
            if cap is not None:
                omega = np.minimum(omega, cap)
            return np.sum(weights / omega, axis=1)
        interference = np.einsum("il,ljs->ijs", others, received[:, :, None] * rho[:, None, :])
        omega = bandwidth * np.log2(1.0 + received[:, :, None] / (scale * (interference + noise)))
        if cap is not None:
            omega = np.minimum(omega, cap)
        return np.sum(weights[:, :, None] / omega, axis=1)

    return evaluate, active


def load_mapping(scenario, assignment, stations=None):
    """The load coupling mapping over the stations that serve demand.

    Stations outside the active set are treated as switched off (zero load,
    no interference). The returned mapping carries the active station
    indices in its ``stations`` attribute.
    """
    evaluate, active = _load_terms(scenario, assignment, stations, None)
    mapping = ifcalc.leaf(evaluate, active.size, name="load", vectorized=True)
    mapping.stations = active
    return mapping


def capped_load_mapping(scenario, assignment, efficiency_cap, stations=None):
    """Load mapping where each term is max(d x/(K omega), d x/(K cap)), i.e. omega is capped."""
    if efficiency_cap is None or not efficiency_cap > 0:
        raise ValueError(f"efficiency cap must be > 0, got {efficiency_cap}")
    evaluate, active = _load_terms(scenario, assignment, stations, float(efficiency_cap))
    mapping = ifcalc.leaf(evaluate, active.size, name="capped-load", vectorized=True)
    mapping.stations = active
    return mapping


def load_limited_mapping(inner):
    """min(inner, 1): bounded by 1, so a fixed point always exists."""
    mapping = ifcalc.cap(inner, 1.0, name=f"limited-{inner.name}")
    if hasattr(inner, "stations"):
        mapping.stations = inner.stations
    return mapping


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    load: LoadVector
    overloaded: tuple = ()
    reason: str = ""
    solution: Optional[ifcalc.FixedPointResult] = None


def feasibility_check(scenario, assignment, tolerance=1e-9, margin=FEASIBILITY_MARGIN, stations=None,
                      max_iterations=ifcalc.DEFAULT_MAX_ITERATIONS):
    """Solve the load-limited fixed point and decide whether every station fits.

    Feasible iff every active load is <= 1 - margin and the uncapped residual
    at the fixed point is <= 10 * tolerance (the clamp at 1 never bound).
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    if scenario.spectral_efficiency_cap is not None:
        inner = capped_load_mapping(scenario, assignment, scenario.spectral_efficiency_cap, stations)
    else:
        inner = load_mapping(scenario, assignment, stations)
    limited = load_limited_mapping(inner)
    solution = ifcalc.fixed_point(limited, tolerance=tolerance, max_iterations=max_iterations)

    active = inner.stations
    rho = solution.fixed_point
    full = np.zeros(scenario.num_stations)
    full[active] = rho

    uncapped = inner(rho)
    residual = float(np.max(np.abs(rho - uncapped)))
    hot = (rho > 1.0 - margin) | (uncapped > 1.0)
    overloaded = tuple(int(i) for i in active[hot])
    if not overloaded and residual <= 10 * tolerance:
        log.debug("feasible: max load %.6f over %d active station(s)", rho.max(), active.size)
        return FeasibilityResult(True, LoadVector(full), (), "", solution)

    if overloaded:
        reason = (f"station(s) {list(overloaded)} need more than their {scenario.resource_units} "
                  f"resource units (load clamped at 1)")
    else:
        reason = f"load fixed point not resolved (uncapped residual {residual:.3g})"
    log.debug("infeasible: %s", reason)
    return FeasibilityResult(False, LoadVector(full), overloaded, reason, solution)
