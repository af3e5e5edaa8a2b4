"""Network data model and reproducible synthetic deployments.

A scenario holds the base stations, the test points, the linear power gains
between them, and the radio constants the load model needs. Scenarios are
immutable once built and serialise to a versioned JSON document.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from errors import ScenarioFormatError

log = logging.getLogger(__name__)

SCHEMA = "netenergy.scenario/1"

BOLTZMANN = 1.380649e-23
REFERENCE_TEMPERATURE_K = 290.0

# Urban macro path loss, L(d) = 128.1 + 37.6 log10(d / 1 km)
PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6
MIN_DISTANCE_M = 35.0


@dataclass(frozen=True)
class RadioParams:
    """Radio constants used when generating a deployment.

    The defaults describe a 100 MHz macro layer serving 128 kbps test points.
    Power, noise figure and layout are documented choices rather than values
    taken from any particular measurement campaign.
    """
    demand_bps: float = 128e3
    bandwidth_hz: float = 100e6
    resource_units: int = 500
    tx_power_w: float = 40.0
    static_energy_w: float = 130.0
    sinr_scaling: float = 1.0
    noise_figure_db: float = 9.0
    spectral_efficiency_cap: Optional[float] = None
    inter_site_distance_m: float = 500.0

    @property
    def bandwidth_per_ru(self):
        return self.bandwidth_hz / self.resource_units

    @property
    def power_per_ru(self):
        return self.tx_power_w / self.resource_units

    @property
    def noise_power(self):
        """Thermal noise over one resource unit, including the receiver noise figure."""
        return (BOLTZMANN * REFERENCE_TEMPERATURE_K * self.bandwidth_per_ru
                * 10.0 ** (self.noise_figure_db / 10.0))


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple
    power_per_ru: float
    static_energy: float

    def __post_init__(self):
        if not self.power_per_ru > 0:
            raise ValueError(f"station {self.id}: power_per_ru must be > 0, got {self.power_per_ru}")
        if not self.static_energy > 0:
            raise ValueError(f"station {self.id}: static_energy must be > 0, got {self.static_energy}")


@dataclass(frozen=True)
class TestPoint:
    __test__ = False  # not a pytest class

    id: int
    position: tuple
    demand: float

    def __post_init__(self):
        if not self.demand > 0:
            raise ValueError(f"test point {self.id}: demand must be > 0, got {self.demand}")


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """The world the optimizer acts on.

    ``gains[i, j]`` is the linear power gain from station ``i`` to test
    point ``j``. The array is stored read-only.
    """
    stations: tuple
    test_points: tuple
    gains: np.ndarray
    resource_units: int
    bandwidth_per_ru: float
    sinr_scaling: float
    noise_power: float
    spectral_efficiency_cap: Optional[float] = None
    region_size: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "test_points", tuple(self.test_points))
        gains = np.array(self.gains, dtype=float)
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)

        m, n = len(self.stations), len(self.test_points)
        if m < 1 or n < 1:
            raise ValueError(f"scenario needs at least one station and one test point, got M={m}, N={n}")
        if [s.id for s in self.stations] != list(range(m)):
            raise ValueError("station ids must be unique and contiguous from 0")
        if [t.id for t in self.test_points] != list(range(n)):
            raise ValueError("test point ids must be unique and contiguous from 0")
        if gains.shape != (m, n):
            raise ValueError(f"gain matrix has shape {gains.shape}, expected ({m}, {n})")
        if not np.all(np.isfinite(gains)) or not np.all(gains > 0):
            raise ValueError("all gains must be finite and strictly positive")
        if self.resource_units < 1:
            raise ValueError(f"resource_units must be >= 1, got {self.resource_units}")
        if not self.bandwidth_per_ru > 0:
            raise ValueError(f"bandwidth_per_ru must be > 0, got {self.bandwidth_per_ru}")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if not self.sinr_scaling >= 1:
            raise ValueError(f"sinr_scaling must be >= 1, got {self.sinr_scaling}")
        cap = self.spectral_efficiency_cap
        if cap is not None and not cap > 0:
            raise ValueError(f"spectral_efficiency_cap must be positive or absent, got {cap}")

    @property
    def num_stations(self):
        return len(self.stations)

    @property
    def num_test_points(self):
        return len(self.test_points)

    @property
    def power(self):
        return np.array([s.power_per_ru for s in self.stations])

    @property
    def static_energy(self):
        return np.array([s.static_energy for s in self.stations])

    @property
    def demand(self):
        return np.array([t.demand for t in self.test_points])

    @property
    def station_positions(self):
        return np.array([s.position for s in self.stations], dtype=float).reshape(-1, 2)

    @property
    def test_point_positions(self):
        return np.array([t.position for t in self.test_points], dtype=float).reshape(-1, 2)

    def with_demand(self, demand):
        """Return a copy with every test point's demand replaced."""
        demand = np.broadcast_to(np.asarray(demand, dtype=float), (self.num_test_points,))
        points = tuple(TestPoint(t.id, t.position, float(d))
                       for t, d in zip(self.test_points, demand))
        return _replace(self, test_points=points)


def _replace(scenario, **changes):
    values = {name: getattr(scenario, name) for name in scenario.__dataclass_fields__}
    values.update(changes)
    return NetworkScenario(**values)


def path_loss_db(distance_m):
    """Path loss in dB for distances in meters, with the 35 m floor applied."""
    d_km = np.maximum(np.asarray(distance_m, dtype=float), MIN_DISTANCE_M) / 1000.0
    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * np.log10(d_km)


def compute_gains(station_positions, test_point_positions):
    """Return the M x N matrix of linear power gains between stations and test points."""
    stations = np.asarray(station_positions, dtype=float).reshape(-1, 2)
    points = np.asarray(test_point_positions, dtype=float).reshape(-1, 2)
    distance = np.linalg.norm(stations[:, None, :] - points[None, :, :], axis=2)
    return 10.0 ** (-path_loss_db(distance) / 10.0)


def region_size_for(m, inter_site_distance_m):
    """Side of the square region holding ``m`` hexagonal cells of the given spacing."""
    return inter_site_distance_m * math.sqrt(m * math.sqrt(3.0) / 2.0)


def hex_lattice(m, spacing, center):
    """Return the ``m`` hexagonal lattice sites closest to ``center``.

    Rows are ``spacing * sqrt(3)/2`` apart and every other row is shifted by
    half a spacing. Ties in distance are broken by angle so the selection is
    deterministic.
    """
    reach = int(math.ceil(math.sqrt(m))) + 2
    rows = np.arange(-reach, reach + 1)
    cols = np.arange(-reach, reach + 1)
    r, c = np.meshgrid(rows, cols, indexing="ij")
    x = spacing * (c + 0.5 * (r % 2))
    y = spacing * (math.sqrt(3.0) / 2.0) * r
    sites = np.column_stack([x.ravel(), y.ravel()])
    dist = np.round(np.hypot(sites[:, 0], sites[:, 1]), 6)
    angle = np.round(np.arctan2(sites[:, 1], sites[:, 0]), 9)
    order = np.lexsort((angle, dist))
    return sites[order[:m]] + np.asarray(center, dtype=float)


def make_scenario(station_positions, test_point_positions, demand, *,
                  power_per_ru, static_energy, resource_units, bandwidth_per_ru,
                  noise_power, sinr_scaling=1.0, spectral_efficiency_cap=None,
                  gains=None, region_size=0.0, meta=None):
    """Build a scenario from arrays; gains default to the path-loss model."""
    stations_xy = np.asarray(station_positions, dtype=float).reshape(-1, 2)
    points_xy = np.asarray(test_point_positions, dtype=float).reshape(-1, 2)
    m, n = len(stations_xy), len(points_xy)
    power = np.broadcast_to(np.asarray(power_per_ru, dtype=float), (m,))
    static = np.broadcast_to(np.asarray(static_energy, dtype=float), (m,))
    demand = np.broadcast_to(np.asarray(demand, dtype=float), (n,))
    if gains is None:
        gains = compute_gains(stations_xy, points_xy)

    stations = tuple(BaseStation(i, (float(x), float(y)), float(p), float(c))
                     for i, ((x, y), p, c) in enumerate(zip(stations_xy, power, static)))
    points = tuple(TestPoint(j, (float(x), float(y)), float(d))
                   for j, ((x, y), d) in enumerate(zip(points_xy, demand)))
    return NetworkScenario(
        stations=stations,
        test_points=points,
        gains=gains,
        resource_units=int(resource_units),
        bandwidth_per_ru=float(bandwidth_per_ru),
        sinr_scaling=float(sinr_scaling),
        noise_power=float(noise_power),
        spectral_efficiency_cap=(None if spectral_efficiency_cap is None
                                 else float(spectral_efficiency_cap)),
        region_size=float(region_size),
        meta=dict(meta or {}),
    )


def generate_hex_scenario(m, n, seed, params=None):
    """Generate a hexagonal deployment with uniformly scattered test points.

    Identical ``(m, n, seed, params)`` always produce bit-identical scenarios.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"station count must be a positive integer, got {m!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"test point count must be a positive integer, got {n!r}")
    params = params or RadioParams()

    size = region_size_for(m, params.inter_site_distance_m)
    center = (size / 2.0, size / 2.0)
    stations_xy = hex_lattice(m, params.inter_site_distance_m, center)

    placement_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    points_xy = placement_rng.uniform(0.0, size, size=(n, 2))

    log.debug("generated %d stations / %d test points over %.1f m square (seed %s)",
              m, n, size, seed)
    return make_scenario(
        stations_xy, points_xy, params.demand_bps,
        power_per_ru=params.power_per_ru,
        static_energy=params.static_energy_w,
        resource_units=params.resource_units,
        bandwidth_per_ru=params.bandwidth_per_ru,
        noise_power=params.noise_power,
        sinr_scaling=params.sinr_scaling,
        spectral_efficiency_cap=params.spectral_efficiency_cap,
        region_size=size,
        meta={"generator": "hex", "seed": int(seed)},
    )


def scenario_to_dict(scenario):
    """Plain-Python representation of a scenario, ready for ``json.dump``."""
    return {
        "schema": SCHEMA,
        "radio": {
            "resource_units": scenario.resource_units,
            "bandwidth_per_ru": float(scenario.bandwidth_per_ru),
            "sinr_scaling": float(scenario.sinr_scaling),
            "noise_power": float(scenario.noise_power),
            "spectral_efficiency_cap": (None if scenario.spectral_efficiency_cap is None
                                        else float(scenario.spectral_efficiency_cap)),
        },
        "region_size": float(scenario.region_size),
        "meta": dict(scenario.meta),
        "stations": [
            {"id": s.id, "x": float(s.position[0]), "y": float(s.position[1]),
             "power_per_ru": float(s.power_per_ru), "static_energy": float(s.static_energy)}
            for s in scenario.stations
        ],
        "test_points": [
            {"id": t.id, "x": float(t.position[0]), "y": float(t.position[1]),
             "demand": float(t.demand)}
            for t in scenario.test_points
        ],
        "gains": [[float(g) for g in row] for row in scenario.gains],
    }


def scenario_from_dict(data, path=None):
    """Inverse of :func:`scenario_to_dict`; raises ScenarioFormatError on bad input."""
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario document is not a JSON object", path=path)
    if data.get("schema") != SCHEMA:
        raise ScenarioFormatError(
            f"unsupported scenario schema {data.get('schema')!r} (expected {SCHEMA})", path=path)
    try:
        radio = data["radio"]
        stations = tuple(BaseStation(int(s["id"]), (float(s["x"]), float(s["y"])),
                                     float(s["power_per_ru"]), float(s["static_energy"]))
                         for s in data["stations"])
        points = tuple(TestPoint(int(t["id"]), (float(t["x"]), float(t["y"])), float(t["demand"]))
                       for t in data["test_points"])
        cap = radio.get("spectral_efficiency_cap")
        return NetworkScenario(
            stations=stations,
            test_points=points,
            gains=np.array(data["gains"], dtype=float),
            resource_units=int(radio["resource_units"]),
            bandwidth_per_ru=float(radio["bandwidth_per_ru"]),
            sinr_scaling=float(radio["sinr_scaling"]),
            noise_power=float(radio["noise_power"]),
            spectral_efficiency_cap=None if cap is None else float(cap),
            region_size=float(data.get("region_size", 0.0)),
            meta=dict(data.get("meta", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioFormatError(f"malformed scenario: {e}", path=path) from e


def dumps_scenario(scenario):
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


def loads_scenario(text, path=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(f"scenario is not valid JSON: {e}", path=path) from e
    return scenario_from_dict(data, path=path)


def save_scenario(scenario, path):
    """Write a scenario atomically (write to .tmp, then replace)."""
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    tmp_path.write_text(dumps_scenario(scenario), encoding="utf-8")
    tmp_path.replace(path)
    return path


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ScenarioFormatError(f"cannot read scenario {path}: {e}", path=path) from e
    return loads_scenario(text, path=path)
