"""Base-station switch-off: serve every test point with as little energy as possible.

The energy of station i is c_i if it is on plus an affine radiated part
a_i * rho_i + b_i. Counting active stations is replaced by the concave
log surrogate

    sum_i c_i * log(1 + rho_i / eps) / log(1 + 1 / eps)

which the MM algorithm minimises by solving a sequence of LPs, each one the
surrogate linearised at the previous loads. Loads are computed with a fixed
worst-case (or average-case) spectral efficiency so that every subproblem is
linear. A greedy rounding step turns the relaxed assignment into a discrete
plan, and an exact subset enumeration gives the optimum for small networks.
"""

import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

import ifcalc
import loadmodel
from errors import (ExactLimitError, InfeasibleError, InternalError, LPInfeasibleError,
                    ScenarioFormatError)
from loadmodel import AssignmentMatrix, LoadVector
from simplex import lp_solve

log = logging.getLogger(__name__)

PLAN_SCHEMA = "netenergy.plan/1"

DEFAULT_EPSILON = 0.01
DEFAULT_MM_ITERATIONS = 10
DEFAULT_ROUNDING_THRESHOLD = 1e-3
DEFAULT_EXACT_LIMIT = 12
DEFAULT_NOMINAL_LOAD = 0.5
EFFICIENCY_MODES = ("worst-case", "average")
DESCENT_SLACK = 1e-9
CAPACITY_MARGIN = 1e-6


def worst_case_efficiency(scenario):
    """omega_ij with every other station at full load, capped if the scenario has a cap."""
    return loadmodel.efficiency_matrix(scenario, np.ones(scenario.num_stations),
                                       cap=scenario.spectral_efficiency_cap)


def average_efficiency(scenario, nominal_load=DEFAULT_NOMINAL_LOAD):
    if not 0 <= nominal_load <= 1:
        raise ValueError(f"nominal load must be in [0, 1], got {nominal_load}")
    return loadmodel.efficiency_matrix(scenario, np.full(scenario.num_stations, nominal_load),
                                       cap=scenario.spectral_efficiency_cap)


@dataclass(frozen=True, eq=False)
class SwitchOffProblem:
    """Data of one switch-off instance.

    ``allowed[i, j]`` marks the station/test-point pairs the optimiser may
    use; all other x_ij are fixed at 0.
    """
    efficiency: np.ndarray
    static_costs: np.ndarray
    demand: np.ndarray
    resource_units: int
    radiated_slope: Optional[np.ndarray] = None
    radiated_offset: Optional[np.ndarray] = None
    epsilon: float = DEFAULT_EPSILON
    allowed: Optional[np.ndarray] = None
    scenario: object = None
    efficiency_mode: str = "worst-case"

    def __post_init__(self):
        omega = np.array(self.efficiency, dtype=float)
        if omega.ndim != 2:
            raise ValueError(f"efficiency must be an M x N matrix, got shape {omega.shape}")
        m, n = omega.shape
        static = np.broadcast_to(np.asarray(self.static_costs, dtype=float), (m,)).copy()
        demand = np.broadcast_to(np.asarray(self.demand, dtype=float), (n,)).copy()
        slope = np.zeros(m) if self.radiated_slope is None else \
            np.broadcast_to(np.asarray(self.radiated_slope, dtype=float), (m,)).copy()
        offset = np.zeros(m) if self.radiated_offset is None else \
            np.broadcast_to(np.asarray(self.radiated_offset, dtype=float), (m,)).copy()
        allowed = np.ones((m, n), dtype=bool) if self.allowed is None else \
            np.array(self.allowed, dtype=bool)

        if allowed.shape != (m, n):
            raise ValueError(f"allowed mask has shape {allowed.shape}, expected {(m, n)}")
        if np.any(~np.isfinite(omega[allowed])) or np.any(omega[allowed] <= 0):
            raise ValueError("efficiency must be finite and strictly positive on allowed pairs")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if np.any(static < 0):
            raise ValueError("static costs must be nonnegative")
        if np.any(slope < 0):
            raise ValueError("radiated cost slopes must be nonnegative")
        if np.any(demand <= 0):
            raise ValueError("demands must be strictly positive")
        if self.resource_units < 1:
            raise ValueError(f"resource_units must be >= 1, got {self.resource_units}")
        orphans = np.nonzero(~allowed.any(axis=0))[0]
        if orphans.size:
            raise ValueError(f"test point {int(orphans[0])} has no allowed station")
        if self.efficiency_mode not in EFFICIENCY_MODES:
            raise ValueError(f"unknown efficiency mode {self.efficiency_mode!r}")

        for name, value in (("efficiency", omega), ("static_costs", static), ("demand", demand),
                            ("radiated_slope", slope), ("radiated_offset", offset),
                            ("allowed", allowed)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_scenario(cls, scenario, epsilon=DEFAULT_EPSILON, efficiency_mode="worst-case",
                      nominal_load=DEFAULT_NOMINAL_LOAD, radiated_slope=None, radiated_offset=0.0,
                      gain_floor=None):
        """Build a problem from a scenario.

        The default radiated cost is linear in load with slope P_i * K, the
        transmit power at full load.
        """
        if efficiency_mode == "worst-case":
            omega = worst_case_efficiency(scenario)
        elif efficiency_mode == "average":
            omega = average_efficiency(scenario, nominal_load)
        else:
            raise ValueError(f"unknown efficiency mode {efficiency_mode!r}; "
                             f"expected one of {EFFICIENCY_MODES}")
        if radiated_slope is None:
            radiated_slope = scenario.power * scenario.resource_units
        allowed = None
        if gain_floor is not None:
            allowed = scenario.gains >= gain_floor
            allowed[np.argmax(scenario.gains, axis=0), np.arange(scenario.num_test_points)] = True
            log.debug("gain floor %.3g keeps %d of %d station/test-point pairs",
                      gain_floor, int(allowed.sum()), allowed.size)
        return cls(efficiency=omega, static_costs=scenario.static_energy, demand=scenario.demand,
                   resource_units=scenario.resource_units, radiated_slope=radiated_slope,
                   radiated_offset=radiated_offset, epsilon=epsilon, allowed=allowed,
                   scenario=scenario, efficiency_mode=efficiency_mode)

    @property
    def num_stations(self):
        return self.efficiency.shape[0]

    @property
    def num_test_points(self):
        return self.efficiency.shape[1]

    @property
    def load_coefficients(self):
        """r_ij = d_j / (K omega_ij): load added to station i per unit of x_ij; inf where not allowed."""
        with np.errstate(divide="ignore"):
            r = self.demand[None, :] / (self.resource_units * self.efficiency)
        return np.where(self.allowed, r, np.inf)

    def loads(self, assignment):
        x = assignment.entries if isinstance(assignment, AssignmentMatrix) else np.asarray(assignment)
        r = np.where(self.allowed, self.load_coefficients, 0.0)
        return np.sum(r * x, axis=1)

    def radiated_energy(self, rho):
        return self.radiated_slope * np.asarray(rho) + self.radiated_offset


def surrogate_objective(problem, rho):
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (problem.num_stations,):
        raise ValueError(f"load vector must have length {problem.num_stations}, got shape {rho.shape}")
    if np.any(rho < 0):
        raise ValueError("loads must be nonnegative")
    eps = problem.epsilon
    count = np.log1p(rho / eps) / np.log1p(1.0 / eps)
    return float(problem.static_costs @ count + np.sum(problem.radiated_energy(rho)))


def _surrogate_gradient(problem, rho):
    eps = problem.epsilon
    return problem.static_costs / ((eps + rho) * np.log1p(1.0 / eps)) + problem.radiated_slope


def majorizer(problem, rho, rho_n):
    """First-order upper bound g(rho, rho_n) >= f(rho) with equality at rho = rho_n."""
    rho = np.asarray(rho, dtype=float)
    rho_n = np.asarray(rho_n, dtype=float)
    eps = problem.epsilon
    concave_at_n = problem.static_costs @ (np.log1p(rho_n / eps) / np.log1p(1.0 / eps))
    slope = problem.static_costs / ((eps + rho_n) * np.log1p(1.0 / eps))
    return float(concave_at_n + slope @ (rho - rho_n) + np.sum(problem.radiated_energy(rho)))


class AssignmentLP:
    """Constraint structure shared by every LP over the assignment variables.

    Variables are x_ij for allowed pairs of the given stations; rows are the
    capacity constraints sum_j r_ij x_ij <= capacity and the assignment
    constraints sum_i x_ij = 1.
    """

    def __init__(self, problem, stations=None, capacity=1.0):
        m, n = problem.num_stations, problem.num_test_points
        self.problem = problem
        self.stations = np.arange(m) if stations is None else np.asarray(stations, dtype=int)
        mask = np.zeros((m, n), dtype=bool)
        mask[self.stations] = problem.allowed[self.stations]
        self.rows, self.cols = np.nonzero(mask)
        r = problem.load_coefficients[self.rows, self.cols]
        self.coefficients = r

        station_row = {int(i): k for k, i in enumerate(self.stations)}
        k = len(self.rows)
        self.A_ub = np.zeros((self.stations.size, k))
        self.A_ub[[station_row[int(i)] for i in self.rows], np.arange(k)] = r
        self.b_ub = np.full(self.stations.size, float(capacity))
        self.A_eq = np.zeros((n, k))
        self.A_eq[self.cols, np.arange(k)] = 1.0
        self.b_eq = np.ones(n)

    def covers_all(self):
        return np.all(np.bincount(self.cols, minlength=self.problem.num_test_points) > 0)

    def solve(self, station_weights, basis=None, tol=1e-9):
        """Minimise sum_i station_weights[i] * rho_i; returns (x matrix, LPResult)."""
        c = np.asarray(station_weights, dtype=float)[self.rows] * self.coefficients
        result = lp_solve(c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, basis=basis, tol=tol)
        x = np.zeros((self.problem.num_stations, self.problem.num_test_points))
        x[self.rows, self.cols] = result.x
        return _normalise_columns(x), result


def _normalise_columns(x):
    x = np.clip(x, 0.0, 1.0)
    x[x < 1e-12] = 0.0
    return x / x.sum(axis=0, keepdims=True)


def capacity_lower_bound(problem, stations=None):
    """sum_j min_i r_ij over the given stations: a lower bound on the total load needed."""
    r = problem.load_coefficients
    if stations is not None:
        r = r[list(stations)]
    return float(np.sum(np.min(r, axis=0)))


@dataclass(frozen=True)
class RelaxedSolution:
    assignment: AssignmentMatrix
    load: LoadVector
    surrogate_objective: float
    iterations_used: int
    objective_history: tuple = ()


def mm_solve(problem, max_outer_iterations=DEFAULT_MM_ITERATIONS, inner_tolerance=1e-9,
             progress_tolerance=1e-9):
    """Minimise the log surrogate by majorisation-minimisation.

    The first LP is linearised at the loads of the uniform assignment; each
    later LP at the loads of the previous solution. The surrogate objective
    is asserted to be nonincreasing and the loop stops early once an
    iteration no longer improves it.
    """
    if max_outer_iterations < 1:
        raise ValueError(f"max_outer_iterations must be >= 1, got {max_outer_iterations}")
    m = problem.num_stations
    needed = capacity_lower_bound(problem)
    if needed > m:
        raise InfeasibleError(
            f"demand needs at least {needed:.3f} stations worth of capacity but only {m} exist",
            overloaded=range(m), detail=needed)

    lp = AssignmentLP(problem)
    share = problem.allowed / problem.allowed.sum(axis=0, keepdims=True)
    rho = problem.loads(share)
    basis = None
    history = []
    x = None
    for iteration in range(1, max_outer_iterations + 1):
        weights = _surrogate_gradient(problem, rho)
        try:
            x, result = lp.solve(weights, basis=basis, tol=inner_tolerance)
        except LPInfeasibleError as e:
            raise InfeasibleError(
                "total demand exceeds the relaxed capacity of the network", detail=e.detail) from e
        basis = result.basis
        rho = np.maximum(problem.loads(x), 0.0)
        value = surrogate_objective(problem, rho)
        log.debug("mm iteration %d: surrogate %.9g (%d pivots)", iteration, value, result.iterations)
        if history and value > history[-1] + DESCENT_SLACK * max(1.0, abs(history[-1])):
            raise InternalError(
                f"surrogate objective increased from {history[-1]:.12g} to {value:.12g} "
                f"at iteration {iteration}")
        history.append(value)
        if len(history) > 1 and history[-2] - value < progress_tolerance * max(1.0, abs(value)):
            break

    log.info("mm: surrogate %.6g after %d iteration(s), %d station(s) above %.0e load",
             history[-1], len(history), int(np.sum(rho >= DEFAULT_ROUNDING_THRESHOLD)),
             DEFAULT_ROUNDING_THRESHOLD)
    return RelaxedSolution(AssignmentMatrix(x, relaxed=True), LoadVector(rho), history[-1],
                           len(history), tuple(history))


@dataclass(frozen=True)
class SwitchOffPlan:
    active: tuple
    assignment: AssignmentMatrix
    load: LoadVector
    total_static_energy: float
    total_radiated_energy: float
    feasible: bool
    method: str = "mm"

    @property
    def active_count(self):
        return len(self.active)

    @property
    def total_energy(self):
        return self.total_static_energy + self.total_radiated_energy


def _build_plan(problem, active, x, method, verify=True):
    active = tuple(sorted(int(i) for i in active))
    x = np.asarray(x, dtype=float)
    inactive = np.setdiff1d(np.arange(problem.num_stations), active)
    if np.any(x[inactive] > 0):
        raise InternalError(f"{method}: inactive station carries assignment")
    relaxed = bool(np.any((x > 0) & (x < 1)))
    assignment = AssignmentMatrix(x, relaxed=relaxed)
    rho = np.maximum(problem.loads(assignment), 0.0)
    idx = list(active)
    plan = SwitchOffPlan(
        active=active,
        assignment=assignment,
        load=LoadVector(rho),
        total_static_energy=float(problem.static_costs[idx].sum()),
        total_radiated_energy=float(problem.radiated_energy(rho)[idx].sum()),
        feasible=bool(np.all(rho <= 1.0 + 1e-9)),
        method=method,
    )
    if verify and plan.feasible and problem.scenario is not None:
        check = verify_plan(plan, problem)
        if not check.feasible:
            log.warning("%s plan fails the coupled load check: %s", method, check.reason)
            plan = SwitchOffPlan(plan.active, plan.assignment, plan.load, plan.total_static_energy,
                                 plan.total_radiated_energy, False, method)
    return plan


def _is_integral(x, tol=1e-9):
    return bool(np.all((np.abs(x) <= tol) | (np.abs(x - 1.0) <= tol)))


def _greedy_place(problem, active, capacity):
    """Assign test points, largest demand first, to the active station with best efficiency.

    Equal demands are placed hardest first: the point whose cheapest
    active station needs the most load goes before the others.
    """
    r = problem.load_coefficients
    omega = np.where(problem.allowed, problem.efficiency, -np.inf)
    residual = np.full(problem.num_stations, capacity)
    is_active = np.zeros(problem.num_stations, dtype=bool)
    is_active[list(active)] = True
    hardest = np.min(np.where(is_active[:, None], r, np.inf), axis=0)
    choice = np.empty(problem.num_test_points, dtype=int)
    for j in np.lexsort((-hardest, -problem.demand)):
        fits = is_active & problem.allowed[:, j] & (r[:, j] <= residual)
        if not fits.any():
            return None, int(j)
        best = int(np.argmax(np.where(fits, omega[:, j], -np.inf)))
        choice[j] = best
        residual[best] -= r[best, j]
    return choice, None


def _drop_redundant(problem, active, choice, capacity):
    """Switch off active stations while the others can still carry every test point.

    Stations are tried emptiest first; a pass that switches nothing off ends
    the search, so the result is minimal against single removals.
    """
    r = problem.load_coefficients
    columns = np.arange(problem.num_test_points)
    active = set(active)
    removed = True
    while removed and len(active) > 1:
        removed = False
        placed = np.bincount(choice, weights=r[choice, columns], minlength=problem.num_stations)
        for i in sorted(active, key=lambda i: (placed[i], i)):
            if len(active) == 1:
                break
            trial, _ = _greedy_place(problem, active - {i}, capacity)
            if trial is None:
                continue
            log.debug("rounding: station %d is redundant (load %.4g), switching it off", i, placed[i])
            active.discard(i)
            choice = trial
            removed = True
    return active, choice


def round_assignments(relaxed, problem, threshold=DEFAULT_ROUNDING_THRESHOLD, prune_idle=False,
                      drop_redundant=False):
    """Turn a relaxed solution into a discrete switch-off plan.

    Stations whose relaxed load is below ``threshold`` are switched off and
    the test points are placed greedily on the rest. When a test point does
    not fit, the switched-off station with the largest relaxed load is
    switched back on and placement restarts. With ``prune_idle`` stations
    that end up serving nothing are switched off too.

    With ``drop_redundant`` the placed plan is then thinned: active stations
    are switched off one at a time, emptiest first, as long as greedy
    placement on the remaining ones still succeeds. An integral relaxed
    solution goes through the same pass instead of being returned as is.
    """
    x = relaxed.assignment.entries
    rho = relaxed.load.values
    capacity = 1.0 - CAPACITY_MARGIN
    if _is_integral(x) and np.all(problem.loads(x) <= capacity):
        x = np.round(x)
        if not drop_redundant:
            return _build_plan(problem, np.nonzero(x.sum(axis=1) > 0)[0], x, "mm")
        active = set(int(i) for i in np.nonzero(x.sum(axis=1) > 0)[0])
        choice = np.argmax(x, axis=0)
    else:
        active = set(int(i) for i in np.nonzero(rho >= threshold)[0])
        off = [int(i) for i in np.argsort(-rho, kind="stable") if int(i) not in active]
        while True:
            choice, stuck = _greedy_place(problem, active, capacity)
            if choice is not None:
                break
            if not off:
                raise InfeasibleError(
                    f"test point {stuck} cannot be placed even with every station active",
                    overloaded=sorted(active), detail=stuck)
            revived = off.pop(0)
            log.debug("rounding: test point %d does not fit, switching station %d back on",
                      stuck, revived)
            active.add(revived)

    if drop_redundant:
        before = len(active)
        active, choice = _drop_redundant(problem, active, choice, capacity)
        log.debug("rounding: %d of %d active station(s) kept after the redundancy pass",
                  len(active), before)
    x = np.zeros_like(x)
    x[choice, np.arange(problem.num_test_points)] = 1.0
    if prune_idle:
        active = set(int(i) for i in np.nonzero(x.sum(axis=1) > 0)[0])
    return _build_plan(problem, active, x, "mm")


def _subset_lp(problem, subset):
    """Cheapest relaxed assignment on ``subset`` or None if the subset cannot serve the demand."""
    lp = AssignmentLP(problem, stations=subset)
    if not lp.covers_all():
        return subset, None
    try:
        x, result = lp.solve(problem.radiated_slope)
    except LPInfeasibleError:
        return subset, None
    idx = list(subset)
    rho = problem.loads(x)
    energy = float(problem.static_costs[idx].sum() + problem.radiated_energy(rho)[idx].sum())
    return subset, (energy, x)


def _solve_subsets(problem, subsets, jobs):
    if jobs == 1 or len(subsets) < 2:
        return [_subset_lp(problem, s) for s in subsets]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_subset_lp, itertools.repeat(problem), subsets,
                             chunksize=max(1, len(subsets) // (4 * jobs))))


def exact_solve(problem, max_stations_for_exact=DEFAULT_EXACT_LIMIT, jobs=1):
    """Fewest active stations for which a relaxed assignment exists.

    Subsets are enumerated by size; each is tested with one LP. Among the
    feasible subsets of the smallest size the one with the lowest total
    energy wins, ties going to the lexicographically first subset.
    """
    m = problem.num_stations
    if m > max_stations_for_exact:
        raise ExactLimitError(
            f"exact enumeration refused for {m} stations (limit {max_stations_for_exact})",
            stations=m, limit=max_stations_for_exact)
    jobs = jobs if jobs >= 1 else (os.cpu_count() or 1)
    r = problem.load_coefficients
    for size in range(1, m + 1):
        candidates = []
        for subset in itertools.combinations(range(m), size):
            need = np.min(r[list(subset)], axis=0)
            if np.all(np.isfinite(need)) and need.sum() <= size:
                candidates.append(subset)
        if not candidates:
            continue
        results = _solve_subsets(problem, candidates, jobs)
        best = None
        for subset, outcome in results:
            if outcome is None:
                continue
            if best is None or outcome[0] < best[1] - 1e-9 * max(1.0, abs(best[1])):
                best = (subset, outcome[0], outcome[1])
        log.debug("exact: size %d, %d candidate subset(s), %s", size, len(candidates),
                  "feasible" if best else "none feasible")
        if best is not None:
            # loads of the oracle may sit exactly at capacity, so no coupled-model margin check
            return _build_plan(problem, best[0], best[2], "exact", verify=False)
    raise InfeasibleError("no subset of stations can serve the demand", overloaded=range(m))


def verify_plan(plan, problem, tolerance=1e-9, max_iterations=ifcalc.DEFAULT_MAX_ITERATIONS):
    """Check a plan on the coupled load model with its inactive stations switched off."""
    if problem.scenario is None:
        raise ValueError("plan verification needs a problem built from a scenario")
    return loadmodel.feasibility_check(problem.scenario, plan.assignment, tolerance=tolerance,
                                       max_iterations=max_iterations)


@dataclass(frozen=True)
class EnergyReport:
    active_count: int
    total_static_energy: float
    total_radiated_energy: float
    loads: tuple = field(default=())
    feasible: bool = True

    @property
    def total_energy(self):
        return self.total_static_energy + self.total_radiated_energy


def energy_report(plan, problem):
    if len(plan.load) != problem.num_stations:
        raise ValueError("plan and problem have different station counts")
    return EnergyReport(
        active_count=plan.active_count,
        total_static_energy=plan.total_static_energy,
        total_radiated_energy=plan.total_radiated_energy,
        loads=tuple(float(v) for v in plan.load.values),
        feasible=plan.feasible,
    )


def plan_to_dict(plan, problem=None):
    data = {
        "schema": PLAN_SCHEMA,
        "method": plan.method,
        "feasible": plan.feasible,
        "active": list(plan.active),
        "relaxed": plan.assignment.relaxed,
        "loads": [float(v) for v in plan.load.values],
        "total_static_energy": plan.total_static_energy,
        "total_radiated_energy": plan.total_radiated_energy,
    }
    if plan.assignment.relaxed:
        data["assignment"] = [[float(v) for v in row] for row in plan.assignment.entries]
    else:
        data["serving"] = [int(i) for i in np.argmax(plan.assignment.entries, axis=0)]
    if problem is not None:
        data["problem"] = {"epsilon": problem.epsilon, "efficiency_mode": problem.efficiency_mode}
    return data


def plan_from_dict(data, path=None):
    if not isinstance(data, dict) or data.get("schema") != PLAN_SCHEMA:
        raise ScenarioFormatError(f"not a {PLAN_SCHEMA} document", path=path)
    try:
        loads = LoadVector(np.array(data["loads"], dtype=float))
        if data["relaxed"]:
            assignment = AssignmentMatrix(np.array(data["assignment"], dtype=float), relaxed=True)
        else:
            assignment = AssignmentMatrix.from_choice(data["serving"], len(loads))
        return SwitchOffPlan(
            active=tuple(int(i) for i in data["active"]),
            assignment=assignment,
            load=loads,
            total_static_energy=float(data["total_static_energy"]),
            total_radiated_energy=float(data["total_radiated_energy"]),
            feasible=bool(data["feasible"]),
            method=str(data.get("method", "mm")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioFormatError(f"malformed plan: {e}", path=path) from e


def save_plan(plan, path, problem=None):
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    tmp_path.write_text(json.dumps(plan_to_dict(plan, problem), indent=2) + "\n", encoding="utf-8")
    tmp_path.replace(path)
    return path


def load_plan(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioFormatError(f"cannot read plan {path}: {e}", path=path) from e
    return plan_from_dict(data, path=path)
