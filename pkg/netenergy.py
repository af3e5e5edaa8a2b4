#!/usr/bin/env python3
"""Plan base-station switch-off and provision traffic for a cellular network."""

import argparse
import csv
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

import energyopt
import ifcalc
import scenario as scn
import traffic
from errors import ConfigError, ExactLimitError, InfeasibleError, NetEnergyError

try:
    import yaml
    HAS_YAML = True
except ImportError:
    HAS_YAML = False

log = logging.getLogger("netenergy")

KNOWN_CONFIG_KEYS = {
    "output_dir": {"type": str},
    "jobs": {"type": int},
    "quiet": {"type": bool},
    "verify": {"type": bool},
    "seed": {"type": int},
    "stations": {"type": int},
    "test_points": {"type": int},
    "demand_bps": {"type": float},
    "bandwidth_hz": {"type": float},
    "resource_units": {"type": int},
    "tx_power_w": {"type": float},
    "static_energy_w": {"type": float},
    "sinr_scaling": {"type": float},
    "noise_figure_db": {"type": float},
    "spectral_efficiency_cap": {"type": float},
    "inter_site_distance_m": {"type": float},
    "epsilon": {"type": float},
    "mm_iterations": {"type": int},
    "rounding_threshold": {"type": float},
    "drop_redundant": {"type": bool},
    "radiated_slope": {"type": float},
    "efficiency": {"type": str, "choices": list(energyopt.EFFICIENCY_MODES)},
    "max_path_loss_db": {"type": float},
    "exact_limit": {"type": int},
    "tolerance": {"type": float},
    "max_iterations": {"type": int},
    "train_weeks": {"type": int},
    "horizon_hours": {"type": int},
    "kernel": {"type": str, "choices": sorted(traffic.KERNELS)},
    "quantile": {"type": float},
    "risk": {"type": float},
}

DEFAULT_SOLVE_MAX_PATH_LOSS_DB = 130.0


def load_config(config_path):
    """Load a YAML config file.

    Returns a dict of config values suitable for argparse set_defaults().
    Returns an empty dict if the file is missing or PyYAML is not installed.
    Bad keys and values are reported and skipped.
    """
    if config_path is None or not config_path.is_file():
        return {}

    if not HAS_YAML:
        log.warning("%s found but pyyaml is not installed, ignoring config file", config_path)
        return {}

    try:
        with open(config_path) as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {config_path}: {e}") from e

    if not isinstance(raw, dict):
        if raw is not None:
            log.warning("%s is not a YAML mapping, ignoring", config_path)
        return {}

    defaults = {}
    for key, value in raw.items():
        if key not in KNOWN_CONFIG_KEYS:
            log.warning("unknown config key '%s', ignoring", key)
            continue

        spec = KNOWN_CONFIG_KEYS[key]
        expected_type = spec["type"]

        # YAML writes 100e6 as a string and 40 as an int; accept ints for floats
        if expected_type is float and isinstance(value, (int, str)) and not isinstance(value, bool):
            try:
                value = float(value)
            except ValueError:
                pass
        if expected_type is bool and not isinstance(value, bool):
            log.warning("config key '%s' should be bool, got %s, ignoring", key, type(value).__name__)
            continue
        if not isinstance(value, expected_type) or (expected_type is int and isinstance(value, bool)):
            log.warning("config key '%s' should be %s, got %s, ignoring",
                        key, expected_type.__name__, type(value).__name__)
            continue

        if "choices" in spec and value not in spec["choices"]:
            log.warning("config key '%s' must be one of %s, got '%s', ignoring",
                        key, spec["choices"], value)
            continue

        defaults[key] = value

    return defaults


def parse_seeds(text):
    """'7', '1-20' or '1,2,5' -> sorted list of seeds."""
    seeds = set()
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = part.split("-", 1)
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise ValueError(f"empty range {part}")
                seeds.update(range(lo, hi + 1))
            else:
                seeds.add(int(part))
    except ValueError as e:
        raise ConfigError(f"bad seed list {text!r}: {e}") from e
    if not seeds:
        raise ConfigError(f"seed list {text!r} is empty")
    return sorted(seeds)


def parse_int_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"bad integer list {text!r}: {e}") from e
    if not values or min(values) < 1:
        raise ConfigError(f"integer list {text!r} must contain positive values")
    return values


def radio_params(args):
    return scn.RadioParams(
        demand_bps=args.demand_bps,
        bandwidth_hz=args.bandwidth_hz,
        resource_units=args.resource_units,
        tx_power_w=args.tx_power_w,
        static_energy_w=args.static_energy_w,
        sinr_scaling=args.sinr_scaling,
        noise_figure_db=args.noise_figure_db,
        spectral_efficiency_cap=args.spectral_efficiency_cap,
        inter_site_distance_m=args.inter_site_distance_m,
    )


def gain_floor(max_path_loss_db):
    return None if max_path_loss_db is None else 10.0 ** (-max_path_loss_db / 10.0)


def output_path(args, name):
    output_dir = Path(args.output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {output_dir}: {e}") from e
    return output_dir / name


def write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e
    return path


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.9g}"
    return value


# -- generate -----------------------------------------------------------------

def cmd_generate(args):
    try:
        scenario = scn.generate_hex_scenario(args.stations, args.test_points, args.seed, radio_params(args))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    path = Path(args.output) if args.output else output_path(args, "scenario.json")
    try:
        scn.save_scenario(scenario, path)
    except OSError as e:
        raise ConfigError(f"cannot write scenario {path}: {e}") from e
    print(f"Scenario: M={scenario.num_stations} stations, N={scenario.num_test_points} test points, "
          f"region {scenario.region_size:.1f} m square (seed {args.seed})")
    print(f"Saved scenario to {path}")
    return 0


# -- solve --------------------------------------------------------------------

def build_problem(scenario, args, max_path_loss_db=None):
    return energyopt.SwitchOffProblem.from_scenario(
        scenario, epsilon=args.epsilon, efficiency_mode=args.efficiency,
        gain_floor=gain_floor(max_path_loss_db))


def cmd_solve(args):
    scenario = scn.load_scenario(args.scenario)
    max_loss = args.max_path_loss_db
    if max_loss is None and not args.exact:
        max_loss = DEFAULT_SOLVE_MAX_PATH_LOSS_DB
    try:
        problem = build_problem(scenario, args, max_loss)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    start = time.perf_counter()
    if args.exact:
        plan = energyopt.exact_solve(problem, args.exact_limit, jobs=resolve_jobs(args.jobs))
        iterations = None
    else:
        relaxed = energyopt.mm_solve(problem, args.mm_iterations, inner_tolerance=args.tolerance)
        plan = energyopt.round_assignments(relaxed, problem, threshold=args.rounding_threshold,
                                           drop_redundant=args.drop_redundant)
        iterations = relaxed.iterations_used
    elapsed = time.perf_counter() - start

    report = energyopt.energy_report(plan, problem)
    plan_path = energyopt.save_plan(plan, output_path(args, "plan.json"), problem)
    report_path = write_csv(
        output_path(args, "plan_report.csv"),
        ["station", "active", "load", "static_energy_w", "radiated_energy_w"],
        [[i, int(i in plan.active), _fmt(report.loads[i]),
          _fmt(float(problem.static_costs[i]) if i in plan.active else 0.0),
          _fmt(float(problem.radiated_energy(plan.load.values)[i]) if i in plan.active else 0.0)]
         for i in range(problem.num_stations)])

    print(f"\n{'='*60}")
    method = "exact enumeration" if args.exact else f"MM ({iterations} iteration(s)) + rounding"
    print(f"Solved with {method} in {elapsed:.2f} s")
    print(f"  Active stations: {report.active_count}/{problem.num_stations}")
    print(f"  Static energy:   {report.total_static_energy:.1f} W")
    print(f"  Radiated energy: {report.total_radiated_energy:.1f} W")
    print(f"  Max load:        {plan.load.max_load:.4f}")
    print(f"{'='*60}")
    print(f"Saved plan to {plan_path}")
    print(f"Saved report to {report_path}")

    if not plan.feasible:
        check = energyopt.verify_plan(plan, problem, tolerance=args.tolerance,
                                      max_iterations=args.max_iterations)
        raise InfeasibleError(f"plan is not feasible on the coupled load model: {check.reason}",
                              overloaded=check.overloaded)
    return 0


# -- compare ------------------------------------------------------------------

def compare_run(stations, test_points, seed, params, epsilon, mm_iterations, threshold,
                efficiency, exact_limit, radiated_slope=0.0, drop_redundant=True):
    """One (N, seed) cell of the comparison sweep; returns a raw CSV row as a dict.

    The radiated slope defaults to 0, so both solvers minimise static
    energy only.
    """
    scenario = scn.generate_hex_scenario(stations, test_points, seed, params)
    problem = energyopt.SwitchOffProblem.from_scenario(scenario, epsilon=epsilon,
                                                       efficiency_mode=efficiency,
                                                       radiated_slope=radiated_slope)
    start = time.perf_counter()
    relaxed = energyopt.mm_solve(problem, mm_iterations)
    plan = energyopt.round_assignments(relaxed, problem, threshold=threshold,
                                       drop_redundant=drop_redundant)
    time_mm = time.perf_counter() - start
    start = time.perf_counter()
    exact = energyopt.exact_solve(problem, exact_limit)
    time_exact = time.perf_counter() - start
    return {
        "seed": seed,
        "N": test_points,
        "active_mm": plan.active_count,
        "active_exact": exact.active_count,
        "feasible_mm": plan.feasible,
        "time_mm_ms": 1000.0 * time_mm,
        "time_exact_ms": 1000.0 * time_exact,
    }


def mean_ci(values):
    """Mean and half-width of the 95% interval, 1.96 * standard error."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(1.96 * values.std(ddof=1) / math.sqrt(values.size))


def resolve_jobs(jobs):
    return jobs if jobs >= 1 else (os.cpu_count() or 1)


def cmd_compare(args):
    seeds = parse_seeds(args.seeds)
    sizes = parse_int_list(args.sweep)
    if args.stations > args.exact_limit:
        raise ExactLimitError(
            f"compare needs M <= exact_limit ({args.stations} > {args.exact_limit})",
            stations=args.stations, limit=args.exact_limit)
    if args.radiated_slope < 0:
        raise ConfigError(f"radiated slope must be >= 0, got {args.radiated_slope}")
    params = radio_params(args)
    cells = [(n, seed) for n in sizes for seed in seeds]
    settings = (params, args.epsilon, args.mm_iterations, args.rounding_threshold,
                args.efficiency, args.exact_limit, args.radiated_slope, args.drop_redundant)
    jobs = resolve_jobs(args.jobs)
    rows = []
    skipped = []

    print(f"Comparing MM against exact enumeration: M={args.stations}, N in {sizes}, "
          f"{len(seeds)} seed(s)")
    if jobs == 1:
        for i, (n, seed) in enumerate(cells, 1):
            try:
                row = compare_run(args.stations, n, seed, *settings)
            except InfeasibleError as e:
                log.warning("N=%d seed=%d skipped: %s", n, seed, e)
                skipped.append((n, seed))
                continue
            rows.append(row)
            if not args.quiet:
                print(f"  [{i}/{len(cells)}] N={n} seed={seed}: "
                      f"mm={row['active_mm']} exact={row['active_exact']}")
    else:
        print(f"Running {len(cells)} instance(s) with {jobs} workers...")
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(compare_run, args.stations, n, seed, *settings): (n, seed)
                       for n, seed in cells}
            for future in as_completed(futures):
                n, seed = futures[future]
                try:
                    rows.append(future.result())
                except InfeasibleError as e:
                    log.warning("N=%d seed=%d skipped: %s", n, seed, e)
                    skipped.append((n, seed))
    rows.sort(key=lambda r: (r["N"], r["seed"]))

    for row in rows:
        if row["active_mm"] < row["active_exact"]:
            log.warning("N=%d seed=%d: MM uses fewer stations than the exact optimum", row["N"], row["seed"])

    raw_path = write_csv(
        output_path(args, "compare_raw.csv"),
        ["seed", "N", "active_mm", "active_exact", "time_mm_ms", "time_exact_ms"],
        [[r["seed"], r["N"], r["active_mm"], r["active_exact"],
          f"{r['time_mm_ms']:.3f}", f"{r['time_exact_ms']:.3f}"] for r in rows])

    summary = []
    for n in sizes:
        group = [r for r in rows if r["N"] == n]
        if not group:
            continue
        cols = [len(group)]
        for key in ("active_mm", "active_exact", "time_mm_ms", "time_exact_ms"):
            cols.extend(mean_ci([r[key] for r in group]))
        summary.append([n] + [_fmt(float(v)) if i else v for i, v in enumerate(cols)])
    summary_path = write_csv(
        output_path(args, "compare_summary.csv"),
        ["N", "seeds", "active_mm_mean", "active_mm_ci95", "active_exact_mean", "active_exact_ci95",
         "time_mm_ms_mean", "time_mm_ms_ci95", "time_exact_ms_mean", "time_exact_ms_ci95"],
        summary)

    print(f"\n{'='*60}")
    for line in summary:
        print(f"  N={line[0]:>4}: active mm {float(line[2]):.2f}, exact {float(line[4]):.2f}")
    if skipped:
        print(f"  Skipped {len(skipped)} infeasible instance(s)")
    print(f"{'='*60}")
    print(f"Saved raw results to {raw_path}")
    print(f"Saved summary to {summary_path}")
    return 0


# -- forecast / tolerance -----------------------------------------------------

def load_series(args):
    if args.input:
        return traffic.read_series_csv(args.input)
    try:
        return traffic.generate_synthetic_traffic(args.kind, args.weeks, args.seed,
                                                  burstiness=args.burstiness)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def cmd_forecast(args):
    if args.train_weeks < 1:
        raise ConfigError(f"--train-weeks must be >= 1, got {args.train_weeks}")
    if args.horizon_hours < 1:
        raise ConfigError(f"--horizon-hours must be >= 1, got {args.horizon_hours}")
    series = load_series(args)
    train = int(round(args.train_weeks * traffic.HOURS_PER_WEEK / series.cadence_hours))
    horizon = int(round(args.horizon_hours / series.cadence_hours))
    if len(series) < max(train, traffic.MIN_TRAINING_SAMPLES):
        raise ConfigError(f"series has {len(series)} samples, fewer than the {train}-sample "
                          f"training window")

    try:
        model = traffic.gp_fit(series, args.kernel, train_window=train, jobs=resolve_jobs(args.jobs))
        forecast = traffic.gp_predict(model, horizon)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    held_out = series.values[train:train + horizon]
    actual = held_out if held_out.size == horizon else None

    path = traffic.write_forecast_csv(forecast, output_path(args, "forecast.csv"), actual=actual)
    print(f"GP fit ({args.kernel}) on {train} samples: log-likelihood {model.log_likelihood:.2f}")
    for key, value in model.hyperparameters.items():
        print(f"  {key} = {value:g}")
    print(f"Saved forecast to {path}")

    if actual is not None:
        coverage = traffic.forecast_coverage(forecast, actual)
        summary_path = write_csv(
            output_path(args, "forecast_summary.csv"),
            ["kernel", "train_samples", "horizon", "log_likelihood", "coverage_95"]
            + list(model.hyperparameters),
            [[args.kernel, train, horizon, _fmt(model.log_likelihood), _fmt(coverage)]
             + [_fmt(float(v)) for v in model.hyperparameters.values()]])
        print(f"Held-out coverage of the 95% band: {coverage:.3f}")
        print(f"Saved coverage summary to {summary_path}")
    else:
        print("No held-out data past the training window, coverage not computed")
    return 0


def cmd_tolerance(args):
    series = load_series(args)
    try:
        levels = traffic.hourly_provisioning_levels(series, args.quantile, args.risk)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    rows = []
    for hl in levels:
        r = hl.result
        rows.append([hl.hour, r.n, r.k, _fmt(r.level), _fmt(r.exceedance_probability),
                     _fmt(r.shortfall_probability), int(r.unattainable), _fmt(r.prediction_coverage),
                     "" if hl.iid is None else _fmt(hl.iid.statistic),
                     "" if hl.iid is None else int(hl.iid.reject)])
    path = write_csv(
        output_path(args, "tolerance.csv"),
        ["hour", "n", "k", "level", "exceedance_probability", "shortfall_probability",
         "unattainable", "prediction_coverage", "turning_point_z", "iid_rejected"],
        rows)
    unattainable = sum(1 for hl in levels if hl.result.unattainable)
    print(f"Provisioning levels for p={args.quantile}, risk={args.risk} over {len(levels)} hour(s)")
    if unattainable:
        print(f"  Risk target unattainable for {unattainable} hour(s); sample maximum used")
    print(f"Saved levels to {path}")
    return 0


# -- argument parsing ---------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (default: config.yaml next to this script)")
    common.add_argument("--output-dir", dest="output_dir", default="output", help="Directory for output files (default: output)")
    common.add_argument("-j", "--jobs", type=int, default=1, help="Worker processes, 0 = CPU count (default: 1)")
    common.add_argument("-q", "--quiet", action="store_true", help="Only print warnings and the final summary")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    common.add_argument("--verify", action="store_true", help="Check every mapping evaluation against its declared bound")
    common.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")

    radio = argparse.ArgumentParser(add_help=False)
    defaults = scn.RadioParams()
    radio.add_argument("--demand-bps", dest="demand_bps", type=float, default=defaults.demand_bps)
    radio.add_argument("--bandwidth-hz", dest="bandwidth_hz", type=float, default=defaults.bandwidth_hz)
    radio.add_argument("--resource-units", dest="resource_units", type=int, default=defaults.resource_units)
    radio.add_argument("--tx-power-w", dest="tx_power_w", type=float, default=defaults.tx_power_w)
    radio.add_argument("--static-energy-w", dest="static_energy_w", type=float, default=defaults.static_energy_w)
    radio.add_argument("--sinr-scaling", dest="sinr_scaling", type=float, default=defaults.sinr_scaling)
    radio.add_argument("--noise-figure-db", dest="noise_figure_db", type=float, default=defaults.noise_figure_db)
    radio.add_argument("--spectral-efficiency-cap", dest="spectral_efficiency_cap", type=float, default=None)
    radio.add_argument("--inter-site-distance-m", dest="inter_site_distance_m", type=float,
                       default=defaults.inter_site_distance_m)

    optim = argparse.ArgumentParser(add_help=False)
    optim.add_argument("--epsilon", type=float, default=energyopt.DEFAULT_EPSILON, help="Surrogate parameter (default: 0.01)")
    optim.add_argument("--mm-iterations", dest="mm_iterations", type=int, default=energyopt.DEFAULT_MM_ITERATIONS)
    optim.add_argument("--rounding-threshold", dest="rounding_threshold", type=float,
                       default=energyopt.DEFAULT_ROUNDING_THRESHOLD)
    optim.add_argument("--keep-redundant", dest="drop_redundant", action="store_false",
                       help="Skip switching off stations the rounded plan can do without")
    optim.add_argument("--efficiency", choices=energyopt.EFFICIENCY_MODES, default="worst-case")
    optim.add_argument("--exact-limit", dest="exact_limit", type=int, default=energyopt.DEFAULT_EXACT_LIMIT)
    optim.add_argument("--tolerance", type=float, default=1e-9, help="Solver tolerance (default: 1e-9)")
    optim.add_argument("--max-iterations", dest="max_iterations", type=int,
                       default=ifcalc.DEFAULT_MAX_ITERATIONS)

    series = argparse.ArgumentParser(add_help=False)
    series.add_argument("--input", type=Path, help="Two-column hour,value CSV (default: synthetic)")
    series.add_argument("--kind", choices=["voice", "data"], default="voice")
    series.add_argument("--weeks", type=int, default=4, help="Synthetic weeks to generate (default: 4)")
    series.add_argument("--burstiness", type=float, default=0.0, help="Data bursts per day (default: 0)")

    parser = argparse.ArgumentParser(
        description=__doc__,
        epilog="Precedence: command-line flags > config file > built-in defaults. "
               "Exit codes: 0 success, 2 config/parse error, 3 infeasible, 4 numerical failure.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common, radio], help="Generate a hexagonal scenario")
    p.add_argument("--stations", type=int, default=100, help="Base stations M (default: 100)")
    p.add_argument("--test-points", dest="test_points", type=int, default=500, help="Test points N (default: 500)")
    p.add_argument("-o", "--output", help="Scenario path (default: <output-dir>/scenario.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", parents=[common, optim], help="Compute a switch-off plan")
    p.add_argument("scenario", type=Path, help="Scenario JSON file")
    p.add_argument("--exact", action="store_true", help="Use exact enumeration instead of MM")
    p.add_argument("--max-path-loss-db", dest="max_path_loss_db", type=float, default=None,
                   help=f"Ignore links with more path loss (default: {DEFAULT_SOLVE_MAX_PATH_LOSS_DB:g} for MM)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", parents=[common, radio, optim], help="MM against exact enumeration")
    p.add_argument("--stations", type=int, default=6, help="Base stations M (default: 6)")
    p.add_argument("--sweep", default="10,15,20", help="Comma-separated test point counts (default: 10,15,20)")
    p.add_argument("--seeds", default="1-20", help="Seeds as '1-20' or '1,2,3' (default: 1-20)")
    p.add_argument("--radiated-slope", dest="radiated_slope", type=float, default=0.0,
                   help="Radiated energy per unit load in W (default: 0, static energy only)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("forecast", parents=[common, series], help="GP traffic forecast")
    p.add_argument("--train-weeks", dest="train_weeks", type=int, default=3)
    p.add_argument("--horizon-hours", dest="horizon_hours", type=int, default=traffic.HOURS_PER_WEEK)
    p.add_argument("--kernel", choices=sorted(traffic.KERNELS), default="periodic")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("tolerance", parents=[common, series], help="Per-hour provisioning levels")
    p.add_argument("--quantile", type=float, default=0.9, help="Target quantile p (default: 0.9)")
    p.add_argument("--risk", type=float, default=0.05, help="Accepted shortfall probability (default: 0.05)")
    p.set_defaults(func=cmd_tolerance)

    return parser, sub


def main(argv=None):
    script_dir = Path(__file__).resolve().parent
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    pre.add_argument("-v", "--verbose", action="store_true")
    pre.add_argument("-q", "--quiet", action="store_true")
    known, _ = pre.parse_known_args(argv)

    level = logging.DEBUG if known.verbose else logging.WARNING if known.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

    parser, sub = build_parser()
    try:
        config = load_config(known.config or script_dir / "config.yaml")
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    if known.config is not None and not known.config.is_file():
        print(f"Error: config file not found: {known.config}", file=sys.stderr)
        return ConfigError.exit_code
    if config:
        for subparser in sub.choices.values():
            subparser.set_defaults(**config)

    args = parser.parse_args(argv)
    if config.get("quiet") and not known.verbose:
        logging.getLogger().setLevel(logging.WARNING)
    previous = ifcalc.verification_enabled()
    if args.verify:
        ifcalc.set_verification(True)

    try:
        return args.func(args)
    except NetEnergyError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        ifcalc.set_verification(previous)


if __name__ == "__main__":
    sys.exit(main())
