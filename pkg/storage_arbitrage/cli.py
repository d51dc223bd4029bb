"""Command line interface: storage-arbitrage <command> --config scenario.json

Every command prints (or writes with --out) a report made of a per-period
table and a summary, as CSV (summary lines prefixed with '#') or JSON. The
exit status is 0 only if every residual and convergence check passed.
"""

import argparse
import dataclasses
import glob
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from storage_arbitrage.data.price_series import TIMESTAMP_FORMAT, save_price_csv, synth_prices
from storage_arbitrage.data.scenario import Scenario, load_scenario
from storage_arbitrage.dispatch.dispatchers import CERTIFICATE_TOL, binding_constraints, optimize_single
from storage_arbitrage.dispatch.sensitivity import sensitivity_capacity, sensitivity_rate
from storage_arbitrage.equilibrium import equilibria
from storage_arbitrage.equilibrium.assess_convergence import competition_study
from storage_arbitrage.exceptions import ConfigError
from storage_arbitrage.market.clearing import clear_two_period
from storage_arbitrage.market.price_functions import ResidualSupply
from storage_arbitrage.store.store import eff_map, traded_volume
from storage_arbitrage.welfare.ownership import consumer_owned_costs, generator_owned_costs, social_costs
from storage_arbitrage.welfare.surplus import surplus_delta_approx, surplus_delta_exact

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CLEARING_RESIDUAL_TOL = 1e-8


@dataclasses.dataclass
class RunReport:
    """Output of one command: scenario echo, per-period table and summary"""

    scenario: Dict[str, Any]
    table: pd.DataFrame
    summary: Dict[str, Any]
    ok: bool = True

    def render(self, fmt: str) -> str:
        if fmt == "json":
            document = {
                "scenario": self.scenario,
                "summary": self.summary,
                "periods": self.table.to_dict(orient="records"),
                "ok": self.ok,
            }
            return json.dumps(_plain(document), indent=2, sort_keys=True) + "\n"
        if fmt == "csv":
            lines = [f"# {key}: {json.dumps(_plain(value), sort_keys=True)}" for key, value in self.summary.items()]
            lines.append(f"# ok: {json.dumps(self.ok)}")
            return "\n".join(lines) + "\n" + self.table.to_csv(index=False, lineterminator="\n")
        raise ValueError(f'Invalid "format" {fmt}')


def cmd_optimize(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    if len(scenario.specs) != 1:
        raise ConfigError(f"optimize needs exactly one store, got n_stores={len(scenario.specs)}")
    spec = scenario.specs[0]
    sol = optimize_single(spec, scenario.price_functions)
    tol = CERTIFICATE_TOL if args.tol is None else args.tol
    summary = {
        "profit": sol.profit,
        "kkt_residual": sol.kkt_residual,
        "traded_volume": traded_volume(spec.efficiency, sol.flows),
        "binding": binding_constraints(spec, sol),
        "nonunique": sol.nonunique,
    }
    table = _period_table(scenario, [sol.schedule.levels], [sol.flows])
    return RunReport(_echo(scenario), table, summary, ok=sol.kkt_residual <= tol)


def cmd_nash(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    if args.n_list:
        return _competition_report(scenario, args)
    prices = scenario.price_functions
    if all(pf.is_linear for pf in prices):
        result = equilibria.nash_linear(scenario.specs, prices)
    else:
        result = equilibria.nash_best_response(scenario.specs, prices, tol=args.tol)
    return _equilibrium_report(scenario, result, args)


def cmd_coop(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    result = equilibria.aggregate_shortcut(scenario.specs, scenario.price_functions)
    method = "aggregate"
    if result is None:
        result = equilibria.cooperative(scenario.specs, scenario.price_functions)
        method = "coordinate_descent"
    report = _equilibrium_report(scenario, result, args)
    report.summary["method"] = method
    return report


def cmd_surplus(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    if scenario.demand is None:
        raise ConfigError('surplus needs "demand" in the scenario config')
    prices = scenario.price_functions
    if args.owner != "merchant":
        return _ownership_report(scenario, args)
    if len(scenario.specs) == 1:
        sol = optimize_single(scenario.specs[0], prices)
        schedules = [sol.schedule]
    else:
        schedules = equilibria.nash_linear(scenario.specs, prices).schedules
    h = sum(eff_map(spec.efficiency, s.flows) for spec, s in zip(scenario.specs, schedules))
    pbar = np.array([pf.pbar for pf in prices])
    slopes = np.array([pf.pslope for pf in prices])
    base_demand = np.array([float(d(p)) for d, p in zip(scenario.demand, pbar)])
    exact = surplus_delta_exact(scenario.demand, pbar + slopes * h, pbar)
    approx = surplus_delta_approx(h, slopes, base_demand)
    exact_half = surplus_delta_exact(scenario.demand, pbar + slopes * h / 2, pbar)
    approx_half = surplus_delta_approx(h / 2, slopes, base_demand)
    error, error_half = abs(exact - approx), abs(exact_half - approx_half)
    summary = {
        "surplus_delta_exact": exact,
        "surplus_delta_approx": approx,
        "halving_error_ratio": error / error_half if error_half > 0 else None,
    }
    table = _period_table(scenario, [s.levels for s in schedules], [s.flows for s in schedules])
    return RunReport(_echo(scenario), table, summary)


def cmd_sensitivity(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    if len(scenario.specs) != 1:
        raise ConfigError(f"sensitivity needs exactly one store, got n_stores={len(scenario.specs)}")
    spec, prices = scenario.specs[0], scenario.price_functions
    if args.target == "capacity":
        report = sensitivity_capacity(spec, prices, None, args.t0, args.delta)
    else:
        which = "in" if args.target == "rate_in" else "out"
        report = sensitivity_rate(spec, prices, None, args.t0, which, args.delta)
    changed = np.flatnonzero(report.flow_deltas)
    table = pd.DataFrame({"t": changed + 1, "flow_delta": report.flow_deltas[changed]})
    summary = {
        "t0": report.t0,
        "delta": report.delta,
        "changed_interval_before": report.changed_interval_before,
        "changed_interval_after": report.changed_interval_after,
        "objective_delta": report.objective_delta,
    }
    ok = max(report.base.kkt_residual, report.perturbed.kkt_residual) <= CERTIFICATE_TOL
    return RunReport(_echo(scenario), table, summary, ok=ok)


def cmd_clearing2p(args: argparse.Namespace) -> RunReport:
    R1 = ResidualSupply(intercept=args.r1[0], slope=args.r1[1])
    R2 = ResidualSupply(intercept=args.r2[0], slope=args.r2[1])
    clearing = clear_two_period(R1, R2, lambda p: args.supply_slope * max(p, 0.0))
    residual = max(
        abs(float(R1(clearing.p1)) - clearing.q),
        abs(float(R2(clearing.p2)) + clearing.q),
    )
    table = pd.DataFrame([dataclasses.asdict(clearing)])
    summary = {"residual": residual}
    echo = {"r1": list(args.r1), "r2": list(args.r2), "supply_slope": args.supply_slope}
    return RunReport(echo, table, summary, ok=residual <= CLEARING_RESIDUAL_TOL)


def cmd_synth(args: argparse.Namespace) -> RunReport:
    if args.out is None:
        raise ConfigError("synth needs --out")
    series = synth_prices(
        seed=0 if args.seed is None else args.seed,
        days=args.days,
        day_amp=args.day_amp,
        week_amp=args.week_amp,
        season_amp=args.season_amp,
        base=args.base,
        noise_sd=args.noise_sd,
    )
    save_price_csv(series, args.out)
    logger.info("Wrote %d prices to %s", len(series), args.out)
    return RunReport({}, pd.DataFrame(), {"periods": len(series), "path": args.out})


SCENARIO_COMMANDS = {
    "optimize": cmd_optimize,
    "nash": cmd_nash,
    "coop": cmd_coop,
    "surplus": cmd_surplus,
    "sensitivity": cmd_sensitivity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storage-arbitrage", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    parser.add_argument("--out", help="Write the report (or synth prices) to this path")
    parser.add_argument("--seed", type=int, help="Seed of synthetic prices, overriding the config")
    parser.add_argument("--tol", type=float, help="Residual tolerance for the exit status")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIO_COMMANDS:
        command = commands.add_parser(name, help=SCENARIO_COMMANDS[name].__name__.replace("cmd_", ""))
        source = command.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="Scenario JSON file")
        source.add_argument("--batch", help="Directory of scenario JSON files, run in parallel")
        if name == "nash":
            command.add_argument("--n-list", type=int, nargs="+", help="Store counts for a competition study")
        if name == "surplus":
            command.add_argument(
                "--owner", choices=("merchant", "consumer", "generator", "social"), default="merchant"
            )
        if name == "sensitivity":
            command.add_argument("--t0", type=int, required=True)
            command.add_argument("--delta", type=float, required=True)
            command.add_argument("--target", choices=("capacity", "rate_in", "rate_out"), default="capacity")
    clearing = commands.add_parser("clearing2p", help="two-period supply-function clearing")
    clearing.add_argument("--r1", type=float, nargs=2, required=True, metavar=("INTERCEPT", "SLOPE"))
    clearing.add_argument("--r2", type=float, nargs=2, required=True, metavar=("INTERCEPT", "SLOPE"))
    clearing.add_argument("--supply-slope", type=float, default=1.0, help="Stores bid slope * max(p, 0)")
    synth = commands.add_parser("synth", help="write synthetic half-hourly prices")
    synth.add_argument("--days", type=int, default=7)
    synth.add_argument("--day-amp", type=float, default=15.0)
    synth.add_argument("--week-amp", type=float, default=3.0)
    synth.add_argument("--season-amp", type=float, default=5.0)
    synth.add_argument("--base", type=float, default=50.0)
    synth.add_argument("--noise-sd", type=float, default=2.0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        if args.command in SCENARIO_COMMANDS and args.batch is not None:
            return _run_batch(args)
        report = _run(args, getattr(args, "config", None))
    except (OSError, ValueError, RuntimeError) as error:
        logger.error("%s", error)
        return 2
    if args.command != "synth":
        _emit(report.render(args.format), args.out)
    return 0 if report.ok else 1


def _run(args: argparse.Namespace, config: Optional[str]) -> RunReport:
    if args.command == "clearing2p":
        return cmd_clearing2p(args)
    if args.command == "synth":
        return cmd_synth(args)
    scenario = load_scenario(config, seed=args.seed)
    return SCENARIO_COMMANDS[args.command](scenario, args)


def _run_batch(args: argparse.Namespace) -> int:
    configs = sorted(glob.glob(os.path.join(args.batch, "*.json")))
    if not configs:
        raise ConfigError(f"No *.json scenario files in {args.batch}")
    outcomes = Parallel(n_jobs=-1)(delayed(_run_one)(args, config) for config in configs)
    for config, (text, ok) in zip(configs, outcomes):
        stem = os.path.splitext(os.path.basename(config))[0]
        if args.out is None:
            _emit(text, None)
        else:
            os.makedirs(args.out, exist_ok=True)
            _emit(text, os.path.join(args.out, f"{stem}.{args.format}"))
        if not ok:
            logger.warning("Checks failed for %s", config)
    return 0 if all(ok for _, ok in outcomes) else 1


def _run_one(args: argparse.Namespace, config: str):
    try:
        report = _run(args, config)
    except (OSError, ValueError, RuntimeError) as error:
        return f"# {config}: {error}\n", False
    return report.render(args.format), report.ok


def _competition_report(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    study = competition_study(scenario.specs[0], scenario.price_functions, args.n_list)
    table = pd.DataFrame(
        {
            "n": study.n_list,
            "total_profit": [study.total_profits[n] for n in study.n_list],
            "cooperative_profit": [study.cooperative_profits[n] for n in study.n_list],
            "law_profit": [study.law_profits[n] for n in study.n_list],
            "total_volume": [study.total_volumes[n] for n in study.n_list],
            "law_volume": [study.law_volumes[n] for n in study.n_list],
            "converged": [study.converged[n] for n in study.n_list],
        }
    )
    summary = {"n_list": study.n_list}
    return RunReport(_echo(scenario), table, summary, ok=all(study.converged.values()))


def _equilibrium_report(scenario: Scenario, result: equilibria.EquilibriumResult, args) -> RunReport:
    tol = equilibria.equilibrium_tol(result.profits) if args.tol is None else args.tol
    summary = {
        "mode": result.mode,
        "profits": result.profits,
        "total_profit": result.total_profit,
        "iterations": result.iterations,
        "br_residual": result.br_residual,
        "converged": result.converged,
        "nonunique": result.nonunique,
    }
    table = _period_table(scenario, [s.levels for s in result.schedules], result.flows)
    ok = result.converged and (result.mode == "cooperative" or result.br_residual <= tol)
    return RunReport(_echo(scenario), table, summary, ok=ok)


def _ownership_report(scenario: Scenario, args: argparse.Namespace) -> RunReport:
    if args.owner == "consumer":
        costs = consumer_owned_costs(scenario, scenario.demand)
    else:
        if scenario.generator is None:
            raise ConfigError(f'owner "{args.owner}" needs "generator" in the scenario config')
        build = generator_owned_costs if args.owner == "generator" else social_costs
        costs = build(scenario, scenario.generator, scenario.demand)
    sol = optimize_single(scenario.specs[0], scenario.price_functions, costs=costs)
    summary = {"owner": args.owner, "store_value": sol.profit, "kkt_residual": sol.kkt_residual}
    table = _period_table(scenario, [sol.schedule.levels], [sol.flows])
    return RunReport(_echo(scenario), table, summary, ok=sol.kkt_residual <= CERTIFICATE_TOL)


def _period_table(scenario: Scenario, levels: List[np.ndarray], flows: List[np.ndarray]) -> pd.DataFrame:
    prices = scenario.price_functions
    total = sum(eff_map(spec.efficiency, x) for spec, x in zip(scenario.specs, flows))
    columns = {
        "t": np.arange(1, scenario.T + 1),
        "timestamp": scenario.series.timestamps.strftime(TIMESTAMP_FORMAT),
        "pbar": scenario.series.pbar,
        "clearing_price": [float(pf(q)) for pf, q in zip(prices, total)],
    }
    for j, (s, x) in enumerate(zip(levels, flows)):
        columns[f"level_{j + 1}"] = s[1:]
        columns[f"flow_{j + 1}"] = x
    return pd.DataFrame(columns)


def _echo(scenario: Scenario) -> Dict[str, Any]:
    echo = {
        "T": scenario.T,
        "lambda": scenario.lam,
        "stores": [dataclasses.asdict(spec) for spec in scenario.specs],
    }
    if scenario.pslope is not None:
        echo["pslope"] = scenario.pslope.tolist()
    return echo


def _plain(value: Any) -> Any:
    """Convert numpy scalars, arrays and tuples to JSON-ready values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as f:
            f.write(text)


if __name__ == "__main__":
    sys.exit(main())
