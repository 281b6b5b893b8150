"""
Command-line front end.

    gridbooster run      --network DIR --config FILE [--model M] [--tatl-factor X] ...
    gridbooster sweep    --network DIR --config FILE --axis {co2|tatl|nbcost} --values a,b,c
    gridbooster compare  --network DIR --config FILE
    gridbooster reduce   --source DIR --out DIR --k N [--seed N]

Exit codes: 0 ok, 1 input error, 2 infeasible, 3 unbounded, 4 solver error,
5 verification failed, 6 dominance violation.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import PlanningModel, ScenarioConfig, get_settings
from app.core.exceptions import ConfigurationError, ExitCode, PlanningError
from app.services.scenario_runner import SweepAxis, SweepSpec, compare_strategies, run_scenario, run_sweep
from app.services.snapshot_reduction import reduce_time_series

logger = logging.getLogger(__name__)


def _parse_values(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid value list '{text}'") from e


def _scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--network", required=True, type=Path, help="Network directory")
    parser.add_argument("--config", type=Path, help="Scenario TOML file")
    parser.add_argument("--model", choices=[m.value for m in PlanningModel])
    parser.add_argument("--tatl-factor", type=float)
    parser.add_argument("--co2-reduction", type=float)
    parser.add_argument("--co2-cap", type=float)
    parser.add_argument("--nb-cost", type=float, help="Booster capital cost, up and down (€/MW/a)")
    parser.add_argument("--backend", help="LP backend (highs, highs-ds, highs-ipm)")
    parser.add_argument("--out", type=Path, help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridbooster", description="N-1 network booster planning")
    parser.add_argument("--log-level", help="Logging level (default from settings)")
    parser.add_argument("--seed", type=int, default=0, help="Random seed for snapshot reduction")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Solve one scenario")
    _scenario_arguments(run)
    run.add_argument("--dump-lp", action="store_true", help="Write the LP files next to the results")
    run.add_argument("--dump-sensitivities", action="store_true", help="Write ptdf.csv and lodf.csv")

    sweep = sub.add_parser("sweep", help="Sweep one scenario parameter")
    _scenario_arguments(sweep)
    sweep.add_argument("--axis", required=True, choices=["co2", "tatl", "nbcost"] + [a.value for a in SweepAxis])
    sweep.add_argument("--values", required=True, type=_parse_values)
    sweep.add_argument("--models", type=lambda text: [PlanningModel(m) for m in text.split(",")],
                       help="Comma-separated subset of preventive,sequential,simultaneous")
    sweep.add_argument("--workers", type=int, help="Parallel sweep points")

    compare = sub.add_parser("compare", help="Compare preventive, sequential and simultaneous")
    _scenario_arguments(compare)

    reduce = sub.add_parser("reduce", help="Reduce full-year series to weighted snapshots")
    reduce.add_argument("--source", required=True, type=Path, help="Directory with full-year loads/availability")
    reduce.add_argument("--out", required=True, type=Path)
    reduce.add_argument("--k", required=True, type=int, help="Number of representative hours")
    reduce.add_argument("--period-hours", type=float)
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    """Scenario file (or defaults) with command-line overrides applied"""
    overrides = {
        "model": args.model,
        "tatl_factor": args.tatl_factor,
        "co2_reduction": args.co2_reduction,
        "co2_cap": args.co2_cap,
    }
    if args.nb_cost is not None:
        overrides["nb_capital_cost_up"] = args.nb_cost
        overrides["nb_capital_cost_down"] = args.nb_cost
    if args.config is not None:
        return ScenarioConfig.from_toml(args.config, **overrides)
    return ScenarioConfig().with_overrides(**overrides)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or Path(get_settings().output_dir)


def _run(args: argparse.Namespace) -> ExitCode:
    config = load_config(args)
    outcome = run_scenario(
        args.network, config, _out_dir(args), backend=args.backend,
        dump_lp=args.dump_lp, dump_sens=args.dump_sensitivities,
    )
    costs = outcome.plan.cost_report
    print(f"{config.name}: {outcome.plan.model.value} total {costs.total:.2f} €/a "
          f"(NB up {outcome.plan.total_nb_up:.3f} MW, down {outcome.plan.total_nb_down:.3f} MW) "
          f"-> {outcome.out_dir}")
    mixed = outcome.plan.mixed_nb_buses()
    if mixed:
        print(f"warning: up and down booster capacity at {', '.join(mixed)}")
    return ExitCode.OK


def _sweep(args: argparse.Namespace) -> ExitCode:
    base = load_config(args)
    try:
        spec = SweepSpec(
            axis=SweepAxis.parse(args.axis),
            values=args.values,
            base=base,
            **({"models": args.models} if args.models else {}),
        )
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    rows = run_sweep(args.network, spec, _out_dir(args) / base.name, workers=args.workers,
                     backend=args.backend)
    for row in rows:
        total = f"{row.total:.2f}" if row.total is not None else row.status
        print(f"{row.axis}={row.value:g} {row.model.value}: {total}")
    return ExitCode.OK


def _compare(args: argparse.Namespace) -> ExitCode:
    config = load_config(args)
    rows = compare_strategies(args.network, config, _out_dir(args), backend=args.backend)
    for row in rows:
        print(f"{row.model.value:>13}: total {row.total:.2f} €/a, NB {row.nb_capacity_up + row.nb_capacity_down:.3f} MW")
    return ExitCode.OK


def _reduce(args: argparse.Namespace) -> ExitCode:
    selection = reduce_time_series(args.source, args.out, args.k, seed=args.seed, period_hours=args.period_hours)
    print(f"{len(selection.hours)} snapshots written to {args.out}")
    return ExitCode.OK


COMMANDS = {"run": _run, "sweep": _sweep, "compare": _compare, "reduce": _reduce}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, (args.log_level or settings.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    try:
        return int(COMMANDS[args.command](args))
    except PlanningError as e:
        logger.error(f"❌ {e}")
        return int(e.exit_code)


if __name__ == "__main__":
    sys.exit(main())
