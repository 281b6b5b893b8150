"""
Scenario Runner Service
Runs single scenarios, parameter sweeps and three-way strategy comparisons
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from app.core.config import PlanningModel, ScenarioConfig, get_settings
from app.core.exceptions import ExitCode, PlanningError, ScenarioFailure
from app.network.loader import load_network
from app.network.schemas import Network
from app.performance import StageTimer
from app.planning.models import ModelRunner
from app.planning.results import FLOAT_FORMAT, write_plan
from app.planning.schemas import PlanResult, VerificationReport
from app.planning.verify import verify_plan
from app.sensitivity.factors import SensitivitySet, dump_sensitivities

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
COMPARISON_FILE = "comparison.csv"
MODEL_ORDER = (PlanningModel.PREVENTIVE, PlanningModel.SEQUENTIAL, PlanningModel.SIMULTANEOUS)


class SweepAxis(str, Enum):
    """Scenario parameter varied by a sweep"""
    CO2_REDUCTION = "co2_reduction"
    TATL_FACTOR = "tatl_factor"
    NB_COST = "nb_cost"

    @classmethod
    def parse(cls, value: str) -> "SweepAxis":
        aliases = {"co2": cls.CO2_REDUCTION, "tatl": cls.TATL_FACTOR, "nbcost": cls.NB_COST}
        return aliases.get(value) or cls(value)


class SweepSpec(BaseModel):
    """One-dimensional parameter sweep over a base scenario"""
    axis: SweepAxis
    values: List[float] = Field(..., min_length=1)
    base: ScenarioConfig = Field(default_factory=ScenarioConfig)
    models: List[PlanningModel] = Field(default_factory=lambda: list(MODEL_ORDER), min_length=1)

    @model_validator(mode="after")
    def _values_in_range(self) -> "SweepSpec":
        for value in self.values:
            if self.axis == SweepAxis.TATL_FACTOR and value < 1.0:
                raise ValueError(f"tatl_factor values must be >= 1, got {value}")
            if self.axis == SweepAxis.NB_COST and value < 0.0:
                raise ValueError(f"nb_cost values must be >= 0, got {value}")
            if self.axis == SweepAxis.CO2_REDUCTION and not 0.0 <= value < 1.0:
                raise ValueError(f"co2_reduction values must lie in [0, 1), got {value}")
        return self

    def config_for(self, value: float) -> ScenarioConfig:
        """Base config with the swept parameter set to value"""
        name = f"{self.base.name}-{self.axis.value}-{value:g}"
        if self.axis == SweepAxis.NB_COST:
            return self.base.with_overrides(name=name, nb_capital_cost_up=value, nb_capital_cost_down=value)
        return self.base.with_overrides(name=name, **{self.axis.value: value})


class SweepRow(BaseModel):
    """One (axis value, model) result of a sweep"""
    axis: str
    value: float
    model: PlanningModel
    status: str = "ok"
    exit_code: int = ExitCode.OK
    error: Optional[str] = None
    objective: Optional[float] = None
    capital_generation: Optional[float] = None
    operation_generation: Optional[float] = None
    nb_capital: Optional[float] = None
    nb_operation: Optional[float] = None
    total: Optional[float] = None
    nb_capacity_up: Optional[float] = None
    nb_capacity_down: Optional[float] = None
    nb_cost: Optional[float] = None
    ci_delta: Optional[float] = None
    ci_delta_capital: Optional[float] = None


class ComparisonRow(BaseModel):
    """Costs of one strategy in a three-way comparison"""
    model: PlanningModel
    capital_generation: float
    operation_generation: float
    nb_capital: float
    nb_operation: float
    total: float
    nb_capacity_up: float
    nb_capacity_down: float


@dataclass
class ScenarioOutcome:
    """Verified plan of one scenario run"""
    plan: PlanResult
    report: VerificationReport
    out_dir: Optional[Path]
    timings: Dict[str, float] = field(default_factory=dict)


def _ensure_verified(report: VerificationReport) -> None:
    if not report.passed:
        raise ScenarioFailure(
            f"[{report.scenario}] verification failed: {report.describe_failures()}",
            ExitCode.VERIFICATION_FAILED,
        )


def run_scenario(network_dir: Path | str, config: ScenarioConfig, out_dir: Optional[Path | str] = None,
                 backend: Optional[str] = None, dump_lp: bool = False,
                 dump_sens: bool = False, network: Optional[Network] = None) -> ScenarioOutcome:
    """
    Load, build, solve, extract, verify and write one scenario.

    Args:
        network_dir: Network directory
        config: Scenario configuration
        out_dir: Parent output directory; results go to out_dir/<scenario name>.
            Nothing is written when None.
        backend: LP backend name
        dump_lp: Also write the LP files
        dump_sens: Also write ptdf.csv / lodf.csv

    Raises:
        ScenarioFailure: non-optimal solve (exit 2/3/4) or failed verification (exit 5)
    """
    timer = StageTimer(config.name)
    scenario_dir = Path(out_dir) / config.name if out_dir is not None else None

    if network is None:
        with timer.stage("load"):
            network = load_network(network_dir)
    with timer.stage("sensitivities"):
        sens = SensitivitySet.build(network, config.slack_bus)
    if dump_sens and scenario_dir is not None:
        dump_sensitivities(sens, scenario_dir)

    runner = ModelRunner(
        network, config, sens, backend, timer,
        dump_lp_dir=scenario_dir if dump_lp and scenario_dir is not None else None,
    )
    plan = runner.run()

    with timer.stage("verify"):
        report = verify_plan(plan, network, config, sens)
    _ensure_verified(report)

    if scenario_dir is not None:
        with timer.stage("write"):
            write_plan(plan, scenario_dir, network.snapshot_labels, report)
    timer.log_summary()
    return ScenarioOutcome(plan=plan, report=report, out_dir=scenario_dir, timings=timer.totals())


def _row_from_plan(axis: str, value: float, plan: PlanResult) -> SweepRow:
    costs = plan.cost_report
    return SweepRow(
        axis=axis,
        value=value,
        model=plan.model,
        objective=plan.solver_objective,
        capital_generation=costs.capital_generation,
        operation_generation=costs.operation_generation,
        nb_capital=costs.nb_capital,
        nb_operation=costs.nb_operation,
        total=costs.total,
        nb_capacity_up=plan.total_nb_up,
        nb_capacity_down=plan.total_nb_down,
        nb_cost=costs.nb_total,
    )


def _failed_row(axis: str, value: float, model: PlanningModel, error: Exception) -> SweepRow:
    exit_code = getattr(error, "exit_code", ExitCode.SOLVER_ERROR)
    return SweepRow(axis=axis, value=value, model=model, status="failed", exit_code=int(exit_code), error=str(error))


def run_sweep_point(network_dir: str, spec: SweepSpec, value: float,
                    network: Optional[Network] = None, backend: Optional[str] = None) -> List[SweepRow]:
    """All requested models at one axis value; failures are recorded per row"""
    axis = spec.axis.value
    config = spec.config_for(value)
    if network is None:
        network = load_network(network_dir)
    sens = SensitivitySet.build(network, config.slack_bus)
    runner = ModelRunner(network, config, sens, backend=backend)

    plans: Dict[PlanningModel, PlanResult] = {}
    rows: List[SweepRow] = []
    stage_one: Optional[PlanResult] = None
    for model in MODEL_ORDER:
        if model not in spec.models:
            continue
        try:
            if model == PlanningModel.SEQUENTIAL:
                plan, stage_one, _ = runner.sequential()
            else:
                plan = runner.run(model)
            _ensure_verified(verify_plan(plan, network, config, sens))
        except PlanningError as e:
            logger.warning(f"⚠️ Sweep point {axis}={value:g} {model.value} failed: {e}")
            rows.append(_failed_row(axis, value, model, e))
            continue
        plans[model] = plan
        rows.append(_row_from_plan(axis, value, plan))

    if spec.axis == SweepAxis.TATL_FACTOR:
        _attach_investment_delta(rows, runner, plans, stage_one)
    return rows


def _attach_investment_delta(rows: List[SweepRow], runner: ModelRunner,
                             plans: Dict[PlanningModel, PlanResult], stage_one: Optional[PlanResult]) -> None:
    """Generation cost of the preventive plan minus that of the TATL-relaxed investment plan"""
    try:
        preventive = plans.get(PlanningModel.PREVENTIVE) or runner.preventive()
        relaxed = stage_one or runner.investment()
    except PlanningError as e:
        logger.warning(f"⚠️ Investment cost difference unavailable: {e}")
        return
    full = preventive.cost_report.generation_total - relaxed.cost_report.generation_total
    capital = preventive.cost_report.capital_generation - relaxed.cost_report.capital_generation
    for row in rows:
        row.ci_delta = full
        row.ci_delta_capital = capital


def _sort_key(row: SweepRow) -> Tuple[float, int]:
    return row.value, MODEL_ORDER.index(row.model)


def run_sweep(network_dir: Path | str, spec: SweepSpec, out_dir: Optional[Path | str] = None,
              workers: Optional[int] = None, backend: Optional[str] = None) -> List[SweepRow]:
    """
    Run a sweep and return one row per (axis value, model), sorted by value then model.

    Points run in a process pool when more than one worker is configured.
    """
    workers = workers or get_settings().sweep_workers
    values = list(dict.fromkeys(spec.values))
    logger.info(f"🔁 Sweep over {spec.axis.value} {values} with models {[m.value for m in spec.models]}")

    rows: List[SweepRow] = []
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
            futures = [pool.submit(run_sweep_point, str(network_dir), spec, value, None, backend)
                       for value in values]
            for future in tqdm(futures, desc=f"sweep {spec.axis.value}", unit="point"):
                rows.extend(future.result())
    else:
        network = load_network(network_dir)
        for value in tqdm(values, desc=f"sweep {spec.axis.value}", unit="point"):
            rows.extend(run_sweep_point(str(network_dir), spec, value, network=network, backend=backend))

    rows.sort(key=_sort_key)
    if out_dir is not None:
        write_summary(rows, Path(out_dir) / SUMMARY_FILE)
    failed = sum(1 for row in rows if row.status != "ok")
    logger.info(f"✅ Sweep finished: {len(rows) - failed} rows ok, {failed} failed")
    return rows


def write_summary(rows: List[SweepRow], path: Path) -> Path:
    """Write sweep rows with a fixed float format so reruns are byte-identical"""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=list(SweepRow.model_fields))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"💾 Summary written to {path}")
    return path


def compare_strategies(network_dir: Path | str, config: ScenarioConfig,
                       out_dir: Optional[Path | str] = None, backend: Optional[str] = None,
                       network: Optional[Network] = None) -> List[ComparisonRow]:
    """
    Solve preventive, sequential and simultaneous and compare their costs.

    Raises:
        ScenarioFailure: a model fails, a plan fails verification, or the
            simultaneous total exceeds either alternative beyond tolerance (exit 6)
    """
    timer = StageTimer(config.name)
    if network is None:
        with timer.stage("load"):
            network = load_network(network_dir)
    with timer.stage("sensitivities"):
        sens = SensitivitySet.build(network, config.slack_bus)
    runner = ModelRunner(network, config, sens, backend, timer)

    plans: Dict[PlanningModel, PlanResult] = {}
    for model in MODEL_ORDER:
        plan = runner.run(model)
        with timer.stage("verify"):
            _ensure_verified(verify_plan(plan, network, config, sens))
        plans[model] = plan

    rows = [
        ComparisonRow(
            model=model,
            **plans[model].cost_report.model_dump(exclude={"stage_objectives"}),
            nb_capacity_up=plans[model].total_nb_up,
            nb_capacity_down=plans[model].total_nb_down,
        )
        for model in MODEL_ORDER
    ]
    check_dominance(rows)

    if out_dir is not None:
        path = Path(out_dir) / config.name / COMPARISON_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame([row.model_dump(mode="json") for row in rows]).to_csv(
            path, index=False, float_format=FLOAT_FORMAT
        )
        for model, plan in plans.items():
            write_plan(plan, Path(out_dir) / config.name / model.value, network.snapshot_labels)
        logger.info(f"💾 Comparison written to {path}")
    timer.log_summary()
    return rows


def check_dominance(rows: List[ComparisonRow], rel_tol: float = 1e-6) -> None:
    """Simultaneous total must not exceed the preventive or sequential total"""
    totals = {row.model: row.total for row in rows}
    simultaneous = totals[PlanningModel.SIMULTANEOUS]
    slack = rel_tol * abs(totals[PlanningModel.PREVENTIVE])
    for model in (PlanningModel.PREVENTIVE, PlanningModel.SEQUENTIAL):
        if simultaneous > totals[model] + slack:
            raise ScenarioFailure(
                f"simultaneous total {simultaneous:.6f} exceeds {model.value} total {totals[model]:.6f}; "
                "probable solver-tolerance issue",
                ExitCode.DOMINANCE_VIOLATION,
            )
