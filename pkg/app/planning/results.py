"""
Writes a PlanResult (and its verification report) to a scenario directory.
"""

import json
import logging
from pathlib import Path
from typing import Optional

import pandas as pd

from app.planning.schemas import PlanResult, VerificationReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

CAPACITIES_FILE = "capacities.csv"
NB_CAPACITIES_FILE = "nb_capacities.csv"
FLOWS_FILE = "flows.csv"
NB_DISPATCH_FILE = "nb_dispatch.csv"
COSTS_FILE = "costs.json"
VERIFICATION_FILE = "verification.json"


def write_plan(plan: PlanResult, out_dir: Path | str, snapshot_labels=None,
               report: Optional[VerificationReport] = None) -> Path:
    """
    Serialize a plan.

    Args:
        plan: Plan to write
        out_dir: Target directory (created)
        snapshot_labels: Labels for the snapshot column (positions when omitted)
        report: Verification report written alongside when given

    Returns:
        The output directory
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    T = plan.line_flow.shape[0]
    labels = list(snapshot_labels) if snapshot_labels is not None else list(range(T))

    pd.DataFrame({"generator": plan.generator_ids, "capacity_mw": plan.generator_capacity}).to_csv(
        out_dir / CAPACITIES_FILE, index=False, float_format=FLOAT_FORMAT
    )

    pd.DataFrame({
        "bus": list(plan.nb_bus_ids),
        "p_plus_mw": plan.nb_capacity_up,
        "p_minus_mw": plan.nb_capacity_down,
    }).to_csv(out_dir / NB_CAPACITIES_FILE, index=False, float_format=FLOAT_FORMAT)

    flows = pd.DataFrame(plan.line_flow, index=labels, columns=plan.line_ids)
    flows.index.name = "snapshot"
    (
        flows.reset_index()
        .melt(id_vars="snapshot", var_name="line", value_name="flow_mw")
        [["line", "snapshot", "flow_mw"]]
        .to_csv(out_dir / FLOWS_FILE, index=False, float_format=FLOAT_FORMAT)
    )

    rows = [
        {
            "bus": bus_id,
            "snapshot": labels[t],
            "contingency": outage,
            "p_plus_mw": plan.nb_dispatch_up[t, k, i],
            "p_minus_mw": plan.nb_dispatch_down[t, k, i],
        }
        for t in range(plan.nb_dispatch_up.shape[0])
        for k, outage in enumerate(plan.contingencies if plan.has_boosters else ())
        for i, bus_id in enumerate(plan.nb_bus_ids)
    ]
    pd.DataFrame(rows, columns=["bus", "snapshot", "contingency", "p_plus_mw", "p_minus_mw"]).to_csv(
        out_dir / NB_DISPATCH_FILE, index=False, float_format=FLOAT_FORMAT
    )

    mixed = plan.mixed_nb_buses()
    if mixed:
        logger.warning(f"⚠️ [{plan.scenario}] up and down booster capacity at the same buses: {mixed}")
    costs = {
        "scenario": plan.scenario,
        "model": plan.model.value,
        **plan.cost_report.model_dump(),
        "warnings": {"mixed_nb_buses": mixed},
    }
    (out_dir / COSTS_FILE).write_text(json.dumps(costs, indent=2, sort_keys=True), encoding="utf-8")

    if report is not None:
        (out_dir / VERIFICATION_FILE).write_text(report.model_dump_json(indent=2), encoding="utf-8")

    logger.info(f"💾 [{plan.scenario}] plan written to {out_dir}")
    return out_dir
