"""
CSV reader and writer for Network directories.

Directory layout (UTF-8, comma-separated, header row, '.' decimals):
    buses.csv         id,name,x,y
    lines.csv         id,from_bus,to_bus,reactance_pu,patl_mw
    generators.csv    id,bus,capital_cost_eur_per_mw_a,marginal_cost_eur_per_mwh,
                      max_capacity_mw,emission_factor_t_per_mwh,efficiency,extendable
    availability.csv  snapshot,<generator id>...   (missing generators: 1.0)
    loads.csv         snapshot,<bus id>...         (missing buses: no demand)
    snapshots.csv     snapshot,weight_hours
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Type, TypeVar

import pandas as pd
from pydantic import BaseModel, ValidationError

from app.core.config import get_settings
from app.core.exceptions import NetworkDataError
from app.network.schemas import Bus, Generator, Line, Load, Network, Snapshot

logger = logging.getLogger(__name__)

BUSES_FILE = "buses.csv"
LINES_FILE = "lines.csv"
GENERATORS_FILE = "generators.csv"
AVAILABILITY_FILE = "availability.csv"
LOADS_FILE = "loads.csv"
SNAPSHOTS_FILE = "snapshots.csv"

BUS_COLUMNS = ["id", "name", "x", "y"]
LINE_COLUMNS = ["id", "from_bus", "to_bus", "reactance_pu", "patl_mw"]
GENERATOR_COLUMNS = [
    "id",
    "bus",
    "capital_cost_eur_per_mw_a",
    "marginal_cost_eur_per_mwh",
    "max_capacity_mw",
    "emission_factor_t_per_mwh",
    "efficiency",
    "extendable",
]
SNAPSHOT_COLUMNS = ["snapshot", "weight_hours"]

M = TypeVar("M", bound=BaseModel)


def load_network(data_dir: Path | str, period_hours: Optional[float] = None) -> Network:
    """
    Load and validate a network directory.

    Args:
        data_dir: Directory holding the six CSV files
        period_hours: Modeled period the snapshot weights must sum to
            (defaults to the configured period, 8760 h)

    Returns:
        Fully cross-referenced Network

    Raises:
        NetworkDataError: missing file, unknown reference, non-numeric field,
            weight mismatch or disconnected graph, with file/row context
    """
    data_dir = Path(data_dir)
    if period_hours is None:
        period_hours = get_settings().period_hours

    buses = _parse_rows(data_dir, BUSES_FILE, BUS_COLUMNS, Bus, lambda r: {
        "id": r["id"], "name": r["name"] or None, "x": r["x"] or None, "y": r["y"] or None,
    }, optional=("name", "x", "y"))
    bus_ids = {b.id for b in buses}

    lines = _parse_rows(data_dir, LINES_FILE, LINE_COLUMNS, Line, lambda r: {
        "id": r["id"], "from_bus": r["from_bus"], "to_bus": r["to_bus"],
        "reactance": r["reactance_pu"], "patl": r["patl_mw"],
    }, bus_ids=bus_ids, bus_fields=("from_bus", "to_bus"))

    snapshots = _parse_rows(data_dir, SNAPSHOTS_FILE, SNAPSHOT_COLUMNS, Snapshot, lambda r: {
        "label": r["snapshot"], "weight": r["weight_hours"],
    })
    labels = [s.label for s in snapshots]

    availability = _read_wide(data_dir, AVAILABILITY_FILE, labels, required=False)
    loads_table = _read_wide(data_dir, LOADS_FILE, labels, required=True)

    gen_rows = _read_table(data_dir, GENERATORS_FILE, GENERATOR_COLUMNS)
    generators: List[Generator] = []
    for row_number, row in gen_rows:
        _check_bus(row["bus"], bus_ids, GENERATORS_FILE, row_number)
        series = availability.pop(row["id"], None) if availability is not None else None
        generators.append(_validate(Generator, {
            "id": row["id"],
            "bus": row["bus"],
            "capital_cost": row["capital_cost_eur_per_mw_a"],
            "marginal_cost": row["marginal_cost_eur_per_mwh"],
            "max_capacity": row["max_capacity_mw"],
            "emission_factor": row["emission_factor_t_per_mwh"],
            "efficiency": row["efficiency"],
            "extendable": row["extendable"],
            "availability": series if series is not None else [1.0] * len(labels),
        }, GENERATORS_FILE, row_number))
    if availability:
        raise NetworkDataError(f"unknown generator column(s) {sorted(availability)}", AVAILABILITY_FILE)

    loads: List[Load] = []
    for bus_id, series in loads_table.items():
        if bus_id not in bus_ids:
            raise NetworkDataError(f"unknown bus '{bus_id}' in header", LOADS_FILE)
        loads.append(_validate(Load, {"bus": bus_id, "demand": series}, LOADS_FILE, None))

    try:
        network = Network(
            buses=tuple(buses),
            lines=tuple(lines),
            generators=tuple(generators),
            loads=tuple(loads),
            snapshots=tuple(snapshots),
            period_hours=period_hours,
        )
    except NetworkDataError as e:
        raise type(e)(str(e), str(data_dir)) from e

    logger.info(
        f"📥 Loaded network from {data_dir}: {network.n_buses} buses, {network.n_lines} lines, "
        f"{len(network.generators)} generators, {network.n_snapshots} snapshots"
    )
    return network


def write_network(network: Network, data_dir: Path | str) -> None:
    """Serialize a network in the directory layout read by load_network"""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    labels = list(network.snapshot_labels)

    pd.DataFrame(
        [[b.id, b.name or "", b.x, b.y] for b in network.buses], columns=BUS_COLUMNS
    ).to_csv(data_dir / BUSES_FILE, index=False)
    pd.DataFrame(
        [[line.id, line.from_bus, line.to_bus, line.reactance, line.patl] for line in network.lines],
        columns=LINE_COLUMNS,
    ).to_csv(data_dir / LINES_FILE, index=False)
    pd.DataFrame(
        [
            [g.id, g.bus, g.capital_cost, g.marginal_cost, g.max_capacity,
             g.emission_factor, g.efficiency, "true" if g.extendable else "false"]
            for g in network.generators
        ],
        columns=GENERATOR_COLUMNS,
    ).to_csv(data_dir / GENERATORS_FILE, index=False)

    availability = pd.DataFrame({g.id: list(g.availability) for g in network.generators}, index=labels)
    availability.index.name = "snapshot"
    availability.to_csv(data_dir / AVAILABILITY_FILE)

    loads = pd.DataFrame({load.bus: list(load.demand) for load in network.loads}, index=labels)
    loads.index.name = "snapshot"
    loads.to_csv(data_dir / LOADS_FILE)

    pd.DataFrame(
        [[s.label, s.weight] for s in network.snapshots], columns=SNAPSHOT_COLUMNS
    ).to_csv(data_dir / SNAPSHOTS_FILE, index=False)
    logger.debug(f"Wrote network to {data_dir}")


def _read_table(data_dir: Path, file_name: str, columns: Sequence[str]):
    path = data_dir / file_name
    if not path.exists():
        raise NetworkDataError("missing file", file_name)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise NetworkDataError(f"missing column(s) {missing}", file_name)
    # row 1 is the header
    return [(position + 2, row) for position, row in enumerate(frame.to_dict("records"))]


def _parse_rows(data_dir, file_name, columns, model: Type[M], mapper, optional=(),
                bus_ids=None, bus_fields=()) -> List[M]:
    items = []
    for row_number, row in _read_table(data_dir, file_name, columns):
        for field_name in bus_fields:
            _check_bus(row[field_name], bus_ids, file_name, row_number)
        items.append(_validate(model, mapper(row), file_name, row_number))
    return items


def _check_bus(bus_id: str, bus_ids, file_name: str, row_number: int) -> None:
    if bus_id not in bus_ids:
        raise NetworkDataError(f"unknown bus '{bus_id}'", file_name, row_number)


def _validate(model: Type[M], data: dict, file_name: str, row_number: Optional[int]) -> M:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise NetworkDataError(details, file_name, row_number) from e


def _read_wide(data_dir: Path, file_name: str, labels: List[str], required: bool
               ) -> Optional[Dict[str, List[float]]]:
    path = data_dir / file_name
    if not path.exists():
        if required:
            raise NetworkDataError("missing file", file_name)
        return None

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    if frame.columns.empty or frame.columns[0] != "snapshot":
        raise NetworkDataError("first column must be 'snapshot'", file_name)
    found = frame["snapshot"].tolist()
    if found != labels:
        raise NetworkDataError(
            f"snapshot index {found[:5]}... does not match snapshots.csv {labels[:5]}...", file_name
        )

    series: Dict[str, List[float]] = {}
    for column in frame.columns[1:]:
        values = []
        for position, raw in enumerate(frame[column].tolist()):
            try:
                values.append(float(raw))
            except ValueError as e:
                raise NetworkDataError(
                    f"non-numeric value '{raw}' in column '{column}'", file_name, position + 2
                ) from e
        series[column] = values
    return series
