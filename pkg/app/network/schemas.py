"""
Power-system data model.

Elements are frozen pydantic models; Network is a frozen dataclass holding
tuples of them, so two networks compare equal exactly when their parsed
contents do. Dense arrays used by the numerical code are derived lazily.
"""

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.exceptions import DisconnectedNetworkError, NetworkDataError

WEIGHT_TOLERANCE = 1e-6


class Bus(BaseModel):
    """Network node"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    name: Optional[str] = None
    x: Optional[float] = None
    y: Optional[float] = None


class Line(BaseModel):
    """Transmission line; orientation from_bus -> to_bus is arbitrary but fixed"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    from_bus: str
    to_bus: str
    reactance: float = Field(..., gt=0, description="per unit on the common MVA base")
    patl: float = Field(..., gt=0, description="permanently admissible loading in MW")

    @model_validator(mode="after")
    def _distinct_ends(self) -> "Line":
        if self.from_bus == self.to_bus:
            raise ValueError(f"line '{self.id}' starts and ends at bus '{self.from_bus}'")
        return self


class Generator(BaseModel):
    """Generation technology at a bus, with its per-snapshot availability"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    bus: str
    capital_cost: float = Field(..., ge=0, description="€/MW/a")
    marginal_cost: float = Field(..., ge=0, description="€/MWh")
    max_capacity: float = Field(..., ge=0, description="MW")
    emission_factor: float = Field(0.0, ge=0, description="tCO2/MWh of fuel")
    efficiency: float = Field(1.0, gt=0, le=1)
    extendable: bool = True
    availability: Tuple[float, ...] = ()

    @field_validator("availability")
    @classmethod
    def _availability_in_unit_interval(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        for position, factor in enumerate(value):
            if not 0.0 <= factor <= 1.0:
                raise ValueError(f"availability {factor} at snapshot position {position} outside [0, 1]")
        return value

    @property
    def emission_intensity(self) -> float:
        """tCO2 per MWh of electricity (e_s / eta_s)"""
        return self.emission_factor / self.efficiency


class Load(BaseModel):
    """Inelastic demand at a bus"""
    model_config = ConfigDict(frozen=True)

    bus: str
    demand: Tuple[float, ...]

    @field_validator("demand")
    @classmethod
    def _non_negative(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(d < 0 for d in value):
            raise ValueError("demand must be non-negative")
        return value


class Snapshot(BaseModel):
    """Representative hour with its annual weight"""
    model_config = ConfigDict(frozen=True)

    label: str
    weight: float = Field(..., gt=0, description="hours per year represented")


@dataclass(frozen=True)
class Network:
    """Immutable, validated power-system description"""

    buses: Tuple[Bus, ...]
    lines: Tuple[Line, ...]
    generators: Tuple[Generator, ...]
    loads: Tuple[Load, ...]
    snapshots: Tuple[Snapshot, ...]
    period_hours: float = 8760.0

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        if not self.buses:
            raise NetworkDataError("network has no buses")
        if not self.snapshots:
            raise NetworkDataError("network needs at least one snapshot")

        _ensure_unique("bus", [b.id for b in self.buses])
        _ensure_unique("line", [line.id for line in self.lines])
        _ensure_unique("generator", [g.id for g in self.generators])
        _ensure_unique("snapshot", [s.label for s in self.snapshots])
        _ensure_unique("load bus", [load.bus for load in self.loads])

        bus_ids = set(self.bus_ids)
        for line in self.lines:
            for end in (line.from_bus, line.to_bus):
                if end not in bus_ids:
                    raise NetworkDataError(f"line '{line.id}' references unknown bus '{end}'")
        for gen in self.generators:
            if gen.bus not in bus_ids:
                raise NetworkDataError(f"generator '{gen.id}' references unknown bus '{gen.bus}'")
            if len(gen.availability) != len(self.snapshots):
                raise NetworkDataError(
                    f"generator '{gen.id}' has {len(gen.availability)} availability values "
                    f"for {len(self.snapshots)} snapshots"
                )
        for load in self.loads:
            if load.bus not in bus_ids:
                raise NetworkDataError(f"load references unknown bus '{load.bus}'")
            if len(load.demand) != len(self.snapshots):
                raise NetworkDataError(
                    f"load at '{load.bus}' has {len(load.demand)} values for "
                    f"{len(self.snapshots)} snapshots"
                )

        total_weight = sum(s.weight for s in self.snapshots)
        if abs(total_weight - self.period_hours) > WEIGHT_TOLERANCE * max(1.0, self.period_hours):
            raise NetworkDataError(
                f"snapshot weights must sum to period length {self.period_hours:g} h "
                f"(got {total_weight:g} h)"
            )

        if not nx.is_connected(self.graph):
            components = [sorted(c) for c in nx.connected_components(self.graph)]
            raise DisconnectedNetworkError(f"network is disconnected: components {components}")

    # Index helpers

    @cached_property
    def bus_ids(self) -> Tuple[str, ...]:
        return tuple(b.id for b in self.buses)

    @cached_property
    def line_ids(self) -> Tuple[str, ...]:
        return tuple(line.id for line in self.lines)

    @cached_property
    def generator_ids(self) -> Tuple[str, ...]:
        return tuple(g.id for g in self.generators)

    @cached_property
    def snapshot_labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.snapshots)

    @cached_property
    def bus_index(self) -> Dict[str, int]:
        return {bus_id: i for i, bus_id in enumerate(self.bus_ids)}

    @cached_property
    def line_index(self) -> Dict[str, int]:
        return {line_id: i for i, line_id in enumerate(self.line_ids)}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_snapshots(self) -> int:
        return len(self.snapshots)

    # Derived arrays (read-only)

    @cached_property
    def graph(self) -> nx.MultiGraph:
        """Undirected multigraph of buses and lines, edges keyed by line id"""
        graph = nx.MultiGraph()
        graph.add_nodes_from(b.id for b in self.buses)
        for line in self.lines:
            graph.add_edge(line.from_bus, line.to_bus, key=line.id)
        return graph

    @cached_property
    def weights(self) -> np.ndarray:
        """Snapshot weights w_t in hours"""
        return _frozen(np.array([s.weight for s in self.snapshots], dtype=float))

    @cached_property
    def demand(self) -> np.ndarray:
        """Demand d_{i,t} as (snapshots x buses) in MW"""
        demand = np.zeros((self.n_snapshots, self.n_buses))
        for load in self.loads:
            demand[:, self.bus_index[load.bus]] += np.asarray(load.demand, dtype=float)
        return _frozen(demand)

    @cached_property
    def availability(self) -> np.ndarray:
        """Availability factors as (snapshots x generators)"""
        if not self.generators:
            return _frozen(np.zeros((self.n_snapshots, 0)))
        return _frozen(np.column_stack([np.asarray(g.availability, dtype=float) for g in self.generators]))

    @cached_property
    def susceptance(self) -> np.ndarray:
        """Line susceptances b_l = 1 / x_l in per unit"""
        return _frozen(np.array([1.0 / line.reactance for line in self.lines]))

    @cached_property
    def patl(self) -> np.ndarray:
        """Permanent line ratings F_l in MW"""
        return _frozen(np.array([line.patl for line in self.lines], dtype=float))

    def line(self, line_id: str) -> Line:
        return self.lines[self.line_index[line_id]]

    def drop_line(self, line_id: str) -> "Network":
        """
        Network with one line removed (the post-outage topology).

        Raises:
            DisconnectedNetworkError: if the line is a bridge
        """
        if line_id not in self.line_index:
            raise NetworkDataError(f"unknown line '{line_id}'")
        remaining = tuple(line for line in self.lines if line.id != line_id)
        return replace(self, lines=remaining)


def _ensure_unique(kind: str, ids) -> None:
    seen = set()
    for item in ids:
        if item in seen:
            raise NetworkDataError(f"duplicate {kind} id '{item}'")
        seen.add(item)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array
