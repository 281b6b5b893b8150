"""
Result types of the planning models.

Variable names follow "family/index/...": G/<gen>, g/<gen>/<t>, f/<line>/<t>,
theta/<bus>/<t>, P_plus/<bus>, P_minus/<bus>, p_plus/<bus>/<t>/<outage>,
p_minus/<bus>/<t>/<outage>. Snapshots are referenced by position.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import PlanningModel

COST_TOLERANCE = 1e-6


def gen_capacity(s: str) -> str:
    return f"G/{s}"


def gen_dispatch(s: str, t: int) -> str:
    return f"g/{s}/{t}"


def flow(line: str, t: int) -> str:
    return f"f/{line}/{t}"


def angle(bus: str, t: int) -> str:
    return f"theta/{bus}/{t}"


def nb_capacity(direction: str, bus: str) -> str:
    return f"P_{direction}/{bus}"


def nb_dispatch(direction: str, bus: str, t: int, outage: str) -> str:
    return f"p_{direction}/{bus}/{t}/{outage}"


UP, DOWN = "plus", "minus"


@dataclass(frozen=True)
class NameMap:
    """What a built LP contains, so a solution can be mapped back to arrays"""
    model: PlanningModel
    stage: str
    generator_ids: Tuple[str, ...]
    line_ids: Tuple[str, ...]
    bus_ids: Tuple[str, ...]
    n_snapshots: int
    contingencies: Tuple[str, ...]
    tatl_factor: float
    co2_cap: Optional[float]
    has_generation: bool
    has_boosters: bool
    fixed_flows: Optional[np.ndarray] = None  # (snapshots x lines), stage two only


class CostReport(BaseModel):
    """Annual cost decomposition in €/a, recomputed from the primal values"""
    model_config = ConfigDict(frozen=True)

    capital_generation: float = 0.0
    operation_generation: float = 0.0
    nb_capital: float = 0.0
    nb_operation: float = 0.0
    total: float = 0.0
    stage_objectives: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _total_matches_components(self) -> "CostReport":
        parts = self.capital_generation + self.operation_generation + self.nb_capital + self.nb_operation
        if abs(parts - self.total) > COST_TOLERANCE * max(1.0, abs(parts)):
            raise ValueError(f"total {self.total} differs from the sum of components {parts}")
        return self

    @property
    def generation_total(self) -> float:
        return self.capital_generation + self.operation_generation

    @property
    def nb_total(self) -> float:
        """C^NB: booster capital plus dispatch cost"""
        return self.nb_capital + self.nb_operation

    @classmethod
    def from_components(cls, capital_generation: float = 0.0, operation_generation: float = 0.0,
                        nb_capital: float = 0.0, nb_operation: float = 0.0,
                        stage_objectives: Optional[Dict[str, float]] = None) -> "CostReport":
        return cls(
            capital_generation=capital_generation,
            operation_generation=operation_generation,
            nb_capital=nb_capital,
            nb_operation=nb_operation,
            total=capital_generation + operation_generation + nb_capital + nb_operation,
            stage_objectives=stage_objectives or {},
        )


@dataclass(frozen=True)
class PlanResult:
    """
    Solved plan as dense arrays.

    Arrays are indexed in network order: generator_capacity (S), dispatch (T x S),
    line_flow (T x L), angles (T x N). Booster arrays are indexed by nb_bus_ids
    and contingencies: nb_capacity_* (B), nb_dispatch_* (T x K x B). Models
    without boosters carry zero-sized booster arrays.
    """
    scenario: str
    model: PlanningModel
    generator_ids: Tuple[str, ...]
    line_ids: Tuple[str, ...]
    bus_ids: Tuple[str, ...]
    tatl_factor: float
    contingencies: Tuple[str, ...]
    generator_capacity: np.ndarray
    dispatch: np.ndarray
    line_flow: np.ndarray
    angles: np.ndarray
    nb_bus_ids: Tuple[str, ...]
    nb_capacity_up: np.ndarray
    nb_capacity_down: np.ndarray
    nb_dispatch_up: np.ndarray
    nb_dispatch_down: np.ndarray
    cost_report: CostReport
    co2_cap: Optional[float] = None
    solver_objective: Optional[float] = None
    solve_times: Dict[str, float] = field(default_factory=dict)

    @property
    def has_boosters(self) -> bool:
        return bool(self.nb_bus_ids)

    @property
    def total_nb_up(self) -> float:
        return float(self.nb_capacity_up.sum())

    @property
    def total_nb_down(self) -> float:
        return float(self.nb_capacity_down.sum())

    @property
    def total_nb_capacity(self) -> float:
        return self.total_nb_up + self.total_nb_down

    def mixed_nb_buses(self, tol: float = 1e-6) -> List[str]:
        """Buses hosting both upward and downward booster capacity (diagnostic)"""
        both = (self.nb_capacity_up > tol) & (self.nb_capacity_down > tol)
        return [bus for bus, flag in zip(self.nb_bus_ids, both) if flag]

    def simultaneous_charge_discharge(self) -> float:
        """Largest min(p_plus, p_minus) over all (bus, snapshot, outage)"""
        if not self.nb_dispatch_up.size:
            return 0.0
        return float(np.minimum(self.nb_dispatch_up, self.nb_dispatch_down).max())


class VerificationCheck(BaseModel):
    """One audited constraint family"""
    name: str
    max_violation: float
    location: Optional[str] = None
    passed: bool


class VerificationReport(BaseModel):
    """Independent post-solve audit of a plan"""
    scenario: str
    model: PlanningModel
    tolerance: float
    checks: List[VerificationCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[VerificationCheck]:
        return [check for check in self.checks if not check.passed]

    def check(self, name: str) -> VerificationCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def describe_failures(self) -> str:
        return "; ".join(
            f"{c.name} violated by {c.max_violation:.3g} at {c.location}" for c in self.failures
        )
