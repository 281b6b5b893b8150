"""
Solver-agnostic linear program.

Variables and constraints are registered by name following the convention
"family/index1/index2/...", so solution values can be looked up by name
without knowing how the program was assembled. The objective is always
minimized.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from app.core.exceptions import LPModelError

INF = math.inf


class Sense(str, Enum):
    """Constraint sense"""
    LE = "<="
    EQ = "="
    GE = ">="


class SolveStatus(str, Enum):
    """Outcome reported by a backend"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ERROR = "error"


@dataclass(frozen=True)
class Variable:
    """Handle of a registered variable"""
    name: str
    index: int
    lb: float
    ub: float
    obj: float


@dataclass(frozen=True)
class Constraint:
    """Handle of a one-sided constraint"""
    name: str
    index: int
    columns: np.ndarray
    coefficients: np.ndarray
    sense: Sense
    rhs: float


Expression = Union[Mapping[Union[str, Variable], float], Iterable[Tuple[Union[str, Variable], float]]]


@dataclass(frozen=True)
class Solution:
    """Primal (and optionally dual) result of one solve"""
    status: SolveStatus
    objective: Optional[float] = None
    primal: Dict[str, float] = field(default_factory=dict)
    duals: Optional[Dict[str, float]] = None
    message: str = ""
    backend: str = ""
    solve_time: float = 0.0

    def __post_init__(self) -> None:
        if (self.status == SolveStatus.OPTIMAL) != bool(self.primal):
            if self.status == SolveStatus.OPTIMAL:
                raise ValueError("optimal solution without primal values")
            raise ValueError(f"{self.status.value} solution must not carry primal values")

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def value(self, name: str) -> float:
        return self.primal[name]


class LinearProgram:
    """Minimization LP built incrementally from named variables and rows"""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._variables: List[Variable] = []
        self._variable_index: Dict[str, int] = {}
        self._constraints: List[Constraint] = []
        self._constraint_index: Dict[str, int] = {}

    # Registration

    def add_variable(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> Variable:
        """
        Register a variable.

        Raises:
            LPModelError: duplicate name or lb > ub
        """
        if name in self._variable_index:
            raise LPModelError(f"duplicate variable name '{name}'")
        if lb > ub:
            raise LPModelError(f"variable '{name}' has inverted bounds [{lb}, {ub}]")
        if math.isnan(lb) or math.isnan(ub) or not math.isfinite(obj):
            raise LPModelError(f"variable '{name}' has non-numeric bounds or cost")
        variable = Variable(name=name, index=len(self._variables), lb=float(lb), ub=float(ub), obj=float(obj))
        self._variables.append(variable)
        self._variable_index[name] = variable.index
        return variable

    def add_constraint(self, name: str, expr: Expression, sense: Union[Sense, str], rhs: float) -> Constraint:
        """
        Register a one-sided constraint  expr (sense) rhs.

        Raises:
            LPModelError: duplicate name or unknown variable in expr
        """
        if name in self._constraint_index:
            raise LPModelError(f"duplicate constraint name '{name}'")
        columns, coefficients = self._compile(name, expr)
        constraint = Constraint(
            name=name,
            index=len(self._constraints),
            columns=columns,
            coefficients=coefficients,
            sense=Sense(sense),
            rhs=float(rhs),
        )
        self._constraints.append(constraint)
        self._constraint_index[name] = constraint.index
        return constraint

    def add_range(self, name: str, expr: Expression, lower: float, upper: float
                  ) -> Tuple[Constraint, Constraint]:
        """Two-sided row lower <= expr <= upper, stored as name/lower and name/upper"""
        if lower > upper:
            raise LPModelError(f"range '{name}' has lower {lower} above upper {upper}")
        terms = list(expr.items()) if isinstance(expr, Mapping) else list(expr)
        return (
            self.add_constraint(f"{name}/lower", terms, Sense.GE, lower),
            self.add_constraint(f"{name}/upper", terms, Sense.LE, upper),
        )

    def _compile(self, name: str, expr: Expression) -> Tuple[np.ndarray, np.ndarray]:
        items = expr.items() if isinstance(expr, Mapping) else expr
        merged: Dict[int, float] = {}
        for key, coefficient in items:
            var_name = key.name if isinstance(key, Variable) else key
            index = self._variable_index.get(var_name)
            if index is None:
                raise LPModelError(f"constraint '{name}' references unknown variable '{var_name}'")
            merged[index] = merged.get(index, 0.0) + float(coefficient)
        columns = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        coefficients = np.fromiter(merged.values(), dtype=float, count=len(merged))
        return columns, coefficients

    # Introspection

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return tuple(self._variables)

    @property
    def constraints(self) -> Tuple[Constraint, ...]:
        return tuple(self._constraints)

    @property
    def n_variables(self) -> int:
        return len(self._variables)

    @property
    def n_constraints(self) -> int:
        return len(self._constraints)

    def variable(self, name: str) -> Variable:
        return self._variables[self._variable_index[name]]

    def constraint(self, name: str) -> Constraint:
        return self._constraints[self._constraint_index[name]]

    def constraints_with_prefix(self, prefix: str) -> List[Constraint]:
        return [c for c in self._constraints if c.name.startswith(prefix)]

    def without_constraints(self, prefix: str) -> "LinearProgram":
        """Copy of the program minus every row whose name starts with prefix"""
        reduced = LinearProgram(f"{self.name}-without-{prefix.rstrip('/')}")
        for v in self._variables:
            reduced.add_variable(v.name, v.lb, v.ub, v.obj)
        for c in self._constraints:
            if not c.name.startswith(prefix):
                reduced.add_constraint(
                    c.name,
                    zip((self._variables[j].name for j in c.columns), c.coefficients),
                    c.sense,
                    c.rhs,
                )
        return reduced

    # Matrix form

    def objective_vector(self) -> np.ndarray:
        return np.array([v.obj for v in self._variables], dtype=float)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.array([v.lb for v in self._variables], dtype=float)
        upper = np.array([v.ub for v in self._variables], dtype=float)
        return lower, upper

    def constraint_matrix(self, constraints: Optional[List[Constraint]] = None) -> sp.csr_matrix:
        """Sparse row matrix of the given (default: all) constraints"""
        rows = self._constraints if constraints is None else constraints
        row_index, col_index, data = [], [], []
        for r, c in enumerate(rows):
            row_index.append(np.full(len(c.columns), r, dtype=np.int64))
            col_index.append(c.columns)
            data.append(c.coefficients)
        if rows:
            row_index_arr = np.concatenate(row_index)
            col_index_arr = np.concatenate(col_index)
            data_arr = np.concatenate(data)
        else:
            row_index_arr = col_index_arr = np.zeros(0, dtype=np.int64)
            data_arr = np.zeros(0)
        return sp.csr_matrix((data_arr, (row_index_arr, col_index_arr)), shape=(len(rows), self.n_variables))

    # Independent verification

    def evaluate_objective(self, solution: Solution) -> float:
        x = self._primal_vector(solution)
        return float(self.objective_vector() @ x)

    def check_solution(self, solution: Solution) -> Tuple[float, Optional[str]]:
        """
        Worst violation of any bound or row by the primal values.

        Returns:
            (max violation, name of the worst variable/constraint or None)
        """
        x = self._primal_vector(solution)
        worst, where = 0.0, None

        lower, upper = self.bounds()
        bound_violation = np.maximum(lower - x, x - upper)
        if bound_violation.size:
            j = int(np.argmax(bound_violation))
            if bound_violation[j] > worst:
                worst, where = float(bound_violation[j]), self._variables[j].name

        if self._constraints:
            activity = self.constraint_matrix() @ x
            rhs = np.array([c.rhs for c in self._constraints])
            senses = [c.sense for c in self._constraints]
            violation = np.array([
                a - b if s == Sense.LE else (b - a if s == Sense.GE else abs(a - b))
                for a, b, s in zip(activity, rhs, senses)
            ])
            i = int(np.argmax(violation))
            if violation[i] > worst:
                worst, where = float(violation[i]), self._constraints[i].name
        return worst, where

    def _primal_vector(self, solution: Solution) -> np.ndarray:
        try:
            return np.array([solution.primal[v.name] for v in self._variables], dtype=float)
        except KeyError as e:
            raise LPModelError(f"solution lacks variable {e}") from e

    def __repr__(self) -> str:
        return f"LinearProgram(name={self.name!r}, variables={self.n_variables}, constraints={self.n_constraints})"
