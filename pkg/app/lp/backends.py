"""
LP solver backends behind a narrow interface, plus a factory with fallback.

Every backend takes a LinearProgram, solves it and reports status, primal
values and (optionally) row duals. The bundled backends drive HiGHS through
scipy.optimize.linprog, so no licensed solver is needed.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import vstack

from app.core.config import get_settings
from app.lp.program import LinearProgram, Sense, Solution, SolveStatus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverTolerances:
    """Feasibility/optimality tolerances handed to the backend"""
    feasibility: float = 1e-6
    optimality: float = 1e-6
    time_limit: Optional[float] = None

    @classmethod
    def from_settings(cls) -> "SolverTolerances":
        settings = get_settings()
        return cls(
            feasibility=settings.feasibility_tol,
            optimality=settings.optimality_tol,
            time_limit=settings.solver_time_limit,
        )


class LPBackend(ABC):
    """Solver backend interface"""

    name: str = "abstract"

    @abstractmethod
    def solve(self, lp: LinearProgram, tolerances: SolverTolerances, with_duals: bool = False) -> Solution:
        """Solve lp and return a Solution; backend failures become status=error"""


class ScipyHighsBackend(LPBackend):
    """HiGHS via scipy.optimize.linprog (method 'highs', 'highs-ds' or 'highs-ipm')"""

    _STATUS = {
        0: SolveStatus.OPTIMAL,
        2: SolveStatus.INFEASIBLE,
        3: SolveStatus.UNBOUNDED,
    }

    def __init__(self, method: str = "highs"):
        self.method = method
        self.name = method

    def solve(self, lp: LinearProgram, tolerances: SolverTolerances, with_duals: bool = False) -> Solution:
        start = time.perf_counter()
        try:
            result = self._linprog(lp, tolerances, presolve=True)
            if _is_ambiguous(result):
                # presolve cannot tell infeasible from unbounded; simplex can
                logger.debug(f"Re-solving {lp.name} without presolve: {result.message}")
                result = self._linprog(lp, tolerances, presolve=False)
        except (ValueError, MemoryError) as e:
            logger.error(f"❌ Backend {self.name} failed on {lp.name}: {e}")
            return Solution(status=SolveStatus.ERROR, message=str(e), backend=self.name,
                            solve_time=time.perf_counter() - start)

        status = self._STATUS.get(result.status, SolveStatus.ERROR)
        elapsed = time.perf_counter() - start
        if status != SolveStatus.OPTIMAL:
            return Solution(status=status, message=str(result.message), backend=self.name, solve_time=elapsed)

        names = [v.name for v in lp.variables]
        primal = dict(zip(names, (float(x) for x in result.x)))
        duals = self._duals(lp, result) if with_duals else None
        return Solution(
            status=status,
            objective=float(result.fun),
            primal=primal,
            duals=duals,
            message=str(result.message),
            backend=self.name,
            solve_time=elapsed,
        )

    def _linprog(self, lp: LinearProgram, tolerances: SolverTolerances, presolve: bool):
        c = lp.objective_vector()
        lower, upper = lp.bounds()
        bounds = np.column_stack([
            np.where(np.isfinite(lower), lower, -np.inf),
            np.where(np.isfinite(upper), upper, np.inf),
        ]) if lp.n_variables else None

        le_rows = [con for con in lp.constraints if con.sense == Sense.LE]
        ge_rows = [con for con in lp.constraints if con.sense == Sense.GE]
        eq_rows = [con for con in lp.constraints if con.sense == Sense.EQ]

        A_ub = b_ub = A_eq = b_eq = None
        if le_rows or ge_rows:
            # >= rows are negated into <= rows
            A_le = lp.constraint_matrix(le_rows)
            A_ge = lp.constraint_matrix(ge_rows)
            A_ub = vstack([A_le, -A_ge]).tocsr()
            b_ub = np.concatenate([[con.rhs for con in le_rows], [-con.rhs for con in ge_rows]])
        if eq_rows:
            A_eq = lp.constraint_matrix(eq_rows)
            b_eq = np.array([con.rhs for con in eq_rows])

        options: Dict[str, object] = {
            "presolve": presolve,
            "primal_feasibility_tolerance": tolerances.feasibility,
            "dual_feasibility_tolerance": tolerances.optimality,
        }
        if tolerances.time_limit:
            options["time_limit"] = tolerances.time_limit

        result = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            bounds=bounds, method=self.method, options=options,
        )
        result.row_order = (le_rows, ge_rows, eq_rows)
        return result

    @staticmethod
    def _duals(lp: LinearProgram, result) -> Dict[str, float]:
        le_rows, ge_rows, eq_rows = result.row_order
        duals: Dict[str, float] = {}
        ineq = getattr(result, "ineqlin", None)
        if ineq is not None and len(le_rows) + len(ge_rows):
            marginals = np.asarray(ineq.marginals)
            for con, value in zip(le_rows, marginals[: len(le_rows)]):
                duals[con.name] = float(value)
            for con, value in zip(ge_rows, marginals[len(le_rows):]):
                duals[con.name] = -float(value)
        eq = getattr(result, "eqlin", None)
        if eq is not None and eq_rows:
            for con, value in zip(eq_rows, np.asarray(eq.marginals)):
                duals[con.name] = float(value)
        return duals


def _is_ambiguous(result) -> bool:
    message = str(result.message).lower()
    ambiguous = "infeasible or unbounded" in message or "unbounded or infeasible" in message
    return result.status in (2, 3, 4) and ambiguous


class BackendFactory:
    """Factory for LP backends; unknown names fall back to the default backend"""

    DEFAULT = "highs"

    def __init__(self):
        self._registry: Dict[str, Callable[[], LPBackend]] = {
            "highs": lambda: ScipyHighsBackend("highs"),
            "highs-ds": lambda: ScipyHighsBackend("highs-ds"),
            "highs-ipm": lambda: ScipyHighsBackend("highs-ipm"),
        }

    def register(self, name: str, constructor: Callable[[], LPBackend]) -> None:
        """Attach an external solver under a name"""
        self._registry[name] = constructor

    def available(self) -> List[str]:
        return sorted(self._registry)

    def create_backend(self, name: Optional[str] = None) -> LPBackend:
        """Create a backend instance by name"""
        name = name or get_settings().solver_backend
        constructor = self._registry.get(name)
        if constructor is None:
            logger.warning(f"⚠️ Unknown LP backend '{name}', falling back to '{self.DEFAULT}'")
            constructor = self._registry[self.DEFAULT]
        return constructor()


# Global factory instance
backend_factory = BackendFactory()


def solve(lp: LinearProgram, backend: Optional[str | LPBackend] = None,
          tolerances: Optional[SolverTolerances] = None, with_duals: bool = False) -> Solution:
    """
    Solve a linear program.

    Args:
        lp: Program to solve
        backend: Backend name or instance (default from settings)
        tolerances: Feasibility/optimality tolerances (default from settings)
        with_duals: Also report row duals

    Returns:
        Solution with status, objective and primal values
    """
    solver = backend if isinstance(backend, LPBackend) else backend_factory.create_backend(backend)
    tolerances = tolerances or SolverTolerances.from_settings()
    logger.info(f"🔧 Solving {lp!r} with {solver.name}")
    solution = solver.solve(lp, tolerances, with_duals=with_duals)

    if solution.is_optimal:
        solution = _audit(lp, solution, tolerances)
    if solution.is_optimal:
        logger.info(f"✅ {lp.name}: optimal objective {solution.objective:.6f} in {solution.solve_time:.3f}s")
    else:
        logger.warning(f"⚠️ {lp.name}: {solution.status.value} ({solution.message})")
    return solution


def _audit(lp: LinearProgram, solution: Solution, tolerances: SolverTolerances) -> Solution:
    """Re-check an optimal solution against the program; failures become status=error"""
    violation, where = lp.check_solution(solution)
    if violation > 10 * tolerances.feasibility:
        message = f"backend solution violates {where} by {violation:.3g}"
    else:
        objective = lp.evaluate_objective(solution)
        gap = abs(objective - solution.objective)
        if gap <= 10 * tolerances.optimality * max(1.0, abs(objective)):
            return solution
        message = f"reported objective {solution.objective:.6g} differs from c·x = {objective:.6g}"
    logger.error(f"❌ {lp.name}: {message}")
    return Solution(status=SolveStatus.ERROR, message=message, backend=solution.backend,
                    solve_time=solution.solve_time)
