"""
Solver-agnostic LP model, solver backends and LP text export
"""

from app.lp.backends import BackendFactory, LPBackend, SolverTolerances, backend_factory, solve
from app.lp.lp_format import read_lp, read_lp_file, write_lp, write_lp_file
from app.lp.program import INF, Constraint, LinearProgram, Sense, Solution, SolveStatus, Variable

__all__ = [
    "INF",
    "BackendFactory",
    "Constraint",
    "LPBackend",
    "LinearProgram",
    "Sense",
    "Solution",
    "SolveStatus",
    "SolverTolerances",
    "Variable",
    "backend_factory",
    "read_lp",
    "read_lp_file",
    "solve",
    "write_lp",
    "write_lp_file",
]
