"""
Exception hierarchy for the planner.

Every error raised on purpose derives from PlanningError so that the CLI and
the HTTP layer can map it to an exit code or a status code in one place.
"""

from enum import IntEnum
from typing import Optional, Tuple


class ExitCode(IntEnum):
    """Process exit codes of the command-line front end"""
    OK = 0
    INPUT_ERROR = 1
    INFEASIBLE = 2
    UNBOUNDED = 3
    SOLVER_ERROR = 4
    VERIFICATION_FAILED = 5
    DOMINANCE_VIOLATION = 6


class PlanningError(Exception):
    """Base class for planner errors"""
    exit_code: ExitCode = ExitCode.INPUT_ERROR


class ConfigurationError(PlanningError):
    """Invalid settings or scenario configuration"""


class NetworkDataError(PlanningError):
    """Malformed or inconsistent network input, reported with file/row context"""

    def __init__(self, message: str, file: Optional[str] = None, row: Optional[int] = None):
        self.file = file
        self.row = row
        location = ""
        if file is not None:
            location = f"{file} row {row}: " if row is not None else f"{file}: "
        super().__init__(f"{location}{message}")


class DisconnectedNetworkError(NetworkDataError):
    """The bus/line graph has more than one connected component"""


class UnbalancedInjectionError(PlanningError):
    """Nodal injections do not sum to zero"""


class BridgeContingencyError(PlanningError):
    """A contingency would island the network; its LODF column is undefined"""

    def __init__(self, line_id: str):
        self.line_id = line_id
        super().__init__(f"line '{line_id}' is a bridge; its outage islands the network")


class LPModelError(PlanningError):
    """Malformed linear program (duplicate name, inverted bounds, unknown variable)"""


class CorruptedSolveError(PlanningError):
    """A solution lacks values the name map expects"""
    exit_code = ExitCode.SOLVER_ERROR


class StageOneFlowError(PlanningError):
    """Fixed stage-one flows violate the uncorrected post-outage TATL limit"""

    def __init__(self, snapshot: int, outage: str, line: str, flow: float, limit: float):
        self.triple: Tuple[int, str, str] = (snapshot, outage, line)
        self.flow = flow
        self.limit = limit
        super().__init__(
            f"stage-one flow violates TATL at (t={snapshot}, k={outage}, l={line}): "
            f"|{flow:.6f}| > {limit:.6f} MW"
        )


class ScenarioFailure(PlanningError):
    """A scenario did not produce a verified optimal plan"""

    def __init__(self, message: str, exit_code: ExitCode):
        self.exit_code = exit_code
        super().__init__(message)
