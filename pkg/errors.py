"""
Exception hierarchy for the workbench
"""


class WorkbenchError(Exception):
    """Base class of every error raised by the workbench"""


class StructuralError(WorkbenchError):
    """A game, run or machine refers to something that does not exist"""


class GuardViolation(WorkbenchError):
    """A delayed move lands on a valuation that does not satisfy the guard"""


class InvalidDelay(WorkbenchError):
    """A delayed move carries a negative delay"""


class ParseError(WorkbenchError):
    """Malformed game file, machine file or rational literal"""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{where}")


class DeterminismError(ParseError):
    """Two transitions for the same machine state"""


class HaltError(ParseError):
    """A transition leaves the halting state"""


class DomainError(WorkbenchError):
    """Argument outside the mathematical domain of an operation"""


class ConstructionError(WorkbenchError):
    """Gadget parameters that would produce a negative or fractional weight"""


class NotAffine(WorkbenchError):
    """Held-out probe disagrees with the cost fitted on the other probes"""


class StrategyFault(WorkbenchError):
    """A strategy produced a move that is not valid in the current configuration"""

    def __init__(self, player, step, reason):
        self.player = player
        self.step = step
        self.reason = reason
        super().__init__(f"{player} strategy fault at step {step}: {reason}")


class ResourceExceeded(WorkbenchError):
    """Explicit game tree grew past its node budget"""

    def __init__(self, budget):
        self.budget = budget
        super().__init__(f"game tree exceeds the node budget of {budget}")
