"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class IoTAGError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(IoTAGError):
    """A scenario file could not be turned into a model.

    Carries the 1-based ``line`` and ``column`` of the offending token so the
    CLI can print ``file:line:col: message``.
    """

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, col {self.column}: {self.message}"


class ScenarioSyntaxError(ScenarioError):
    pass


class ArityMismatch(ScenarioError):
    pass


class UnknownInterval(ScenarioError):
    pass


class UnboundHeadVariable(ScenarioError):
    pass


class DuplicateName(ScenarioError):
    pass


class UnknownGoalPredicate(ScenarioError):
    pass


class MissingDeclaration(ScenarioError):
    pass


class PredicateKindConflict(ScenarioError):
    """A predicate is used both as a base fact and as a rule head."""


class NotDerived(IoTAGError):
    pass


class GraphError(IoTAGError):
    pass


class GoalUnrepresentable(GraphError):
    pass


class UnknownNodeId(GraphError):
    pass


class PlacementError(IoTAGError):
    pass


class IncompletePlacement(PlacementError):
    pass


class InvalidZone(PlacementError):
    pass


class StepOutOfRange(IoTAGError):
    pass


class NoDeploymentVariables(IoTAGError):
    pass


class EnumerationLimitExceeded(IoTAGError):
    def __init__(self, size: int, limit: int) -> None:
        super().__init__(f"{size} placements exceed the enumeration limit of {limit}")
        self.size = size
        self.limit = limit
