"""Exception types shared across the package."""


class AcboError(Exception):
    """Base class for all package errors."""


class GraphError(AcboError):
    """Base class for causal-graph validation failures."""


class CycleDetected(GraphError):
    pass


class DanglingParent(GraphError):
    pass


class RewardHasChildren(GraphError):
    pass


class InvalidTopoOrder(GraphError):
    pass


class InvalidProfile(AcboError):
    pass


class DimensionMismatch(AcboError):
    pass


class CholeskyFailure(AcboError):
    pass


class NonFiniteObjective(AcboError):
    pass


class GraphTooLarge(AcboError):
    pass


class RewardOutOfRange(AcboError):
    pass


class GridTooLarge(AcboError):
    pass


class ZeroBaseGradient(AcboError):
    pass


class IndexOutOfRange(AcboError):
    pass


class UnknownEnvironment(AcboError):
    pass


class InvalidDepot(AcboError):
    pass


class MalformedRow(AcboError):
    pass


class MissingCovariate(AcboError):
    pass


class ActionSpaceTooLarge(AcboError):
    pass
