"""Exception types shared across modules."""


class QuditCCError(Exception):
    """Base class for package errors."""


class CapacityError(QuditCCError):
    """Requested state or enumeration exceeds the configured size guard."""


class InvalidAssignmentError(QuditCCError, ValueError):
    pass


class DimensionMismatchError(QuditCCError, ValueError):
    pass


class UndefinedRatioError(QuditCCError, ZeroDivisionError):
    pass


class MixerSpecError(QuditCCError, ValueError):
    pass


class OptimizerError(QuditCCError, RuntimeError):
    """Objective returned a non-finite value."""


class NoThresholdError(QuditCCError):
    """Mean-ratio curve never crosses the half-way level on the grid."""


class GateConstraintError(QuditCCError, ValueError):
    pass


class InvalidStateError(QuditCCError, ValueError):
    pass


class StepSizeError(QuditCCError, RuntimeError):
    """Integrator drifted; retry with a smaller step."""


class UnsupportedCaseError(QuditCCError, ValueError):
    pass
