"""Exception and warning types raised across the package."""


class HawkesNetError(Exception):
    """Base class for all package errors."""


# network state
class DuplicateEdge(HawkesNetError):
    pass


class UnknownEndpoint(HawkesNetError):
    pass


class NonMonotoneTime(HawkesNetError):
    pass


class UnsortedEvents(HawkesNetError):
    pass


class EmptyNetwork(HawkesNetError):
    pass


class UnknownStatistic(HawkesNetError, KeyError):
    pass


class InvalidMark(HawkesNetError, ValueError):
    pass


# kernel / process
class EventAfterHorizon(HawkesNetError, ValueError):
    pass


class NonSimpleEvents(HawkesNetError, ValueError):
    pass


class Unstable(HawkesNetError):
    pass


class NonIntegrableKernel(HawkesNetError):
    pass


class ExplosionGuard(HawkesNetError):
    """Simulation exceeded its event ceiling; ``partial`` holds what was generated."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MissingCommunity(HawkesNetError, KeyError):
    pass


class MissingPosition(HawkesNetError, KeyError):
    pass


# estimation
class ZeroIntensityAtEvent(HawkesNetError):
    pass


class NonFiniteLikelihoodAtInit(HawkesNetError):
    pass


class SingularHessian(HawkesNetError):
    pass


# gof / ingest / config
class TooFewSamples(HawkesNetError, ValueError):
    pass


class ParseError(HawkesNetError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyInput(HawkesNetError, ValueError):
    pass


class ConfigError(HawkesNetError, ValueError):
    pass


class StabilityWarning(UserWarning):
    """Ground parameters violate the subcritical branching condition."""


class ClampWarning(UserWarning):
    pass


class BudgetExhausted(UserWarning):
    """Optimizer stopped on its evaluation budget before converging."""
