"""Exception hierarchy shared by every module of the package."""


class AoIError(Exception):
    """Base class for all package errors."""


# topology / scenario
class GraphError(AoIError, ValueError):
    pass


class DuplicateLink(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class UnreachableNode(GraphError):
    pass


class BadNodeId(GraphError):
    pass


class BadRate(AoIError, ValueError):
    pass


class EmptyHorizon(AoIError, ValueError):
    pass


class ScenarioError(AoIError, ValueError):
    pass


# simulation
class UnsupportedPolicy(AoIError, ValueError):
    pass


class HorizonExceededEventCap(AoIError, RuntimeError):
    pass


# metrics
class UnknownNode(AoIError, KeyError):
    pass


class NoPeaks(AoIError, ValueError):
    pass


class NonMonotonePenalty(AoIError, ValueError):
    pass


# harness
class IncompatibleCouplingMode(AoIError, ValueError):
    pass


class ScenarioMismatch(AoIError, ValueError):
    pass


class TooFewSamples(AoIError, ValueError):
    pass


class NotTreeRestricted(AoIError, ValueError):
    pass


class DivisionByZeroAge(AoIError, ZeroDivisionError):
    pass


class BadServerCount(AoIError, ValueError):
    pass


# configuration
class ConfigError(AoIError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError, ValueError):
    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class UnknownKey(ConfigError):
    pass
