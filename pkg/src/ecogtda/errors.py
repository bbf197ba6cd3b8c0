"""Exception hierarchy.

Every error raised by the package derives from :class:`EcogTdaError`. The three
intermediate classes map onto CLI exit codes (config 2, data 3, numeric 4).
"""


class EcogTdaError(Exception):
    exit_code = 1


class ConfigError(EcogTdaError, ValueError):
    exit_code = 2


class DataError(EcogTdaError, ValueError):
    exit_code = 3


class NumericError(EcogTdaError, ArithmeticError):
    exit_code = 4


# signal
class IOFailure(DataError, OSError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InconsistentChannelCount(DataError):
    pass


class TooFewChannels(DataError):
    pass


class NyquistViolation(ConfigError):
    pass


class EventOutOfRange(DataError):
    pass


# bandpower / takens
class EmptyEpoch(DataError):
    pass


class WindowTooShort(DataError):
    pass


# persistence / diagram features
class DimensionUnsupported(ConfigError):
    pass


class TooLargeForOracle(ValueError, EcogTdaError):
    pass


class UnknownMetric(ConfigError):
    pass


# learn
class ClassTooSmall(DataError):
    pass


class DegenerateVariance(NumericError):
    pass


class NotTreeBased(TypeError, EcogTdaError):
    pass


class MismatchedFeatureSets(DataError):
    pass


# hyperopt
class SingularKernel(NumericError):
    pass


class OutOfBounds(ValueError, EcogTdaError):
    pass


class ObjectiveFailure(NumericError):
    pass


# synthetic
class SpecInvalid(ConfigError):
    pass
