"""Exception hierarchy shared by the library and the CLI."""


class IntentError(Exception):
    """Base class for every error raised on purpose by this package."""

    exit_code = 1


class ConfigError(IntentError, ValueError):
    """Invalid parameters, plans, splits or schedules."""

    exit_code = 2


class TrajectoryDataError(IntentError, ValueError):
    """Malformed, non-finite or too-short trajectory data."""

    exit_code = 3


class NumericalError(IntentError, ArithmeticError):
    """Non-finite values during training, inference or fitting."""

    exit_code = 4


class ModelFileError(IntentError):
    """A model file could not be read."""

    exit_code = 5


class NotAModelFileError(ModelFileError):
    pass


class ModelVersionError(ModelFileError):
    exit_code = 6


class ModelTruncatedError(ModelFileError):
    pass


class ModelChecksumError(ModelFileError):
    pass


class ModelDimensionError(ModelFileError):
    pass
