"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class ActDesyncError(Exception):
    exit_code = 1


class ConfigError(ActDesyncError, ValueError):
    """Invalid configuration or input descriptor."""

    exit_code = 2


class DataError(ActDesyncError, ValueError):
    """Input data violates an operation's precondition."""

    exit_code = 3


class DomainError(DataError):
    pass


class ProfileIntegrityError(DataError):
    pass


class DegenerateDataError(DataError):
    pass


class DoubleProtectionError(DataError):
    pass


class DistributionError(DataError):
    pass


class DegenerateModelError(DataError):
    pass


class TraceIOError(ActDesyncError, OSError):
    exit_code = 4
