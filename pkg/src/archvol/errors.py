"""Exception hierarchy shared by the library and the command line."""


class ArchVolError(Exception):
    """Base class; the CLI turns these into exit code 1."""

    code = "error"


class DataError(ArchVolError, ValueError):
    code = "data_error"


class InsufficientDataError(DataError):
    code = "insufficient_sample"


class SpecError(ArchVolError, ValueError):
    code = "invalid_spec"


class ConfigError(ArchVolError, ValueError):
    code = "config_error"
