class DirpError(Exception):
    """Base class for all errors raised by dirp."""


class ConfigurationError(DirpError, ValueError):
    """Inconsistent dimensions, invalid settings or malformed scenario files."""


class ContractError(DirpError, ValueError):
    """A pre-condition of an operation was violated (off-simplex action, nonfinite values, ...)."""


class CheckpointError(DirpError, ValueError):
    """A checkpoint or knowledge package could not be read or does not match the target architecture."""
