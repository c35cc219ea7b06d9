"""Exception taxonomy shared across the package.

CLI exit codes map onto these: ConfigError -> 2, DataFormatError -> 3,
TrainingError and other runtime failures -> 4.
"""


class MaldetError(Exception):
    """Base class for all package errors."""


class ConfigError(MaldetError):
    """Invalid parameter, layer wiring or configuration file."""


class InputError(MaldetError):
    """Caller passed data that violates an operation's preconditions."""


class DataFormatError(MaldetError):
    """Malformed file: bad magic, truncation, checksum or shape mismatch."""


class TrainingError(MaldetError):
    """Training diverged or could not proceed."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class StateError(MaldetError):
    """Detector used before fitting, or fitted state is inconsistent."""
