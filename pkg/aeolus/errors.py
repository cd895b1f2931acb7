"""
Errors Module

Defines the exception hierarchy shared by every Aeolus subpackage. Each error carries a
machine-readable `category` and the process `exit_code` the CLI reports when the error escapes a
command.

Classes:
    AeolusError: Root of all Aeolus errors.
    ShapeMismatchError: Tensor or record shapes do not line up.
    NonFiniteError: A NaN or Inf reached a checked value.
    UnsupportedPrimitiveError: A graph node has no registered backward rule.
    ConfigError: Unknown or invalid configuration keys/values.
    SimulationError: The simulator integration produced a non-finite state.
    LogFormatError: Base for malformed BOFL/BOFP files.
    BadMagicError: File magic does not match.
    BadVersionError: File version is not supported.
    TruncatedLogError: File ends in the middle of a record or episode.
    DatasetError: Data is missing or insufficient for the requested operation.
"""

from typing import Optional


class AeolusError(Exception):
    """Root of all Aeolus errors.

    Attributes:
        category (str): Machine-readable error category reported by the CLI.
        exit_code (int): Process exit code reported by the CLI.
    """

    category = "error"
    exit_code = 1


class ShapeMismatchError(AeolusError, ValueError):
    """Tensor, parameter or record shapes do not line up."""

    category = "contract"
    exit_code = 6


class NonFiniteError(AeolusError, ValueError):
    """A NaN or Inf reached a value that is checked for finiteness."""

    category = "contract"
    exit_code = 6


class UnsupportedPrimitiveError(AeolusError, TypeError):
    """A graph node was built from an op with no registered backward rule."""

    category = "contract"
    exit_code = 6


class ConfigError(AeolusError, ValueError):
    """Unknown or invalid configuration keys or values."""

    category = "config"
    exit_code = 2


class SimulationError(AeolusError, RuntimeError):
    """The simulator integration produced a non-finite state.

    Attributes:
        substep (int): Index of the physics substep (within the control step) that failed.
    """

    category = "simulation"
    exit_code = 5

    def __init__(self, message: str, substep: int = -1):
        super().__init__(message)
        self.substep = substep


class LogFormatError(AeolusError, ValueError):
    """Base class for malformed episode logs and parameter checkpoints."""

    category = "log-format"
    exit_code = 3


class BadMagicError(LogFormatError):
    """The file does not start with the expected magic bytes."""

    category = "log-bad-magic"


class BadVersionError(LogFormatError):
    """The file version is not supported by this reader."""

    category = "log-bad-version"


class TruncatedLogError(LogFormatError):
    """The file ends in the middle of a header, record or episode.

    Attributes:
        record_index (int): Index of the first record that could not be read completely.
        byte_offset (int): Byte offset at which that record starts.
    """

    category = "log-truncated"

    def __init__(self, message: str, record_index: int = -1, byte_offset: int = -1):
        super().__init__(message)
        self.record_index = record_index
        self.byte_offset = byte_offset


class DatasetError(AeolusError, ValueError):
    """Data is missing or insufficient for the requested operation.

    Attributes:
        line_number (Optional[int]): 1-based line of a malformed text input, if any.
    """

    category = "data"
    exit_code = 3

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number
