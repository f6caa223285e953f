"""Exception hierarchy shared by every package in the workbench.

Each category carries the exit code the command-line interface reports when
an error of that category escapes a command.
"""

from typing import Optional


class StormcastError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = 1


class ConfigError(StormcastError, ValueError):
    """Invalid or missing configuration."""

    exit_code = 2


class NumericsError(StormcastError):
    """Base class for tensor-library errors."""

    exit_code = 3


class ShapeError(NumericsError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class DomainError(NumericsError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class NumericError(NumericsError, ArithmeticError):
    """A forward operation produced NaN or infinite values."""


class GraphError(NumericsError):
    """The differentiation graph cannot be replayed."""


class DataError(StormcastError):
    """Problems with frame data, windows or splits."""

    exit_code = 4


class IngestionError(DataError):
    """A raw frame file does not match the documented layout."""

    def __init__(self, message: str, byte_offset: Optional[int] = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)


class TrainingError(StormcastError):
    """Training could not complete."""

    exit_code = 5


class DivergenceError(TrainingError):
    """The training loss became non-finite."""

    def __init__(self, message: str, step: int, dump_path: Optional[str] = None):
        self.step = step
        self.dump_path = dump_path
        super().__init__(message)


class CheckpointError(StormcastError):
    """A checkpoint is missing, malformed or incompatible."""

    exit_code = 6


class TransferError(CheckpointError):
    """Pretrained weights cannot be transferred into the evidential model."""

    def __init__(self, message: str, mismatched: Optional[list[str]] = None):
        self.mismatched = list(mismatched or [])
        if self.mismatched:
            message = f"{message}: {', '.join(self.mismatched)}"
        super().__init__(message)


class EvaluationError(StormcastError):
    """Evaluation inputs are missing or inconsistent."""

    exit_code = 7


class CompareError(StormcastError):
    """Reports cannot be compared side by side."""

    exit_code = 8
