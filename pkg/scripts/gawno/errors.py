"""
Exception hierarchy for GAWNO.

Every error raised by the library derives from GawnoError so the CLI can map
failures onto exit codes in one place.
"""

from typing import Optional


class GawnoError(Exception):
    """Base class for all GAWNO errors."""


class DimensionError(GawnoError):
    """Tensor shapes do not agree."""


class LengthError(GawnoError):
    """A length axis is odd, not divisible, or too short."""


class ConfigurationError(GawnoError):
    """A configuration value or network spec is invalid."""


class InvalidStateError(GawnoError):
    """An operation was called in a state that does not allow it."""


class NumericalError(GawnoError):
    """A loss or activation became non-finite."""

    def __init__(self, message: str, epoch: Optional[int] = None, batch: Optional[int] = None):
        self.epoch = epoch
        self.batch = batch
        if epoch is not None:
            message = f"{message} (epoch {epoch}, batch {batch})"
        super().__init__(message)


class CheckpointError(GawnoError):
    """A checkpoint could not be written or read."""


class CorruptCheckpointError(CheckpointError):
    """The checkpoint file is truncated or has a bad header."""


class CheckpointShapeError(CheckpointError):
    """A stored tensor does not match the shape the network spec expects."""


class ParseError(GawnoError):
    """A CSV file could not be parsed."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        self.row = row
        self.column = column
        if row is not None:
            location = f"row {row}" if column is None else f"row {row}, column {column}"
            message = f"{message} at {location}"
        super().__init__(message)


class InsufficientDataError(GawnoError):
    """Not enough samples to fit a statistic."""


class UndefinedMetricError(GawnoError):
    """A metric is undefined for the given labels."""


class ConstantChannelError(GawnoError):
    """A variable has zero spread and cannot be normalized."""
