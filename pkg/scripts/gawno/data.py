"""
Multivariate series ingestion, normalization and windowing.

CSV layout: UTF-8, comma separated, a header row of variable names, numeric
cells, and an optional final column named "label" holding 0/1 per timestep.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TypeVar, Union

import numpy as np

from .errors import ConstantChannelError, DimensionError, LengthError, ParseError
from .fileio import PathLike, atomic_write_text, read_csv_rows

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


@dataclass
class SeriesTable:
    """Named (T, F) measurements with optional per-timestep 0/1 labels."""

    names: list[str]
    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise DimensionError(
                f"values of shape {self.values.shape} do not match {len(self.names)} names"
            )
        if len(set(self.names)) != len(self.names):
            raise DimensionError(f"Variable names must be unique: {self.names}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.values.shape[0],):
                raise DimensionError(
                    f"labels of shape {self.labels.shape} do not match {self.values.shape[0]} rows"
                )

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    @property
    def features(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "SeriesTable":
        """Copy with new values, same names and labels."""
        labels = None if self.labels is None else self.labels.copy()
        return SeriesTable(names=list(self.names), values=values, labels=labels)


def _parse_cell(cell: str, row: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"Non-numeric cell '{cell}'", row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"Missing or non-finite value '{cell}'", row=row, column=column)
    return value


def load_csv(path: PathLike) -> SeriesTable:
    """
    Read a series CSV.

    Rows and columns in error messages are 1-based and count the header row.

    Raises:
        ParseError: On an empty file, ragged row, non-numeric or non-finite cell,
            or a label other than 0/1, or bytes that are not UTF-8.
    """
    path = Path(path)
    rows = read_csv_rows(path)
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError(f"{path} is empty", row=1)

    header = [cell.strip() for cell in rows[0]]
    has_labels = header[-1] == LABEL_COLUMN
    names = header[:-1] if has_labels else header
    if not names:
        raise ParseError(f"{path} has no variable columns", row=1)

    values = np.empty((len(rows) - 1, len(names)))
    labels = np.zeros(len(rows) - 1, dtype=np.int64) if has_labels else None
    for i, row in enumerate(rows[1:]):
        row_number = i + 2
        if len(row) != len(header):
            raise ParseError(f"Expected {len(header)} cells, got {len(row)}", row=row_number)
        for j, name in enumerate(names):
            values[i, j] = _parse_cell(row[j].strip(), row_number, j + 1)
        if labels is not None:
            label = row[-1].strip()
            if label not in ("0", "1"):
                raise ParseError(f"Label must be 0 or 1, got '{label}'", row_number, len(header))
            labels[i] = int(label)

    if values.shape[0] == 0:
        raise ParseError(f"{path} has a header but no data rows", row=2)

    logger.info(f"Loaded {values.shape[0]} rows x {len(names)} variables from {path}")
    return SeriesTable(names=names, values=values, labels=labels)


def write_csv(table: SeriesTable, path: PathLike) -> Path:
    """Write a table in the load_csv() format; labels become the final column."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = list(table.names) + ([LABEL_COLUMN] if table.labels is not None else [])
    writer.writerow(header)
    for t in range(table.steps):
        row = [repr(float(v)) for v in table.values[t]]
        if table.labels is not None:
            row.append(str(int(table.labels[t])))
        writer.writerow(row)
    written = atomic_write_text(path, buffer.getvalue())
    logger.info(f"Wrote {table.steps} rows to {written}")
    return written


@dataclass
class NormStats:
    """
    Training statistics for z-score followed by min-max scaling onto [-1, 1].

    `z_min` and `z_max` are the extremes of the z-scored training data.
    """

    names: list[str]
    mean: np.ndarray
    std: np.ndarray
    z_min: np.ndarray
    z_max: np.ndarray

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {"mean": self.mean, "std": self.std, "min": self.z_min, "max": self.z_max}


def fit_norm(train: SeriesTable) -> NormStats:
    """
    Compute per-variable normalization statistics on training data.

    Raises:
        ConstantChannelError: If any variable has zero sample standard deviation.
    """
    if train.steps < 2:
        raise LengthError(f"Normalization needs at least 2 rows, got {train.steps}")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0, ddof=1)
    for name, spread in zip(train.names, std):
        if not spread > 0:
            raise ConstantChannelError(f"Variable '{name}' is constant and cannot be normalized")
    z = (train.values - mean) / std
    return NormStats(
        names=list(train.names), mean=mean, std=std, z_min=z.min(axis=0), z_max=z.max(axis=0)
    )


Normalizable = TypeVar("Normalizable", SeriesTable, np.ndarray)


def _apply(x: Normalizable, fn) -> Normalizable:
    if isinstance(x, SeriesTable):
        return x.with_values(fn(x.values))
    return fn(np.asarray(x, dtype=np.float64))


def normalize(x: Normalizable, stats: NormStats) -> Normalizable:
    """z = (x - mean) / std, then 2 (z - z_min) / (z_max - z_min) - 1."""

    def forward(values: np.ndarray) -> np.ndarray:
        z = (values - stats.mean) / stats.std
        return 2.0 * (z - stats.z_min) / (stats.z_max - stats.z_min) - 1.0

    return _apply(x, forward)


def denormalize(x: Normalizable, stats: NormStats) -> Normalizable:
    """Inverse of normalize()."""

    def inverse(values: np.ndarray) -> np.ndarray:
        z = (values + 1.0) / 2.0 * (stats.z_max - stats.z_min) + stats.z_min
        return z * stats.std + stats.mean

    return _apply(x, inverse)


@dataclass
class WindowSet:
    """Windows of shape (W, F, n) with any-faulty labels and start offsets."""

    values: np.ndarray
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    starts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.values.shape[0]

    def normal(self) -> "WindowSet":
        """Subset of windows that cover no faulty timestep."""
        keep = ~self.labels
        return WindowSet(
            values=self.values[keep], labels=self.labels[keep], starts=self.starts[keep]
        )


def window(x: Union[SeriesTable, np.ndarray], length: int, stride: int) -> WindowSet:
    """
    Cut a series into windows [k*stride, k*stride + length).

    Raises:
        LengthError: If `length` exceeds the series or stride/length is not positive.
    """
    table = x if isinstance(x, SeriesTable) else None
    values = table.values if table is not None else np.asarray(x, dtype=np.float64)
    steps = values.shape[0]
    if length < 1 or stride < 1:
        raise LengthError(f"Window length and stride must be positive, got {length}, {stride}")
    if length > steps:
        raise LengthError(f"Window length {length} exceeds series length {steps}")

    starts = np.arange(0, steps - length + 1, stride)
    windows = np.stack([values[s : s + length].T for s in starts])
    if table is not None and table.labels is not None:
        labels = np.array([table.labels[s : s + length].any() for s in starts])
    else:
        labels = np.zeros(len(starts), dtype=bool)
    return WindowSet(values=windows, labels=labels, starts=starts)


def leading_normal(table: SeriesTable) -> SeriesTable:
    """Rows before the first faulty label; the whole table when unlabeled or all normal."""
    if table.labels is None or not table.labels.any():
        return table
    cut = int(np.argmax(table.labels > 0))
    return SeriesTable(
        names=list(table.names), values=table.values[:cut].copy(), labels=table.labels[:cut].copy()
    )
