"""
Fault detection and isolation from generator reconstruction errors.

A window is reconstructed by the closest of N fixed-seed generator draws. The
squared residuals, smoothed along time, are compared against thresholds fitted
on normal operation: the mean over variables against a global threshold for
detection, and each variable against its own Gaussian for isolation.
"""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np
import yaml
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import uniform_filter1d

from .autodiff import ParamStore, Tensor, no_grad
from .data import SeriesTable
from .errors import (
    ConfigurationError,
    DimensionError,
    InsufficientDataError,
    LengthError,
    ParseError,
)
from .fileio import PathLike, atomic_write_text, read_csv_rows
from .networks import GeneratorSpec, generator_forward

logger = logging.getLogger(__name__)

ALIGNMENTS = ("centered", "trailing")
CANDIDATE_CHUNK = 64
SEARCH_CHUNK = 32


@dataclass(frozen=True)
class DetectConfig:
    """Draw count, noise seed, sigma multiplier and smoothing of the detector."""

    draws: int = 64
    seed: int = 0
    k: float = 3.0
    smoothing_window: int = 5
    smoothing_alignment: str = "trailing"

    def __post_init__(self) -> None:
        if self.draws < 1:
            raise ConfigurationError(f"draws must be >= 1, got {self.draws}")
        if self.k < 0:
            raise ConfigurationError(f"k must be >= 0, got {self.k}")
        if self.smoothing_window < 1:
            raise ConfigurationError(
                f"smoothing_window must be >= 1, got {self.smoothing_window}"
            )
        if self.smoothing_alignment not in ALIGNMENTS:
            raise ConfigurationError(
                f"smoothing_alignment must be one of {ALIGNMENTS}, got {self.smoothing_alignment}"
            )


# -------------------------------------------------------------------------
# Reconstruction
# -------------------------------------------------------------------------


def generate_candidates(
    generator: ParamStore, spec: GeneratorSpec, draws: int = 64, seed: int = 0
) -> np.ndarray:
    """Generator outputs for `draws` fixed-seed noise fields, shape (N, F, n)."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((draws, spec.features, spec.length))
    outputs = []
    with no_grad():
        for start in range(0, draws, CANDIDATE_CHUNK):
            chunk = Tensor(noise[start : start + CANDIDATE_CHUNK])
            outputs.append(generator_forward(chunk, spec, generator).data)
    return np.concatenate(outputs, axis=0)


def search_draws(x: np.ndarray, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Best candidate per window by total squared error.

    Returns:
        (indices, errors): chosen candidate per window (B,) and the full
        (B, N) error table. The lowest index wins ties.
    """
    errors = np.empty((x.shape[0], candidates.shape[0]))
    for start in range(0, x.shape[0], SEARCH_CHUNK):
        block = x[start : start + SEARCH_CHUNK]
        diff = block[:, None, :, :] - candidates[None, :, :, :]
        errors[start : start + SEARCH_CHUNK] = (diff**2).sum(axis=(2, 3))
    return errors.argmin(axis=1), errors


def _as_windows(x: Union[Tensor, np.ndarray], spec: GeneratorSpec) -> np.ndarray:
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if data.ndim != 3 or data.shape[1:] != (spec.features, spec.length):
        raise DimensionError(
            f"Expected windows of shape (B, {spec.features}, {spec.length}), got {data.shape}"
        )
    return data


def reconstruct(
    x: Union[Tensor, np.ndarray],
    generator: ParamStore,
    spec: GeneratorSpec,
    draws: int = 64,
    seed: int = 0,
) -> np.ndarray:
    """
    Reconstruct each window as the closest of `draws` generator samples.

    Args:
        x: Normalized windows of shape (B, F, n).
        generator: Trained generator parameters.
        spec: Generator architecture.
        draws: Number of noise draws N.
        seed: Seed of the noise draws.

    Returns:
        Array of shape (B, F, n).
    """
    windows = _as_windows(x, spec)
    candidates = generate_candidates(generator, spec, draws, seed)
    indices, _ = search_draws(windows, candidates)
    return candidates[indices]


def residual_profile(
    values: np.ndarray,
    generator: ParamStore,
    spec: GeneratorSpec,
    draws: int = 64,
    seed: int = 0,
) -> np.ndarray:
    """
    Per-timestep squared residuals of a (T, F) series.

    Every stride-1 window is reconstructed. Timestep t >= n-1 takes the last
    position of the window ending at t; earlier timesteps take the first window.
    """
    values = np.asarray(values, dtype=np.float64)
    n = spec.length
    if values.ndim != 2 or values.shape[1] != spec.features:
        raise DimensionError(f"Expected a (T, {spec.features}) series, got {values.shape}")
    if values.shape[0] < n:
        raise LengthError(f"Series of length {values.shape[0]} is shorter than window {n}")

    windows = sliding_window_view(values, n, axis=0)
    recon = reconstruct(windows, generator, spec, draws, seed)
    squared = (windows - recon) ** 2

    profile = np.empty_like(values)
    profile[:n] = squared[0].T
    profile[n - 1 :] = squared[:, :, -1]
    return profile


def smooth(series: np.ndarray, window: int = 5, alignment: str = "trailing") -> np.ndarray:
    """Moving average along axis 0 with edge samples repeated."""
    if alignment not in ALIGNMENTS:
        raise ConfigurationError(f"Unknown smoothing alignment: {alignment}")
    series = np.asarray(series, dtype=np.float64)
    if window <= 1:
        return series.copy()
    origin = (window - 1) // 2 if alignment == "trailing" else 0
    return uniform_filter1d(series, size=window, axis=0, mode="nearest", origin=origin)


def error_profile(
    values: np.ndarray, generator: ParamStore, spec: GeneratorSpec, cfg: DetectConfig
) -> np.ndarray:
    """Smoothed per-variable residuals, the quantity thresholds are fitted on."""
    raw = residual_profile(values, generator, spec, cfg.draws, cfg.seed)
    return smooth(raw, cfg.smoothing_window, cfg.smoothing_alignment)


# -------------------------------------------------------------------------
# Thresholds and detection
# -------------------------------------------------------------------------


@dataclass
class ThresholdModel:
    """Per-variable Gaussian of normal-operation residuals."""

    mean: np.ndarray
    std: np.ndarray
    k: float = 3.0
    names: Optional[list[str]] = None

    @property
    def variable_thresholds(self) -> np.ndarray:
        return self.mean + self.k * self.std

    @property
    def global_threshold(self) -> float:
        return float(self.variable_thresholds.mean())

    def with_k(self, k: float) -> "ThresholdModel":
        return ThresholdModel(mean=self.mean, std=self.std, k=k, names=self.names)


def fit_threshold(
    normal_errors: np.ndarray, k: float = 3.0, names: Optional[list[str]] = None
) -> ThresholdModel:
    """
    Fit mean and sample standard deviation of each variable's residuals.

    Args:
        normal_errors: (T, F) residual series from normal operation.
        k: Sigma multiplier.
        names: Optional variable names carried into the model.

    Raises:
        InsufficientDataError: With fewer than two samples.
    """
    errors = np.asarray(normal_errors, dtype=np.float64)
    if errors.ndim == 1:
        errors = errors[:, None]
    if errors.shape[0] < 2:
        raise InsufficientDataError(
            f"Threshold fitting needs at least 2 samples, got {errors.shape[0]}"
        )
    model = ThresholdModel(
        mean=errors.mean(axis=0), std=errors.std(axis=0, ddof=1), k=k, names=names
    )
    logger.info(f"Fitted threshold on {errors.shape[0]} samples: {model.global_threshold:.6g}")
    return model


@dataclass
class FaultReport:
    """Detection outcome for one series."""

    names: list[str]
    score: np.ndarray
    flags: np.ndarray
    residuals: np.ndarray
    variable_flags: np.ndarray
    onset: Optional[int] = None
    threshold: Optional[float] = None
    labels: Optional[np.ndarray] = None

    @property
    def flagged_fraction(self) -> float:
        return float(self.flags.mean()) if len(self.flags) else 0.0


def flag_errors(
    errors: np.ndarray,
    model: ThresholdModel,
    names: Optional[list[str]] = None,
    labels: Optional[np.ndarray] = None,
) -> FaultReport:
    """Apply global and per-variable thresholds to smoothed (T, F) residuals."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.shape[1] != len(model.mean):
        raise DimensionError(
            f"Residuals have {errors.shape[1]} variables, threshold model has {len(model.mean)}"
        )
    names = names or model.names or [f"x{i + 1}" for i in range(errors.shape[1])]
    score = errors.mean(axis=1)
    threshold = model.global_threshold
    flags = score > threshold
    hits = np.flatnonzero(flags)
    onset = int(hits[0]) if hits.size else None
    return FaultReport(
        names=list(names),
        score=score,
        flags=flags,
        residuals=errors,
        variable_flags=errors > model.variable_thresholds[None, :],
        onset=onset,
        threshold=threshold,
        labels=labels,
    )


def detect(
    x: Union[SeriesTable, np.ndarray],
    model: ThresholdModel,
    generator: ParamStore,
    spec: GeneratorSpec,
    cfg: DetectConfig = DetectConfig(),
) -> FaultReport:
    """
    Score a normalized series and flag timesteps above threshold.

    Args:
        x: Normalized SeriesTable, or a bare (T, F) array.
        model: Threshold fitted on normal residuals.
        generator: Trained generator parameters.
        spec: Generator architecture.
        cfg: Reconstruction and smoothing settings.

    Returns:
        FaultReport with one entry per timestep.
    """
    if isinstance(x, SeriesTable):
        values, names, labels = x.values, x.names, x.labels
    else:
        values, names, labels = np.asarray(x, dtype=np.float64), None, None
    report = flag_errors(error_profile(values, generator, spec, cfg), model, names, labels)
    if report.onset is None:
        logger.info("No fault detected")
    else:
        logger.info(
            f"Fault onset at t={report.onset}, {report.flagged_fraction:.1%} of timesteps flagged"
        )
    return report


# -------------------------------------------------------------------------
# Isolation
# -------------------------------------------------------------------------


class IsolationResult(NamedTuple):
    index: int
    name: str
    peak: float


def standardize(residuals: np.ndarray, model: ThresholdModel) -> np.ndarray:
    """(residual - mean) / std, with zero std mapped to a signed infinity (0 for no deviation)."""
    diff = residuals - model.mean
    std = np.broadcast_to(model.std, diff.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        degenerate = np.where(diff == 0, 0.0, np.sign(diff) * np.inf)
        scaled = diff / std
    return np.where(std > 0, scaled, degenerate)


def isolate(report: FaultReport, model: ThresholdModel) -> list[IsolationResult]:
    """
    Rank variables by peak standardized residual over the flagged region.

    Ties keep variable order. An empty flagged region yields an empty ranking.
    """
    if report.residuals.shape[1] != len(model.mean):
        raise DimensionError(
            f"Report has {report.residuals.shape[1]} variables, "
            f"threshold model has {len(model.mean)}"
        )
    if not report.flags.any():
        return []
    peaks = standardize(report.residuals[report.flags], model).max(axis=0)
    order = sorted(range(len(peaks)), key=lambda i: (-peaks[i], i))
    return [IsolationResult(i, report.names[i], float(peaks[i])) for i in order]


# -------------------------------------------------------------------------
# Persistence
# -------------------------------------------------------------------------


def report_columns(names: list[str], with_labels: bool) -> list[str]:
    columns = ["t", "score", "flag"]
    for name in names:
        columns += [f"residual_{name}", f"flag_{name}"]
    if with_labels:
        columns.append("label")
    return columns


def write_report(report: FaultReport, path: PathLike) -> Path:
    """Write the report CSV: t, score, flag, then residual_<v>, flag_<v> per variable."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report_columns(report.names, report.labels is not None))
    for t in range(len(report.score)):
        row = [str(t), repr(float(report.score[t])), str(int(report.flags[t]))]
        for v in range(len(report.names)):
            row += [repr(float(report.residuals[t, v])), str(int(report.variable_flags[t, v]))]
        if report.labels is not None:
            row.append(str(int(report.labels[t])))
        writer.writerow(row)
    written = atomic_write_text(path, buffer.getvalue())
    logger.info(f"Wrote report with {len(report.score)} rows to {written}")
    return written


def read_report(path: PathLike) -> FaultReport:
    """Parse a report CSV written by write_report()."""
    path = Path(path)
    rows = [row for row in read_csv_rows(path) if row]
    if not rows:
        raise ParseError(f"Report {path} is empty", row=1)

    header = rows[0]
    with_labels = header[-1] == "label"
    names = [col[len("residual_") :] for col in header if col.startswith("residual_")]
    if header != report_columns(names, with_labels):
        raise ParseError(f"Report {path} has an unexpected header", row=1)

    body = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"Expected {len(header)} cells, got {len(row)}", row=r)
        for c, cell in enumerate(row):
            try:
                body[r - 2, c] = float(cell)
            except ValueError:
                raise ParseError(f"Non-numeric cell '{cell}'", row=r, column=c + 1) from None

    score = body[:, 1]
    flags = body[:, 2].astype(bool)
    residuals = body[:, 3 : 3 + 2 * len(names) : 2]
    variable_flags = body[:, 4 : 4 + 2 * len(names) : 2].astype(bool)
    labels = body[:, -1].astype(int) if with_labels else None
    hits = np.flatnonzero(flags)
    return FaultReport(
        names=names,
        score=score,
        flags=flags,
        residuals=residuals,
        variable_flags=variable_flags,
        onset=int(hits[0]) if hits.size else None,
        labels=labels,
    )


def save_threshold(model: ThresholdModel, path: PathLike) -> Path:
    """Persist a ThresholdModel as YAML."""
    document = {
        "k": float(model.k),
        "names": list(model.names) if model.names else None,
        "mean": [float(v) for v in model.mean],
        "std": [float(v) for v in model.std],
    }
    return atomic_write_text(path, yaml.safe_dump(document, sort_keys=False))


def load_threshold(path: PathLike) -> ThresholdModel:
    with open(path, encoding="utf-8") as handle:
        document = yaml.safe_load(handle) or {}
    try:
        mean = np.asarray(document["mean"], dtype=np.float64)
        std = np.asarray(document["std"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Threshold file {path} is malformed: {e}") from e
    if mean.shape != std.shape:
        raise ParseError(f"Threshold file {path}: mean and std lengths differ")
    return ThresholdModel(
        mean=mean, std=std, k=float(document.get("k", 3.0)), names=document.get("names")
    )
