"""
Synthetic correlated process and fault injection.

The process is a desk-scale stand-in for a plant simulation: every channel mixes
a few shared latent sinusoids with its own gain and phase, plus stationary AR(1)
noise. Faults follow the usual process-monitoring taxonomy (step, random
variation, slow drift, sticking) and are sized in units of the target
variable's pre-onset standard deviation.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import SeriesTable
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

FAULT_KINDS = ("step", "random_variation", "slow_drift", "sticking")


@dataclass(frozen=True)
class SynthConfig:
    """Shape and noise of the synthetic process."""

    features: int = 5
    steps: int = 480
    seed: int = 0
    latent_periods: tuple[int, ...] = (48, 96, 32)
    ar_coef: float = 0.7
    noise_std: float = 0.1

    def __post_init__(self) -> None:
        if self.features < 2:
            raise ConfigurationError(
                f"Synthetic process needs >= 2 variables, got {self.features}"
            )
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        if not self.latent_periods or any(p < 2 for p in self.latent_periods):
            raise ConfigurationError(
                f"latent_periods must be integers >= 2: {self.latent_periods}"
            )
        if not -1.0 < self.ar_coef < 1.0:
            raise ConfigurationError(f"ar_coef must lie in (-1, 1), got {self.ar_coef}")
        if self.noise_std < 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")


def synth_process(
    features: int = 5, steps: int = 480, seed: int = 0, config: Optional[SynthConfig] = None
) -> SeriesTable:
    """
    Generate a correlated multichannel series with all-zero labels.

    Args:
        features: Number of variables F (>= 2).
        steps: Number of timesteps T.
        seed: RNG seed; the output is deterministic given it.
        config: Optional full configuration; its shape fields are overridden
            by `features`, `steps` and `seed`.

    Returns:
        SeriesTable with variables named x1..xF.
    """
    base = config or SynthConfig()
    cfg = SynthConfig(
        features=features,
        steps=steps,
        seed=seed,
        latent_periods=tuple(base.latent_periods),
        ar_coef=base.ar_coef,
        noise_std=base.noise_std,
    )
    rng = np.random.default_rng(cfg.seed)
    periods = np.asarray(cfg.latent_periods, dtype=np.float64)

    gains = rng.uniform(0.5, 1.5, size=(cfg.features, len(periods)))
    phases = rng.uniform(-0.4, 0.4, size=(cfg.features, len(periods)))
    offsets = rng.uniform(-1.0, 1.0, size=cfg.features)

    t = np.arange(cfg.steps, dtype=np.float64)
    angles = 2.0 * np.pi * t[:, None, None] / periods[None, None, :] + phases[None, :, :]
    signal = (gains[None, :, :] * np.sin(angles)).sum(axis=2) + offsets[None, :]

    shocks = rng.standard_normal((cfg.steps, cfg.features)) * cfg.noise_std
    noise = np.empty_like(shocks)
    noise[0] = shocks[0] / np.sqrt(1.0 - cfg.ar_coef**2)
    for step in range(1, cfg.steps):
        noise[step] = cfg.ar_coef * noise[step - 1] + shocks[step]

    names = [f"x{i + 1}" for i in range(cfg.features)]
    logger.debug(f"Synthesized {cfg.steps} x {cfg.features} process with seed {cfg.seed}")
    return SeriesTable(
        names=names, values=signal + noise, labels=np.zeros(cfg.steps, dtype=np.int64)
    )


@dataclass(frozen=True)
class FaultSpec:
    """
    One fault to inject.

    Attributes:
        kind: step, random_variation, slow_drift or sticking.
        variable: Index of the target variable.
        onset: First faulty timestep.
        magnitude: Size in units of the variable's pre-onset standard deviation.
    """

    kind: str = "step"
    variable: int = 0
    onset: int = 160
    magnitude: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ConfigurationError(
                f"Unknown fault kind '{self.kind}'; expected one of {FAULT_KINDS}"
            )
        if self.onset < 0:
            raise ConfigurationError(f"Fault onset must be >= 0, got {self.onset}")
        if self.magnitude < 0:
            raise ConfigurationError(f"Fault magnitude must be >= 0, got {self.magnitude}")


def _reference_std(column: np.ndarray, onset: int) -> float:
    reference = column[:onset] if onset >= 2 else column
    return float(reference.std(ddof=1)) if len(reference) >= 2 else 0.0


def inject_fault(x: SeriesTable, spec: FaultSpec, seed: int = 0) -> SeriesTable:
    """
    Return a copy of `x` with one fault applied and labels set from onset.

    Only the target column changes; every other column is copied bit for bit.

    Raises:
        IndexError: If the target variable does not exist.
        ConfigurationError: If the onset lies outside the series.
    """
    if not 0 <= spec.variable < x.features:
        raise IndexError(f"Fault target {spec.variable} out of range for {x.features} variables")
    if spec.onset >= x.steps:
        raise ConfigurationError(f"Fault onset {spec.onset} is beyond the series end {x.steps}")

    values = x.values.copy()
    column = values[:, spec.variable]
    onset, remaining = spec.onset, x.steps - spec.onset
    sigma = _reference_std(column, onset)
    size = spec.magnitude * sigma

    if spec.kind == "step":
        column[onset:] += size
    elif spec.kind == "random_variation":
        column[onset:] += np.random.default_rng(seed).normal(0.0, 1.0, remaining) * size
    elif spec.kind == "slow_drift":
        column[onset:] += size * np.arange(1, remaining + 1) / remaining
    else:
        column[onset:] = column[onset]

    labels = np.zeros(x.steps, dtype=np.int64) if x.labels is None else x.labels.copy()
    labels[onset:] = 1
    logger.debug(
        f"Injected {spec.kind} fault on {x.names[spec.variable]} at t={onset} "
        f"({spec.magnitude} sigma = {size:.4g})"
    )
    return SeriesTable(names=list(x.names), values=values, labels=labels)


def inject_faults(x: SeriesTable, specs: Sequence[FaultSpec], seed: int = 0) -> SeriesTable:
    """Apply several faults in order; fault i draws its noise from seed + i."""
    for i, spec in enumerate(specs):
        x = inject_fault(x, spec, seed + i)
    return x
