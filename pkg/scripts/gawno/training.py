"""
Adversarial training loop.

Each batch runs one discriminator step followed by one generator step, both with
freshly sampled noise. The discriminator minimises BCE(D(x), 1) + BCE(D(G(z)), 0)
with the generator frozen; the generator minimises the non-saturating
BCE(D(G(z)), 1) with the discriminator frozen. Both losses are evaluated on the
discriminator logit, so a saturated discriminator still passes gradient back.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from tqdm import tqdm

from .autodiff import (
    ParamStore,
    Tensor,
    adam_step,
    add,
    backward,
    bce_with_logits,
    get_tape,
    no_grad,
)
from .errors import ConfigurationError, DimensionError, NumericalError
from .fdi import generate_candidates, search_draws
from .fileio import PathLike, atomic_write_text
from .networks import (
    DiscriminatorSpec,
    GeneratorSpec,
    discriminator_forward,
    generator_forward,
    init_discriminator_params,
    init_generator_params,
)

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "d_loss", "g_loss", "probe_error")


@dataclass
class TrainConfig:
    """Optimiser settings plus the two network specs they train."""

    generator: GeneratorSpec
    discriminator: DiscriminatorSpec
    epochs: int = 200
    batch_size: int = 16
    lr: float = 1e-3
    weight_decay: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    window_stride: int = 8
    probe_draws: int = 8
    grad_clip: Optional[float] = None
    label_smoothing: float = 0.0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be > 0, got {self.lr}")
        if not 0.0 <= self.label_smoothing < 0.5:
            raise ConfigurationError(
                f"label_smoothing must lie in [0, 0.5), got {self.label_smoothing}"
            )
        if self.probe_draws < 1 or self.window_stride < 1:
            raise ConfigurationError("probe_draws and window_stride must be >= 1")
        gen, disc = self.generator, self.discriminator
        if (gen.features, gen.length) != (disc.features, disc.length):
            raise ConfigurationError(
                f"Generator ({gen.features}, {gen.length}) and discriminator "
                f"({disc.features}, {disc.length}) shape contracts differ"
            )

    @property
    def wavelet(self) -> str:
        return self.generator.wavelet

    def optimizer_kwargs(self) -> dict:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
            "grad_clip": self.grad_clip,
        }


class EpochRecord(NamedTuple):
    epoch: int
    d_loss: float
    g_loss: float
    probe_error: float


@dataclass
class TrainLog:
    """One record per completed epoch."""

    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for record in self.records:
            writer.writerow([record.epoch] + [repr(float(v)) for v in record[1:]])
        return buffer.getvalue()

    def write(self, path: PathLike) -> Path:
        return atomic_write_text(path, self.to_csv())


class TrainResult(NamedTuple):
    generator: ParamStore
    discriminator: ParamStore
    log: TrainLog


def probe_error(
    probe: np.ndarray, generator: ParamStore, spec: GeneratorSpec, draws: int, seed: int
) -> float:
    """Mean per-element squared error of the best-of-N reconstruction of the probe batch."""
    candidates = generate_candidates(generator, spec, draws, seed)
    _, errors = search_draws(probe, candidates)
    return float(errors.min(axis=1).mean() / (spec.features * spec.length))


def _check_finite(value: float, name: str, epoch: int, batch: int) -> None:
    if not math.isfinite(value):
        get_tape().clear()
        logger.error(f"{name} became non-finite at epoch {epoch}, batch {batch}")
        raise NumericalError(f"{name} is non-finite", epoch=epoch, batch=batch)


def discriminator_step(
    x: np.ndarray,
    generator: ParamStore,
    discriminator: ParamStore,
    cfg: TrainConfig,
    rng: np.random.Generator,
    epoch: int = 0,
    batch: int = 0,
) -> float:
    """One discriminator update on a real batch; the generator is not touched."""
    noise = rng.standard_normal(x.shape)
    with no_grad():
        fake = generator_forward(Tensor(noise), cfg.generator, generator).data
    real_score = discriminator_forward(Tensor(x), cfg.discriminator, discriminator)
    fake_score = discriminator_forward(Tensor(fake), cfg.discriminator, discriminator)
    loss = add(
        bce_with_logits(real_score.logit, 1.0 - cfg.label_smoothing),
        bce_with_logits(fake_score.logit, 0.0),
    )
    _check_finite(loss.item(), "Discriminator loss", epoch, batch)
    backward(loss)
    adam_step(discriminator, **cfg.optimizer_kwargs())
    return loss.item()


def generator_step(
    batch_size: int,
    generator: ParamStore,
    discriminator: ParamStore,
    cfg: TrainConfig,
    rng: np.random.Generator,
    epoch: int = 0,
    batch: int = 0,
) -> float:
    """One generator update; discriminator gradients are discarded."""
    spec = cfg.generator
    noise = rng.standard_normal((batch_size, spec.features, spec.length))
    fake = generator_forward(Tensor(noise), spec, generator)
    score = discriminator_forward(fake, cfg.discriminator, discriminator)
    loss = bce_with_logits(score.logit, 1.0)
    _check_finite(loss.item(), "Generator loss", epoch, batch)
    backward(loss)
    discriminator.zero_grad()
    adam_step(generator, **cfg.optimizer_kwargs())
    return loss.item()


def train(
    data: np.ndarray,
    cfg: TrainConfig,
    generator: Optional[ParamStore] = None,
    discriminator: Optional[ParamStore] = None,
    progress: bool = False,
) -> TrainResult:
    """
    Train a generator/discriminator pair on normalized windows.

    Args:
        data: Windows of shape (W, F, n).
        cfg: Training configuration.
        generator: Initial generator parameters (seeded init when omitted).
        discriminator: Initial discriminator parameters (seeded init when omitted).
        progress: Show a tqdm bar over epochs.

    Returns:
        TrainResult(generator, discriminator, log).

    Raises:
        NumericalError: If a loss becomes non-finite.
    """
    data = np.asarray(data, dtype=np.float64)
    spec = cfg.generator
    if data.ndim != 3 or data.shape[1:] != (spec.features, spec.length):
        raise DimensionError(
            f"Training windows must have shape (W, {spec.features}, {spec.length}), "
            f"got {data.shape}"
        )
    if data.shape[0] == 0:
        raise DimensionError("No training windows")

    rng = np.random.default_rng(cfg.seed)
    if generator is None:
        generator = init_generator_params(spec, rng)
    if discriminator is None:
        discriminator = init_discriminator_params(cfg.discriminator, rng)

    log = TrainLog()
    probe = data[: cfg.batch_size]
    probe_seed = cfg.seed + 1
    logger.info(
        f"Training on {data.shape[0]} windows for {cfg.epochs} epochs "
        f"({generator.num_parameters} G / {discriminator.num_parameters} D parameters)"
    )

    epochs = range(1, cfg.epochs + 1)
    for epoch in tqdm(epochs, desc="Training", unit="epoch", disable=not progress):
        order = rng.permutation(data.shape[0])
        d_losses, g_losses = [], []
        for batch, start in enumerate(range(0, data.shape[0], cfg.batch_size), start=1):
            x = data[order[start : start + cfg.batch_size]]

            d_loss = discriminator_step(x, generator, discriminator, cfg, rng, epoch, batch)
            g_loss = generator_step(x.shape[0], generator, discriminator, cfg, rng, epoch, batch)

            d_losses.append(d_loss)
            g_losses.append(g_loss)

        record = EpochRecord(
            epoch=epoch,
            d_loss=float(np.mean(d_losses)),
            g_loss=float(np.mean(g_losses)),
            probe_error=probe_error(probe, generator, spec, cfg.probe_draws, probe_seed),
        )
        log.append(record)
        logger.info(
            f"Epoch {epoch}: L_D={record.d_loss:.5f} L_G={record.g_loss:.5f} "
            f"probe={record.probe_error:.5f}"
        )

    return TrainResult(generator=generator, discriminator=discriminator, log=log)
