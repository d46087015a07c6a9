"""
Binary checkpoint format.

Layout (little-endian):
    magic      4 bytes  b"GAWN"
    version    u16
    config     u32 length + UTF-8 YAML text (specs, training settings, variables)
    count      u32 number of tensor records
    records    u16 name length + UTF-8 name, u8 rank, u32 per dim, float64 data

Generator tensors are stored under "G.", discriminator tensors under "D." and
normalization statistics under "norm.".
"""

import logging
import math
import struct
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .autodiff import ParamStore
from .data import NormStats
from .errors import CheckpointError, CheckpointShapeError, CorruptCheckpointError
from .fileio import PathLike, atomic_write_bytes
from .networks import (
    DiscriminatorSpec,
    GeneratorSpec,
    init_discriminator_params,
    init_generator_params,
)
from .training import TrainConfig

logger = logging.getLogger(__name__)

MAGIC = b"GAWN"
FORMAT_VERSION = 1
NORM_FIELDS = ("mean", "std", "min", "max")


@dataclass
class Checkpoint:
    """Everything needed to resume detection: both networks, settings and norm stats."""

    generator: ParamStore
    discriminator: ParamStore
    config: TrainConfig
    norm: Optional[NormStats] = None
    variables: list[str] = field(default_factory=list)


def _config_block(cfg: TrainConfig, variables: list[str]) -> bytes:
    train = {
        f.name: getattr(cfg, f.name)
        for f in fields(cfg)
        if f.name not in ("generator", "discriminator")
    }
    document = {
        "generator": asdict(cfg.generator),
        "discriminator": asdict(cfg.discriminator),
        "train": train,
        "variables": list(variables),
    }
    return yaml.safe_dump(document, sort_keys=True).encode("utf-8")


def _pack_tensor(name: str, data: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    parts = [
        struct.pack("<H", len(encoded)),
        encoded,
        struct.pack("<B", data.ndim),
        struct.pack(f"<{data.ndim}I", *data.shape),
        np.ascontiguousarray(data, dtype="<f8").tobytes(),
    ]
    return b"".join(parts)


def save_checkpoint(
    generator: ParamStore,
    discriminator: ParamStore,
    cfg: TrainConfig,
    path: PathLike,
    norm: Optional[NormStats] = None,
    variables: Optional[list[str]] = None,
) -> Path:
    """
    Write both parameter stores, the training configuration and optional
    normalization statistics atomically.
    """
    variables = list(variables if variables is not None else (norm.names if norm else []))
    tensors: list[tuple[str, np.ndarray]] = []
    tensors += [(f"G.{name}", t.data) for name, t in generator.items()]
    tensors += [(f"D.{name}", t.data) for name, t in discriminator.items()]
    if norm is not None:
        tensors += [(f"norm.{key}", value) for key, value in norm.as_arrays().items()]

    config = _config_block(cfg, variables)
    payload = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<I", len(config)),
        config,
        struct.pack("<I", len(tensors)),
    ]
    payload += [_pack_tensor(name, data) for name, data in tensors]
    written = atomic_write_bytes(path, b"".join(payload))
    logger.info(f"Saved checkpoint with {len(tensors)} tensors to {written}")
    return written


class _Reader:
    """Bounds-checked cursor over checkpoint bytes."""

    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.blob):
            raise CorruptCheckpointError(
                f"Checkpoint {self.path} is truncated while reading {what} "
                f"(offset {self.offset}, need {size} bytes, have {len(self.blob) - self.offset})"
            )
        chunk = self.blob[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _read_tensors(reader: _Reader) -> dict[str, np.ndarray]:
    (count,) = reader.unpack("<I", "tensor count")
    tensors = {}
    for index in range(count):
        (name_length,) = reader.unpack("<H", f"name length of tensor {index}")
        try:
            name = reader.take(name_length, f"name of tensor {index}").decode("utf-8")
        except UnicodeDecodeError as e:
            raise CorruptCheckpointError(f"Tensor {index} has an undecodable name") from e
        (rank,) = reader.unpack("<B", f"rank of {name}")
        dims = reader.unpack(f"<{rank}I", f"dims of {name}") if rank else ()
        count_values = math.prod(dims)
        remaining = len(reader.blob) - reader.offset
        if 8 * count_values > remaining:
            raise CorruptCheckpointError(
                f"Tensor {name} claims shape {tuple(dims)} ({count_values} values) "
                f"but only {remaining} bytes remain in {reader.path}"
            )
        raw = reader.take(8 * count_values, f"data of {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).astype(np.float64)
    if reader.offset != len(reader.blob):
        raise CorruptCheckpointError(
            f"Checkpoint {reader.path} has {len(reader.blob) - reader.offset} trailing bytes"
        )
    return tensors


def _fill(store: ParamStore, tensors: dict[str, np.ndarray], prefix: str) -> None:
    """Copy stored tensors into a freshly built store, checking names and shapes."""
    for name, tensor in store.items():
        key = f"{prefix}{name}"
        if key not in tensors:
            raise CheckpointShapeError(f"Tensor {key} is missing from the checkpoint")
        if tensors[key].shape != tensor.shape:
            raise CheckpointShapeError(
                f"Tensor {key}: checkpoint has shape {tensors[key].shape}, "
                f"the network spec expects {tensor.shape}"
            )
        tensor.data = tensors[key].copy()
    expected = {f"{prefix}{name}" for name in store}
    extra = sorted(k for k in tensors if k.startswith(prefix) and k not in expected)
    if extra:
        raise CheckpointShapeError(f"Tensor {extra[0]} is not part of the network spec")


def load_checkpoint(
    path: PathLike,
    gen_spec: Optional[GeneratorSpec] = None,
    disc_spec: Optional[DiscriminatorSpec] = None,
) -> Checkpoint:
    """
    Read a checkpoint written by save_checkpoint().

    Args:
        path: Checkpoint file.
        gen_spec: Spec to validate the generator tensors against; defaults to the
            spec stored in the checkpoint.
        disc_spec: Same for the discriminator.

    Raises:
        CorruptCheckpointError: Bad magic, truncation or undecodable header.
        CheckpointError: Unsupported format version.
        CheckpointShapeError: A tensor is missing or has the wrong shape.
    """
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path} is not a checkpoint: bad magic {magic!r}")
    (version,) = reader.unpack("<H", "version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"Checkpoint version {version} is not supported (expected {FORMAT_VERSION})"
        )
    (config_length,) = reader.unpack("<I", "config length")
    try:
        document = yaml.safe_load(reader.take(config_length, "config").decode("utf-8"))
        stored_gen = GeneratorSpec(**document["generator"])
        stored_disc = DiscriminatorSpec(**document["discriminator"])
        cfg = TrainConfig(
            generator=gen_spec or stored_gen,
            discriminator=disc_spec or stored_disc,
            **document["train"],
        )
    except (UnicodeDecodeError, yaml.YAMLError, KeyError, TypeError) as e:
        raise CorruptCheckpointError(f"Checkpoint {path} has an unreadable config: {e}") from e

    tensors = _read_tensors(reader)
    generator = init_generator_params(cfg.generator, 0)
    discriminator = init_discriminator_params(cfg.discriminator, 0)
    _fill(generator, tensors, "G.")
    _fill(discriminator, tensors, "D.")

    variables = list(document.get("variables") or [])
    norm = None
    if all(f"norm.{key}" in tensors for key in NORM_FIELDS):
        norm = NormStats(
            names=variables,
            mean=tensors["norm.mean"],
            std=tensors["norm.std"],
            z_min=tensors["norm.min"],
            z_max=tensors["norm.max"],
        )
    logger.info(f"Loaded checkpoint {path} ({len(tensors)} tensors)")
    return Checkpoint(
        generator=generator,
        discriminator=discriminator,
        config=cfg,
        norm=norm,
        variables=variables,
    )
