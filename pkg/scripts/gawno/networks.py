"""
Generator and discriminator wavelet neural operators.

Both networks share the same body: a pointwise lifting P, a U-Net of
downlifting and uplifting wavelet integral blocks joined by skip
concatenations, and a pointwise projection Q. The generator squashes Q with
tanh unless `output_activation` is "none". The discriminator adds an integral
functional head that turns the projected field into one score per feature and
one logit and probability per sample.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .autodiff import (
    ParamStore,
    Tensor,
    concat_channels,
    gelu,
    linear,
    mean,
    reshape,
    sigmoid,
    tanh,
)
from .errors import ConfigurationError, DimensionError
from .layers import WIBConfig, WIBParams, init_linear, init_wib_params, wib_forward
from .wavelets import DecompositionConfig, get_filter

logger = logging.getLogger(__name__)

HEAD_INPUTS = 2
OUTPUT_ACTIVATIONS = ("tanh", "none")

SeedLike = Union[int, np.random.Generator, None]


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Shape contract and architecture of the generator body.

    Attributes:
        features: Number of process variables F.
        length: Window length n.
        lifted_width: Channel count C0 after lifting.
        q_width: Hidden width of the projection Q.
        wavelet: Daubechies filter used by every block.
        levels: Decomposition depth m inside a block.
        retained_level: Level h kept by downlifting (must be 1).
        depth: Number of downlifting (and uplifting) blocks.
        output_activation: tanh keeps generated windows inside the [-1, 1] range
            of normalized training data; none leaves the projection Q linear.
    """

    features: int
    length: int = 64
    lifted_width: int = 32
    q_width: int = 64
    wavelet: str = "db6"
    levels: int = 2
    retained_level: int = 1
    depth: int = 4
    output_activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.features < 1:
            raise ConfigurationError(f"features must be >= 1, got {self.features}")
        if self.lifted_width < 1 or self.q_width < 1 or self.depth < 1:
            raise ConfigurationError("lifted_width, q_width and depth must all be >= 1")
        if self.retained_level != 1:
            raise ConfigurationError(
                f"Networks halve the length per block; retained_level must be 1, "
                f"got {self.retained_level}"
            )
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigurationError(
                f"output_activation must be one of {OUTPUT_ACTIVATIONS}, "
                f"got {self.output_activation}"
            )
        get_filter(self.wavelet)
        _ = self.decomposition
        required = 2 ** (self.depth + self.levels)
        if self.length < required or self.length % required:
            raise ConfigurationError(
                f"Window length {self.length} must be a positive multiple of "
                f"2^(depth + levels) = {required}"
            )

    @property
    def decomposition(self) -> DecompositionConfig:
        return DecompositionConfig(m=self.levels, h=self.retained_level)

    def down_channels(self) -> list[int]:
        """Output widths of the downlifting blocks: C0 * 2^k."""
        return [self.lifted_width * 2**k for k in range(self.depth)]

    def down_blocks(self) -> list[tuple[WIBConfig, int]]:
        """(block config, input length) for every downlifting block."""
        outs = self.down_channels()
        ins = [self.lifted_width] + outs[:-1]
        return [
            (self._block(ins[k], outs[k], "downlift"), self.length // 2**k)
            for k in range(self.depth)
        ]

    def up_blocks(self) -> list[tuple[WIBConfig, int]]:
        """(block config, input length) for every uplifting block, skip widths included."""
        downs = self.down_channels()
        skips = [self.lifted_width] + downs[:-1]
        blocks = []
        in_channels = downs[-1]
        for j in range(self.depth):
            out_channels = self.lifted_width * 2 ** max(self.depth - 2 - j, 0)
            length = self.length // 2 ** (self.depth - j)
            blocks.append((self._block(in_channels, out_channels, "uplift"), length))
            in_channels = out_channels + skips[self.depth - 1 - j]
        return blocks

    @property
    def trunk_width(self) -> int:
        """Channel count entering Q: last uplift output plus the lifted input."""
        last, _ = self.up_blocks()[-1]
        return last.out_channels + self.lifted_width

    def _block(self, in_channels: int, out_channels: int, mode: str) -> WIBConfig:
        return WIBConfig(
            in_channels=in_channels,
            out_channels=out_channels,
            mode=mode,
            wavelet=self.wavelet,
            decomposition=self.decomposition,
        )


@dataclass(frozen=True)
class DiscriminatorSpec(GeneratorSpec):
    """Generator body plus the integral head widths 2 -> head_width -> head_width -> 1."""

    head_width: int = 32
    head_activation: str = "gelu"

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.head_width < 1:
            raise ConfigurationError(f"head_width must be >= 1, got {self.head_width}")
        if self.head_activation not in ("gelu", "none"):
            raise ConfigurationError(
                f"head_activation must be 'gelu' or 'none', got {self.head_activation}"
            )


class DiscriminatorScore(NamedTuple):
    """Per-feature integrals r (B, F), the logit mean_f r (B,) and p = sigmoid(logit)."""

    r: Tensor
    logit: Tensor
    p: Tensor


def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _init_body(store: ParamStore, spec: GeneratorSpec, rng: np.random.Generator) -> None:
    init_linear(store, "lift", spec.features, spec.lifted_width, rng)
    for k, (cfg, length) in enumerate(spec.down_blocks()):
        init_wib_params(store, f"down{k}", cfg, length, rng)
    for j, (cfg, length) in enumerate(spec.up_blocks()):
        init_wib_params(store, f"up{j}", cfg, length, rng)
    init_linear(store, "proj.0", spec.trunk_width, spec.q_width, rng)
    init_linear(store, "proj.1", spec.q_width, spec.q_width, rng)
    init_linear(store, "proj.2", spec.q_width, spec.features, rng)


def init_generator_params(spec: GeneratorSpec, seed: SeedLike = 0) -> ParamStore:
    """Build and randomly initialise every generator tensor."""
    store = ParamStore()
    _init_body(store, spec, _rng(seed))
    logger.debug(f"Generator initialised with {store.num_parameters} parameters")
    return store


def init_discriminator_params(spec: DiscriminatorSpec, seed: SeedLike = 0) -> ParamStore:
    """Build and randomly initialise every discriminator tensor, head included."""
    rng = _rng(seed)
    store = ParamStore()
    _init_body(store, spec, rng)
    init_linear(store, "head.0", HEAD_INPUTS, spec.head_width, rng)
    init_linear(store, "head.1", spec.head_width, spec.head_width, rng)
    init_linear(store, "head.2", spec.head_width, 1, rng)
    logger.debug(f"Discriminator initialised with {store.num_parameters} parameters")
    return store


def _affine(x: Tensor, params: ParamStore, prefix: str) -> Tensor:
    return linear(x, params[f"{prefix}.weight"], params[f"{prefix}.bias"])


def _check_input(x: Tensor, spec: GeneratorSpec) -> None:
    expected = (spec.features, spec.length)
    if x.ndim != 3 or x.shape[1:] != expected:
        raise DimensionError(
            f"Expected input of shape (B, {expected[0]}, {expected[1]}), got {x.shape}"
        )


def _body(x: Tensor, spec: GeneratorSpec, params: ParamStore, use_skips: bool) -> Tensor:
    """P, the U-Net and Q; returns a (B, F, n) field."""
    lifted = _affine(x, params, "lift")
    skips = [lifted]
    h = lifted
    for k, (cfg, _) in enumerate(spec.down_blocks()):
        h = wib_forward(h, cfg, WIBParams.from_store(params, f"down{k}"))
        skips.append(h)

    for j, (cfg, _) in enumerate(spec.up_blocks()):
        h = wib_forward(h, cfg, WIBParams.from_store(params, f"up{j}"))
        skip = skips[spec.depth - 1 - j]
        if not use_skips:
            skip = Tensor(np.zeros_like(skip.data))
        h = concat_channels(h, skip)

    h = gelu(_affine(h, params, "proj.0"))
    h = gelu(_affine(h, params, "proj.1"))
    return _affine(h, params, "proj.2")


def generator_forward(
    z: Tensor, spec: GeneratorSpec, params: ParamStore, use_skips: bool = True
) -> Tensor:
    """
    Map a noise field to a synthetic window.

    Args:
        z: Noise of shape (B, F, n).
        spec: Generator architecture.
        params: Generator parameters from init_generator_params().
        use_skips: Replace every skip tensor by zeros when False.

    Returns:
        Tensor of shape (B, F, n).
    """
    _check_input(z, spec)
    out = _body(z, spec, params, use_skips)
    return tanh(out) if spec.output_activation == "tanh" else out


def time_coordinates(features: int, length: int) -> np.ndarray:
    """t/n for every (feature, t) pair, flattened feature-major to shape (F * n,)."""
    return np.tile(np.arange(length) / length, features)


def integral_head(
    h: Tensor, spec: DiscriminatorSpec, params: ParamStore
) -> DiscriminatorScore:
    """
    Apply the head pointwise to (h[b,f,t], t/n) and average over t.

    Returns r[b,f] = mean_t head(h[b,f,t], t/n), logit[b] = mean_f r[b,f] and
    p[b] = sigmoid(logit[b]).
    """
    batch, features, length = h.shape
    flat = reshape(h, (batch, 1, features * length))
    time = np.broadcast_to(time_coordinates(features, length), (batch, 1, features * length))
    x = concat_channels(flat, Tensor(time))

    x = _affine(x, params, "head.0")
    if spec.head_activation == "gelu":
        x = gelu(x)
    x = _affine(x, params, "head.1")
    if spec.head_activation == "gelu":
        x = gelu(x)
    x = _affine(x, params, "head.2")

    r = mean(reshape(x, (batch, features, length)), axis=2)
    logit = mean(r, axis=1)
    return DiscriminatorScore(r=r, logit=logit, p=sigmoid(logit))


def discriminator_forward(
    y: Tensor, spec: DiscriminatorSpec, params: ParamStore, use_skips: bool = True
) -> DiscriminatorScore:
    """Score a batch of real or synthetic windows of shape (B, F, n)."""
    _check_input(y, spec)
    return integral_head(_body(y, spec, params, use_skips), spec, params)

