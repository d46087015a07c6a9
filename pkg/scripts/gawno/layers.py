"""
Wavelet integral blocks.

A block decomposes its input with the periodic DWT, mixes channels of the
coarsest approximation and detail bands with learned per-position kernels,
reconstructs (optionally halving or doubling the length), adds a 1x1 residual
convolution and applies the activation.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autodiff import ParamStore, Tensor, add, gelu, linear, make_op, pool_length, repeat_length
from .errors import ConfigurationError, DimensionError, LengthError
from .wavelets import (
    DecompositionConfig,
    WaveletCoeffs,
    WaveletFilter,
    get_filter,
    idwt1,
    wavedec,
    waverec,
)

logger = logging.getLogger(__name__)

WIB_MODES = ("plain", "downlift", "uplift")
ACTIVATIONS = ("gelu", "none")


@dataclass(frozen=True)
class WIBConfig:
    """Channel widths, length mode, wavelet and decomposition of one block."""

    in_channels: int
    out_channels: int
    mode: str = "plain"
    wavelet: str = "db6"
    decomposition: DecompositionConfig = field(default_factory=DecompositionConfig)
    activation: str = "gelu"

    def __post_init__(self) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigurationError(
                f"WIB channels must be positive, got {self.in_channels} -> {self.out_channels}"
            )
        if self.mode not in WIB_MODES:
            raise ConfigurationError(f"Unknown WIB mode '{self.mode}'; expected one of {WIB_MODES}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown activation '{self.activation}'; expected one of {ACTIVATIONS}"
            )
        get_filter(self.wavelet)

    @property
    def filter(self) -> WaveletFilter:
        return get_filter(self.wavelet)

    @property
    def passes_fine_bands(self) -> bool:
        """Un-weighted finer detail bands survive only when channel counts agree."""
        return self.in_channels == self.out_channels

    def band_length(self, n: int) -> int:
        return n // self.decomposition.scale

    def output_length(self, n: int) -> int:
        if self.mode == "downlift":
            return n // 2**self.decomposition.h
        if self.mode == "uplift":
            return 2 * n
        return n

    def check_length(self, n: int) -> None:
        """Raise LengthError unless the block can process length `n`."""
        m = self.decomposition.m
        required = 2 ** (m + 1) if self.mode == "downlift" else 2**m
        if n % required:
            raise LengthError(
                f"{self.mode} WIB with m={m} needs length divisible by {required}, got {n}"
            )


@dataclass
class WIBParams:
    """Trainable tensors of one block, as registered in a ParamStore."""

    kernel_approx: Tensor
    kernel_detail: Tensor
    residual_weight: Tensor
    residual_bias: Tensor

    @classmethod
    def from_store(cls, store: ParamStore, prefix: str) -> "WIBParams":
        return cls(
            kernel_approx=store[f"{prefix}.kernel_approx"],
            kernel_detail=store[f"{prefix}.kernel_detail"],
            residual_weight=store[f"{prefix}.residual.weight"],
            residual_bias=store[f"{prefix}.residual.bias"],
        )


def uniform_fan_in(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """U(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for affine layers."""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_linear(
    store: ParamStore, prefix: str, in_features: int, out_features: int, rng: np.random.Generator
) -> None:
    """Register `<prefix>.weight` (out, in) and `<prefix>.bias` (out,)."""
    store.add(f"{prefix}.weight", uniform_fan_in(rng, (out_features, in_features), in_features))
    store.add(f"{prefix}.bias", uniform_fan_in(rng, (out_features,), in_features))


def init_wib_params(
    store: ParamStore, prefix: str, cfg: WIBConfig, n: int, rng: np.random.Generator
) -> WIBParams:
    """
    Register the tensors of a block that will see inputs of length `n`.

    Kernels are scaled by 1/(d_v * d_o) times U(0, 1); the residual
    convolution uses fan-in uniform initialisation.
    """
    cfg.check_length(n)
    band = cfg.band_length(n)
    kernel_shape = (cfg.in_channels, cfg.out_channels, band)
    kernel_scale = 1.0 / (cfg.in_channels * cfg.out_channels)
    store.add(f"{prefix}.kernel_approx", kernel_scale * rng.random(kernel_shape))
    store.add(f"{prefix}.kernel_detail", kernel_scale * rng.random(kernel_shape))
    init_linear(store, f"{prefix}.residual", cfg.in_channels, cfg.out_channels, rng)
    return WIBParams.from_store(store, prefix)


def kernel_multiply(coeffs: Tensor, kernel: Tensor) -> Tensor:
    """
    Per-position channel mixing of one wavelet band.

    Args:
        coeffs: Band coefficients of shape (B, d_v, k).
        kernel: Kernel of shape (d_v, d_o, k).

    Returns:
        Tensor of shape (B, d_o, k) with out[b,o,t] = sum_i coeffs[b,i,t] * kernel[i,o,t].
    """
    if coeffs.ndim != 3 or kernel.ndim != 3:
        raise DimensionError(
            f"kernel_multiply: expected rank-3 operands, got {coeffs.shape} and {kernel.shape}"
        )
    if coeffs.shape[1] != kernel.shape[0] or coeffs.shape[2] != kernel.shape[2]:
        raise DimensionError(
            f"kernel_multiply: band {coeffs.shape} does not match kernel {kernel.shape}"
        )

    out = np.einsum("bit,iot->bot", coeffs.data, kernel.data)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.einsum("bot,iot->bit", g, kernel.data),
            np.einsum("bot,bit->iot", g, coeffs.data),
        )

    return make_op("kernel_multiply", (coeffs, kernel), out, vjp)


def _carry(band: Optional[Tensor], cfg: WIBConfig) -> Optional[Tensor]:
    return band if cfg.passes_fine_bands else None


def wib_forward(v: Tensor, cfg: WIBConfig, params: WIBParams) -> Tensor:
    """
    Run one wavelet integral block.

    Args:
        v: Input of shape (B, d_v, n).
        cfg: Block configuration.
        params: Kernels and residual convolution of the block.

    Returns:
        Tensor of shape (B, d_o, n') with n' = n, n/2^h or 2n depending on mode.
    """
    if v.ndim != 3 or v.shape[1] != cfg.in_channels:
        raise DimensionError(f"WIB expects (B, {cfg.in_channels}, n) input, got {v.shape}")
    n = v.shape[-1]
    cfg.check_length(n)
    wavelet = cfg.filter
    m, h = cfg.decomposition.m, cfg.decomposition.h

    coeffs = wavedec(v, wavelet, m)
    approx = kernel_multiply(coeffs.approx, params.kernel_approx)
    bands = [kernel_multiply(coeffs.details[0], params.kernel_detail)]
    bands += [_carry(band, cfg) for band in coeffs.details[1:]]

    if cfg.mode == "downlift":
        spectral = waverec(WaveletCoeffs(approx, bands[: m - h]), wavelet)
    elif cfg.mode == "uplift":
        spectral = idwt1(waverec(WaveletCoeffs(approx, bands), wavelet), None, wavelet)
    else:
        spectral = waverec(WaveletCoeffs(approx, bands), wavelet)

    residual = linear(v, params.residual_weight, params.residual_bias)
    if cfg.mode == "downlift":
        residual = pool_length(residual, 2**h)
    elif cfg.mode == "uplift":
        residual = repeat_length(residual, 2)

    out = add(spectral, residual)
    return gelu(out) if cfg.activation == "gelu" else out
