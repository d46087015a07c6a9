"""
Daubechies filter banks and the periodic 1-D discrete wavelet transform.

All transforms act along the last (length) axis of a (B, C, n) tensor and are
expressed as fixed linear maps, so they are differentiable through the tape and
their adjoint is the synthesis bank.

Conventions:
    analysis   y[t] = sum_j h[j] * x[(t - j) mod n], keep even t
    high-pass  dec_hi[k] = (-1)^k * dec_lo[L - 1 - k]
    synthesis  rec filters are the time-reversed analysis filters
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import pywt

from .autodiff import Tensor, add, length_map
from .autodiff.ops import as_tensor
from .errors import ConfigurationError, DimensionError, LengthError

logger = logging.getLogger(__name__)

SUPPORTED_WAVELETS = ("db1", "db3", "db6", "db8")
FILTER_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class WaveletFilter:
    """Orthonormal analysis/synthesis filter quadruple."""

    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def length(self) -> int:
        return len(self.dec_lo)

    @property
    def vanishing_moments(self) -> int:
        return self.length // 2

    def validate(self) -> None:
        """Check the orthonormality and quadrature-mirror invariants."""
        lo, hi = self.dec_lo, self.dec_hi
        k = np.arange(self.length)
        checks = {
            "sum(dec_lo) == sqrt(2)": abs(lo.sum() - math.sqrt(2.0)),
            "sum(dec_hi) == 0": abs(hi.sum()),
            "sum(dec_lo^2) == 1": abs((lo**2).sum() - 1.0),
            "quadrature mirror": np.max(np.abs(hi - (-1.0) ** k * lo[::-1])),
            "rec_lo reversal": np.max(np.abs(self.rec_lo - lo[::-1])),
            "rec_hi reversal": np.max(np.abs(self.rec_hi - hi[::-1])),
        }
        for label, error in checks.items():
            if error > FILTER_TOLERANCE:
                raise ConfigurationError(
                    f"Wavelet {self.name}: invariant {label} violated by {error:.3e}"
                )


def _build_filter(name: str) -> WaveletFilter:
    dec_lo = np.asarray(pywt.Wavelet(name).dec_lo, dtype=np.float64)
    signs = (-1.0) ** np.arange(len(dec_lo))
    dec_hi = signs * dec_lo[::-1]
    wavelet = WaveletFilter(
        name=name,
        dec_lo=dec_lo,
        dec_hi=dec_hi,
        rec_lo=dec_lo[::-1].copy(),
        rec_hi=dec_hi[::-1].copy(),
    )
    wavelet.validate()
    return wavelet


FILTERS: dict[str, WaveletFilter] = {name: _build_filter(name) for name in SUPPORTED_WAVELETS}


def get_filter(wavelet: Union[str, WaveletFilter]) -> WaveletFilter:
    """Resolve a filter by name; WaveletFilter instances pass through."""
    if isinstance(wavelet, WaveletFilter):
        return wavelet
    try:
        return FILTERS[wavelet]
    except KeyError:
        raise ConfigurationError(
            f"Unsupported wavelet '{wavelet}'. Choose one of: {', '.join(SUPPORTED_WAVELETS)}"
        ) from None


@dataclass(frozen=True)
class DecompositionConfig:
    """Depth `m` of the decomposition and level `h` retained by downlifting."""

    m: int = 2
    h: int = 1
    boundary: str = "periodic"

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigurationError(f"Decomposition depth m must be >= 1, got {self.m}")
        if not 0 <= self.h < self.m:
            raise ConfigurationError(
                f"Retained level h must satisfy 0 <= h < m, got h={self.h}, m={self.m}"
            )
        if self.boundary != "periodic":
            raise ConfigurationError(f"Only periodic boundaries are supported, got {self.boundary}")

    @property
    def scale(self) -> int:
        """Coarsest dyadic scale 2^m."""
        return 2**self.m


@dataclass
class WaveletCoeffs:
    """Approximation band A_m plus detail bands D_m ... D_1 (coarsest first)."""

    approx: Tensor
    details: list[Optional[Tensor]] = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.details)


@lru_cache(maxsize=None)
def analysis_matrices(name: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Periodised low/high analysis operators of shape (n/2, n)."""
    wavelet = FILTERS[name]
    half, taps = n // 2, wavelet.length
    rows = np.repeat(np.arange(half), taps)
    offsets = np.tile(np.arange(taps), half)
    cols = (2 * rows - offsets) % n
    lo = np.zeros((half, n))
    hi = np.zeros((half, n))
    np.add.at(lo, (rows, cols), np.tile(wavelet.dec_lo, half))
    np.add.at(hi, (rows, cols), np.tile(wavelet.dec_hi, half))
    lo.flags.writeable = False
    hi.flags.writeable = False
    return lo, hi


def _require_divisible(n: int, m: int) -> None:
    if n % (2**m):
        raise LengthError(f"Length n={n} is not divisible by 2^m with m={m}")


def dwt1(
    x: Union[Tensor, np.ndarray], wavelet: Union[str, WaveletFilter]
) -> tuple[Tensor, Tensor]:
    """Single-level periodic DWT: returns (approx, detail), each of half length."""
    x = as_tensor(x)
    wavelet = get_filter(wavelet)
    n = x.shape[-1]
    if n % 2:
        raise LengthError(f"dwt1 needs an even length, got n={n}")
    lo, hi = analysis_matrices(wavelet.name, n)
    return length_map(x, lo), length_map(x, hi)


def idwt1(
    approx: Union[Tensor, np.ndarray],
    detail: Optional[Union[Tensor, np.ndarray]],
    wavelet: Union[str, WaveletFilter],
) -> Tensor:
    """Single-level inverse DWT; `detail=None` stands for an all-zero band."""
    approx = as_tensor(approx)
    wavelet = get_filter(wavelet)
    if detail is not None:
        detail = as_tensor(detail)
        if detail.shape != approx.shape:
            raise DimensionError(
                f"idwt1: approx {approx.shape} and detail {detail.shape} differ"
            )
    lo, hi = analysis_matrices(wavelet.name, 2 * approx.shape[-1])
    out = length_map(approx, lo.T)
    if detail is None:
        return out
    return add(out, length_map(detail, hi.T))


def wavedec(
    x: Union[Tensor, np.ndarray], wavelet: Union[str, WaveletFilter], m: int
) -> WaveletCoeffs:
    """m-level decomposition by repeated dwt1 on the approximation band."""
    x = as_tensor(x)
    _require_divisible(x.shape[-1], m)
    approx, details = x, []
    for _ in range(m):
        approx, detail = dwt1(approx, wavelet)
        details.insert(0, detail)
    return WaveletCoeffs(approx=approx, details=details)


def waverec(coeffs: WaveletCoeffs, wavelet: Union[str, WaveletFilter]) -> Tensor:
    """Invert wavedec; None entries in `details` are treated as zero bands."""
    signal = coeffs.approx
    for detail in coeffs.details:
        signal = idwt1(signal, detail, wavelet)
    return signal


def downlift(
    x: Union[Tensor, np.ndarray],
    wavelet: Union[str, WaveletFilter],
    cfg: DecompositionConfig = DecompositionConfig(),
) -> Tensor:
    """
    Domain-halving transform.

    Decomposes m levels and reconstructs from the bands above level h only, so
    the output has length n / 2^h (n/2 for the default h = 1).
    """
    x = as_tensor(x)
    _require_divisible(x.shape[-1], cfg.m)
    coeffs = wavedec(x, wavelet, cfg.m)
    kept = WaveletCoeffs(approx=coeffs.approx, details=coeffs.details[: cfg.m - cfg.h])
    return waverec(kept, wavelet)


def uplift(
    x: Union[Tensor, np.ndarray],
    wavelet: Union[str, WaveletFilter],
    cfg: DecompositionConfig = DecompositionConfig(),
) -> Tensor:
    """Domain-doubling transform: reconstruct, then add a zero band as the new finest level."""
    x = as_tensor(x)
    _require_divisible(x.shape[-1], cfg.m)
    restored = waverec(wavedec(x, wavelet, cfg.m), wavelet)
    return idwt1(restored, None, wavelet)
