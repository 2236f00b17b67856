"""Band-limited DCT descriptor (PB-DCT).

The forward transform is the 2-D type-II DCT

    F(u,v) = 1/sqrt(MN) * a(u) a(v)
             * sum_{x,y} I(x,y) cos((2x+1)u pi / 2M) cos((2y+1)v pi / 2N)

with a(0) = 1/sqrt(2) and a(w) = 1 otherwise.  This equals the orthonormal
DCT-II scaled by 1/2, so the fast path below rides scipy's orthonormal
transform; energy satisfies 4 * sum(F^2) = sum(I^2) exactly.  The descriptor
keeps the lowest-band coefficients in zigzag order (ascending u+v, ties by
ascending u), retaining ceil(keep_fraction * M * N) values including DC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConfigError
from .hox import FeatureVector, params_digest
from .patchio import ImagePatch


@dataclass(frozen=True)
class DctCoefficients:
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.coeffs, dtype=np.float64))
        if arr.ndim != 2:
            raise ConfigError("DCT coefficient grid must be 2-D")
        object.__setattr__(self, "coeffs", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape


@dataclass(frozen=True)
class BandMask:
    shape: tuple[int, int]
    keep_fraction: float
    indices: tuple[tuple[int, int], ...]


def _as_array(p) -> np.ndarray:
    arr = p.pixels if isinstance(p, ImagePatch) else np.asarray(p, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigError("dct2 input must be 2-D")
    return arr


def dct2(p) -> DctCoefficients:
    """Forward 2-D DCT with the 1/sqrt(MN) scaling described above."""
    arr = _as_array(p)
    return DctCoefficients(scipy.fft.dctn(arr, type=2, norm="ortho") * 0.5)


def idct2(coeffs: DctCoefficients) -> np.ndarray:
    """Exact inverse of :func:`dct2`."""
    return scipy.fft.idctn(coeffs.coeffs * 2.0, type=2, norm="ortho")


def band_mask(shape: tuple[int, int], keep_fraction: float = 0.5) -> BandMask:
    """Zigzag-ordered index set of the kept low-band coefficients.

    Pool size is ceil(keep_fraction * M * N); a tiny epsilon guards the ceil
    against float dust in the product.
    """
    m, n = shape
    if m < 1 or n < 1:
        raise ConfigError(f"bad coefficient grid shape {shape!r}")
    if not 0.0 < keep_fraction <= 1.0:
        raise ConfigError("keep_fraction must lie in (0, 1]")
    pool = min(m * n, math.ceil(keep_fraction * m * n - 1e-9))
    order = sorted(
        ((u, v) for u in range(m) for v in range(n)),
        key=lambda uv: (uv[0] + uv[1], uv[0]),
    )
    return BandMask(shape=(m, n), keep_fraction=keep_fraction, indices=tuple(order[:pool]))


def extract_pbdct(
    p: ImagePatch,
    keep_fraction: float = 0.5,
    mask: BandMask | None = None,
) -> FeatureVector:
    """Kept DCT coefficients of one patch, in mask (zigzag) order."""
    arr = _as_array(p)
    if mask is None:
        mask = band_mask(arr.shape, keep_fraction)
    if mask.shape != arr.shape:
        raise ConfigError(
            f"band mask built for {mask.shape}, patch is {arr.shape}"
        )
    coeffs = dct2(arr).coeffs
    rows = np.fromiter((uv[0] for uv in mask.indices), dtype=np.intp)
    cols = np.fromiter((uv[1] for uv in mask.indices), dtype=np.intp)
    values = coeffs[rows, cols]
    digest = params_digest("PBDCT", arr.shape[0], arr.shape[1], mask.keep_fraction)
    return FeatureVector(values, "PBDCT", digest)
