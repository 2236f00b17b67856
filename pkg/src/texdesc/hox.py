"""Cell/block oriented-histogram descriptors (HOG and HOT).

Both descriptors share one framework: a (magnitude, orientation) response
field is pooled into a ``c x c`` grid of cells, each cell accumulating signed
magnitude into ``B`` hard-assigned orientation bins over [0, pi); every
``l x l`` window of cells forms one overlapping block whose concatenated
histograms are L2-normalized with a small epsilon guard.  HOG feeds the
framework with the image gradient, HOT with the minimum-response field of a
Gabor bank, which is the only difference between the two.

Descriptor length is ``l^2 * (c-l+1)^2 * B``; the defaults (16 cells, 2x2
blocks, 8 bins) give 7200 values on a 128x128 patch.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .gabor import ResponseField, gabor_response, gradient_response
from .patchio import ImagePatch

DESCRIPTOR_TAGS = ("HOG", "HOT", "PBDCT")


@dataclass(frozen=True)
class HistogramConfig:
    cells_per_side: int = 16
    block_side: int = 2
    bins: int = 8
    epsilon: float = 1e-5

    def __post_init__(self):
        if self.cells_per_side < 1:
            raise ConfigError("cells_per_side must be >= 1")
        if not 1 <= self.block_side <= self.cells_per_side:
            raise ConfigError("block_side must lie in [1, cells_per_side]")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    descriptor_tag: str
    params_digest: str

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim != 1:
            raise ConfigError("feature vector must be 1-D")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("feature vector contains non-finite values")
        if self.descriptor_tag not in DESCRIPTOR_TAGS:
            raise ConfigError(f"unknown descriptor tag {self.descriptor_tag!r}")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)


def descriptor_length(cfg: HistogramConfig) -> int:
    c, l, b = cfg.cells_per_side, cfg.block_side, cfg.bins
    return l * l * (c - l + 1) ** 2 * b


def params_digest(*parts) -> str:
    canon = "|".join(repr(p) for p in parts)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def cell_histograms(r: ResponseField, cfg: HistogramConfig = HistogramConfig()) -> np.ndarray:
    """Pool a response field into per-cell orientation histograms.

    Bin ``b`` (0-based) covers orientations in [b*pi/B, (b+1)*pi/B); each
    pixel adds its signed magnitude to exactly one bin of its cell.  Returns
    an array of shape (c, c, B).
    """
    m, n = r.magnitude.shape
    c, b = cfg.cells_per_side, cfg.bins
    if m % c or n % c:
        raise ConfigError(
            f"patch shape {m}x{n} not divisible into {c}x{c} cells"
        )
    cell_h, cell_w = m // c, n // c

    bin_idx = np.minimum((r.orientation * (b / np.pi)).astype(np.intp), b - 1)
    rows = np.arange(m)[:, None] // cell_h
    cols = np.arange(n)[None, :] // cell_w
    flat_key = ((rows * c + cols) * b + bin_idx).ravel()
    # bincount adds weights in raster order, matching a per-pixel double loop.
    hist = np.bincount(flat_key, weights=r.magnitude.ravel(), minlength=c * c * b)
    return hist.reshape(c, c, b)


def block_descriptor(hist: np.ndarray, cfg: HistogramConfig = HistogramConfig()) -> np.ndarray:
    """Concatenate L2-normalized overlapping blocks of cell histograms.

    Blocks scan the cell grid row-major with stride one; each gathers its
    ``l x l`` cells row-major and divides by sqrt(||v||^2 + epsilon^2), so an
    all-zero block stays zero.
    """
    c, l, b = cfg.cells_per_side, cfg.block_side, cfg.bins
    if hist.shape != (c, c, b):
        raise ConfigError(f"histogram grid shape {hist.shape} does not match config")
    span = c - l + 1
    out = np.empty(l * l * span * span * b)
    block_len = l * l * b
    pos = 0
    for bi in range(span):
        for bj in range(span):
            v = hist[bi : bi + l, bj : bj + l, :].ravel()
            norm = np.sqrt(v @ v + cfg.epsilon**2)
            out[pos : pos + block_len] = v / norm
            pos += block_len
    return out


def extract_hog(p: ImagePatch, cfg: HistogramConfig = HistogramConfig()) -> FeatureVector:
    """Gradient-driven descriptor for one patch."""
    desc = block_descriptor(cell_histograms(gradient_response(p), cfg), cfg)
    digest = params_digest("HOG", cfg.cells_per_side, cfg.block_side, cfg.bins, cfg.epsilon)
    return FeatureVector(desc, "HOG", digest)


def extract_hot(
    p: ImagePatch,
    sigma: float,
    cfg: HistogramConfig = HistogramConfig(),
    rule: str = "min_real",
) -> FeatureVector:
    """Gabor minimum-response descriptor for one patch at scale sigma."""
    desc = block_descriptor(cell_histograms(gabor_response(p, sigma, rule), cfg), cfg)
    digest = params_digest(
        "HOT", sigma, rule, cfg.cells_per_side, cfg.block_side, cfg.bins, cfg.epsilon
    )
    return FeatureVector(desc, "HOT", digest)
