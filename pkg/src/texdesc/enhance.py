"""Contrast enhancement: min-max normalization, CLAHE and its two-stage form.

CLAHE here is the classic tile-based variant: each tile's histogram is
clipped at a fixed fraction of the tile's pixel count, the clipped excess is
redistributed uniformly over all bins, and every pixel is mapped through a
bilinear blend of the equalization mappings of the four nearest tile centers.
The two-stage form runs an 8x8 tile grid first and a 4x4 grid on the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .patchio import ImagePatch


@dataclass(frozen=True)
class ClaheConfig:
    grid_rows: int = 8
    grid_cols: int = 8
    clip_limit: float = 0.01  # fraction of tile pixel count allowed per bin
    bins: int = 256

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ConfigError("tile grid dimensions must be >= 1")
        if not 0.0 < self.clip_limit <= 1.0:
            raise ConfigError("clip_limit must lie in (0, 1]")
        if self.bins < 2:
            raise ConfigError("need at least 2 histogram bins")


def minmax_normalize(p: ImagePatch) -> ImagePatch:
    """Stretch intensities to span [0, 1]; a constant patch maps to zeros."""
    arr = p.pixels
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return ImagePatch(np.zeros_like(arr))
    return ImagePatch((arr - lo) / (hi - lo))


def _tile_edges(extent: int, tiles: int) -> np.ndarray:
    # Tiles need not divide the extent evenly; edge tiles absorb the remainder.
    return np.round(np.linspace(0.0, extent, tiles + 1)).astype(np.intp)


def _tile_mapping(bin_counts: np.ndarray, n_pixels: int, cfg: ClaheConfig) -> np.ndarray:
    clip = cfg.clip_limit * n_pixels
    h = bin_counts.astype(np.float64)
    excess = np.maximum(h - clip, 0.0).sum()
    h = np.minimum(h, clip)
    h += excess / cfg.bins
    return np.cumsum(h) / n_pixels  # non-decreasing, ends at 1


def clahe(p: ImagePatch, cfg: ClaheConfig = ClaheConfig()) -> ImagePatch:
    """Contrast-limited adaptive histogram equalization on a [0, 1] patch."""
    img = p.pixels
    m, n = img.shape
    if cfg.grid_rows > m or cfg.grid_cols > n:
        raise ConfigError(
            f"tile grid {cfg.grid_rows}x{cfg.grid_cols} larger than image {m}x{n}"
        )

    bins = cfg.bins
    bin_idx = np.minimum((img * bins).astype(np.intp), bins - 1)

    row_edges = _tile_edges(m, cfg.grid_rows)
    col_edges = _tile_edges(n, cfg.grid_cols)
    mappings = np.empty((cfg.grid_rows, cfg.grid_cols, bins))
    for ti in range(cfg.grid_rows):
        for tj in range(cfg.grid_cols):
            tile = bin_idx[row_edges[ti]:row_edges[ti + 1], col_edges[tj]:col_edges[tj + 1]]
            counts = np.bincount(tile.ravel(), minlength=bins)
            mappings[ti, tj] = _tile_mapping(counts, tile.size, cfg)

    # Fractional tile coordinate of every pixel row/column, clamped at the
    # outer tile centers so border pixels use the nearest mapping alone.
    row_centers = (row_edges[:-1] + row_edges[1:] - 1) / 2.0
    col_centers = (col_edges[:-1] + col_edges[1:] - 1) / 2.0
    tr = np.interp(np.arange(m), row_centers, np.arange(cfg.grid_rows))
    tc = np.interp(np.arange(n), col_centers, np.arange(cfg.grid_cols))

    r0 = np.minimum(tr.astype(np.intp), cfg.grid_rows - 1)
    c0 = np.minimum(tc.astype(np.intp), cfg.grid_cols - 1)
    r1 = np.minimum(r0 + 1, cfg.grid_rows - 1)
    c1 = np.minimum(c0 + 1, cfg.grid_cols - 1)
    wr = (tr - r0)[:, None]
    wc = (tc - c0)[None, :]

    def gather(ri, ci):
        return mappings[ri[:, None], ci[None, :], bin_idx]

    # Nested lerps keep the blend exact when neighboring mappings coincide
    # (a constant image stays bitwise constant).
    m00, m01 = gather(r0, c0), gather(r0, c1)
    m10, m11 = gather(r1, c0), gather(r1, c1)
    top = m00 + wc * (m01 - m00)
    bottom = m10 + wc * (m11 - m10)
    out = top + wr * (bottom - top)
    return ImagePatch(np.clip(out, 0.0, 1.0))


def ts_clahe(
    p: ImagePatch,
    first: ClaheConfig = ClaheConfig(grid_rows=8, grid_cols=8),
    second: ClaheConfig = ClaheConfig(grid_rows=4, grid_cols=4),
) -> ImagePatch:
    """Two successive CLAHE passes: a fine 8x8 tile grid, then a coarse 4x4 one."""
    return clahe(clahe(p, first), second)
