"""Contrast Limited Adaptive Histogram Equalization (Zuiderveld-style).

Each tile gets its own clipped-histogram equalization mapping; every pixel is
then mapped through the surrounding tile mappings and bilinearly blended
according to its position relative to the tile centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convolve import round_half_up
from .imageio import GrayImage

__all__ = ["ClaheConfig", "clip_histogram", "tile_edges", "tile_mappings", "clahe"]


@dataclass(frozen=True)
class ClaheConfig:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 4.0
    bins: int = 256

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("tile grid counts must be >= 1")
        if not self.clip_limit > 0:
            raise ValueError("clip_limit must be positive")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")

    def absolute_limit(self, tile_pixels: int) -> int:
        return max(1, int(np.floor(self.clip_limit * tile_pixels / self.bins)))


def clip_histogram(hist, limit: int) -> np.ndarray:
    """Cut every bin to ``limit`` and spread the excess over all bins.

    One pass, no re-clipping: each bin receives ``excess // nbins`` and the
    first ``excess % nbins`` bins one more. The total is conserved.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    hist = np.asarray(hist, dtype=np.int64)
    excess = int(np.sum(np.maximum(hist - limit, 0)))
    out = np.minimum(hist, limit)
    if excess:
        n = out.size
        out += excess // n
        out[: excess % n] += 1
    return out


def tile_edges(length: int, count: int) -> np.ndarray:
    """Tile boundaries along one axis; the last tile absorbs the remainder."""
    step = length // count
    edges = np.arange(count + 1) * step
    edges[-1] = length
    return edges


def _mapping(hist: np.ndarray, top: int) -> np.ndarray:
    """Equalization mapping (per bin) for one, already clipped, histogram."""
    cdf = np.cumsum(hist)
    total = int(cdf[-1])
    nonzero = cdf[cdf > 0]
    if total == 0 or nonzero[0] == total:
        return None
    cdf_min = int(nonzero[0])
    return round_half_up((cdf - cdf_min) / (total - cdf_min) * top).clip(0, top)


def tile_mappings(image: GrayImage, config: ClaheConfig, mask=None) -> np.ndarray:
    """Per-tile lookup tables over all intensities, shape (tiles_y, tiles_x, maxval + 1).

    Tiles without usable histogram content (empty, or a single occupied bin
    with no clipping) get the identity mapping.
    """
    px = image.pixels
    top = image.maxval
    levels = top + 1
    bin_of = (np.arange(levels, dtype=np.int64) * config.bins) // levels
    rows = tile_edges(image.height, config.tiles_y)
    cols = tile_edges(image.width, config.tiles_x)
    luts = np.empty((config.tiles_y, config.tiles_x, levels), dtype=np.float64)
    identity = np.arange(levels, dtype=np.float64)
    for i in range(config.tiles_y):
        for j in range(config.tiles_x):
            tile = px[rows[i] : rows[i + 1], cols[j] : cols[j + 1]]
            if mask is not None:
                tile = tile[mask[rows[i] : rows[i + 1], cols[j] : cols[j + 1]]]
            values = bin_of[tile.ravel()]
            hist = np.bincount(values, minlength=config.bins)
            n = int(hist.sum())
            m = None
            if n:
                hist = clip_histogram(hist, config.absolute_limit(n))
                m = _mapping(hist, top)
            luts[i, j] = identity if m is None else m[bin_of]
    return luts


def _axis_weights(length: int, edges: np.ndarray):
    """Lower tile index, upper tile index and upper weight for each coordinate."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(length, dtype=np.float64)
    n = centers.size
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, n - 1)
    hi = np.clip(hi, 0, n - 1)
    span = centers[hi] - centers[lo]
    w = np.zeros(length)
    inner = span > 0
    w[inner] = (pos[inner] - centers[lo[inner]]) / span[inner]
    return lo, hi, w


def clahe(image: GrayImage, config: ClaheConfig = ClaheConfig(), mask=None) -> GrayImage:
    """Enhance local contrast. With ``mask``, only masked pixels feed the tile
    histograms and pixels outside the mask come out as 0."""
    if config.tiles_y > image.height or config.tiles_x > image.width:
        raise ValueError(
            f"tile grid {config.tiles_y}x{config.tiles_x} exceeds image {image.height}x{image.width}"
        )
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != image.shape:
            raise ValueError(f"mask shape {mask.shape} != image shape {image.shape}")
    luts = tile_mappings(image, config, mask)
    r_lo, r_hi, wy = _axis_weights(image.height, tile_edges(image.height, config.tiles_y))
    c_lo, c_hi, wx = _axis_weights(image.width, tile_edges(image.width, config.tiles_x))

    px = image.pixels
    R_lo, C_lo = r_lo[:, None], c_lo[None, :]
    R_hi, C_hi = r_hi[:, None], c_hi[None, :]
    WY, WX = wy[:, None], wx[None, :]
    top_left = luts[R_lo, C_lo, px]
    top_right = luts[R_lo, C_hi, px]
    bottom_left = luts[R_hi, C_lo, px]
    bottom_right = luts[R_hi, C_hi, px]
    blended = (1 - WY) * ((1 - WX) * top_left + WX * top_right) + WY * (
        (1 - WX) * bottom_left + WX * bottom_right
    )
    out = np.clip(round_half_up(blended), 0, image.maxval).astype(np.int64)
    if mask is not None:
        out[~mask] = 0
    return image.with_pixels(out)
