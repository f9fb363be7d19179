"""Mask application, left/right registration and fibroglandular ROI extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio import GrayImage

__all__ = [
    "RoiBox",
    "BreastExtent",
    "DegenerateRoiError",
    "EmptyMaskError",
    "apply_mask",
    "orient_left",
    "breast_extent",
    "roi_box",
    "crop",
    "paste",
]


class EmptyMaskError(ValueError):
    pass


class DegenerateRoiError(ValueError):
    pass


@dataclass(frozen=True)
class RoiBox:
    """Half-open box ``[row0, row1) x [col0, col1)``."""

    row0: int
    row1: int
    col0: int
    col1: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.row1 - self.row0, self.col1 - self.col0

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.row0, self.row1), slice(self.col0, self.col1)


@dataclass(frozen=True)
class BreastExtent:
    widest_row: int
    max_width: int
    tallest_col: int
    max_height: int
    leftmost_col: int
    rightmost_col: int
    top_row: int
    bottom_row: int


def _check_shapes(image: GrayImage, mask: np.ndarray):
    if np.shape(mask) != image.shape:
        raise ValueError(f"mask shape {np.shape(mask)} != image shape {image.shape}")


def apply_mask(image: GrayImage, mask) -> GrayImage:
    """Zero every pixel outside ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    _check_shapes(image, mask)
    return image.with_pixels(np.where(mask, image.pixels, 0))


def orient_left(image: GrayImage, mask):
    """Mirror image and mask so the breast sits against the left edge.

    The flip happens when the mask centroid lies right of the vertical
    midline. Returns ``(image, mask, flipped)``.
    """
    mask = np.asarray(mask, dtype=bool)
    _check_shapes(image, mask)
    cols = np.nonzero(mask)[1]
    if cols.size == 0:
        raise EmptyMaskError("breast mask is empty")
    if cols.mean() > (image.width - 1) / 2:
        return image.with_pixels(image.pixels[:, ::-1]), mask[:, ::-1].copy(), True
    return image, mask, False


def breast_extent(mask) -> BreastExtent:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("breast mask is empty")
    row_counts = mask.sum(axis=1)
    col_counts = mask.sum(axis=0)
    rows = np.nonzero(row_counts)[0]
    cols = np.nonzero(col_counts)[0]
    # argmax returns the first maximum, i.e. ties go to the smallest index
    widest_row = int(np.argmax(row_counts))
    tallest_col = int(np.argmax(col_counts))
    return BreastExtent(
        widest_row=widest_row,
        max_width=int(row_counts[widest_row]),
        tallest_col=tallest_col,
        max_height=int(col_counts[tallest_col]),
        leftmost_col=int(cols[0]),
        rightmost_col=int(cols[-1]),
        top_row=int(rows[0]),
        bottom_row=int(rows[-1]),
    )


def roi_box(extent: BreastExtent, height: int, width: int) -> RoiBox:
    """Fibroglandular-disc box for a left-oriented breast.

    Rows: a band of half the breast height centered on the widest row.
    Columns: from a third of the breast width (chest wall excluded) to the
    full width. Clamped to the image.
    """
    if extent.max_width < 3 or extent.max_height < 4:
        raise DegenerateRoiError(
            f"breast too small for ROI extraction (width {extent.max_width}, height {extent.max_height})"
        )
    quarter = extent.max_height // 4
    row0 = max(0, extent.widest_row - quarter)
    row1 = min(height, extent.widest_row + quarter)
    col0 = max(0, extent.leftmost_col + extent.max_width // 3)
    col1 = min(width, extent.leftmost_col + extent.max_width)
    if not (row0 < row1 and col0 < col1):
        raise DegenerateRoiError(f"empty ROI rows [{row0},{row1}) cols [{col0},{col1})")
    return RoiBox(row0, row1, col0, col1)


def crop(image, box: RoiBox):
    """Copy the box out of a GrayImage or a plain 2D array (e.g. a mask)."""
    arr = image.pixels if isinstance(image, GrayImage) else np.asarray(image)
    h, w = arr.shape
    if not (0 <= box.row0 < box.row1 <= h and 0 <= box.col0 < box.col1 <= w):
        raise ValueError(f"{box} outside image bounds {h}x{w}")
    out = arr[box.slices].copy()
    return image.with_pixels(out) if isinstance(image, GrayImage) else out


def paste(canvas: np.ndarray, patch: np.ndarray, box: RoiBox) -> np.ndarray:
    """Return a copy of ``canvas`` with ``patch`` written into ``box``."""
    out = np.array(canvas, copy=True)
    out[box.slices] = patch
    return out
