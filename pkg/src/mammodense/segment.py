"""Dual-threshold dense tissue segmentation with binary morphology cleanup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clahe import ClaheConfig, clahe
from .gabor import FilterBank, bank_response, suppress_vessels
from .imageio import GrayImage

__all__ = [
    "SegmentConfig",
    "SegmentStages",
    "threshold",
    "and_masks",
    "disk",
    "erode",
    "dilate",
    "morph_open",
    "morph_close",
    "segment_stages",
    "segment_dense",
]

REFERENCES = ("max", "mean")


@dataclass(frozen=True)
class SegmentConfig:
    t_low: float = 0.60
    t_high: float = 0.80
    reference: str = "max"
    morph_radius: int = 3
    gain: float = 1.0
    combine: str = "max"

    def __post_init__(self):
        if not 0 < self.t_low <= self.t_high <= 1:
            raise ValueError(f"need 0 < t_low <= t_high <= 1, got {self.t_low}, {self.t_high}")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}")
        if self.morph_radius < 0:
            raise ValueError("morph_radius must be >= 0")
        if self.gain < 0:
            raise ValueError("gain must be >= 0")


def threshold(image: GrayImage, region, fraction: float, reference: str = "max") -> np.ndarray:
    """Pixels of ``region`` at or above ``fraction`` of the region's max or mean.

    A region with reference value 0 carries no signal and yields an empty mask.
    """
    region = np.asarray(region, dtype=bool)
    if region.shape != image.shape:
        raise ValueError(f"region shape {region.shape} != image shape {image.shape}")
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    if not region.any():
        raise ValueError("threshold region is empty")
    values = image.pixels[region]
    if reference == "max":
        ref = float(values.max())
    elif reference == "mean":
        ref = float(values.mean(dtype=np.float64))
    else:
        raise ValueError(f"reference must be one of {REFERENCES}")
    if ref == 0:
        return np.zeros_like(region)
    return region & (image.pixels >= fraction * ref)


def and_masks(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & b


def disk(radius: int) -> np.ndarray:
    """Discrete disk {(dx, dy): dx^2 + dy^2 <= radius^2}."""
    r = np.arange(-radius, radius + 1)
    return r[:, None] ** 2 + r[None, :] ** 2 <= radius**2


def _offsets(radius: int):
    se = disk(radius)
    return [(dy - radius, dx - radius) for dy, dx in zip(*np.nonzero(se))]


def erode(mask, radius: int) -> np.ndarray:
    """Erosion by a disk; pixels beyond the border count as False."""
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    h, w = mask.shape
    padded = np.pad(mask, radius, constant_values=False)
    out = np.ones_like(mask)
    for dy, dx in _offsets(radius):
        out &= padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
    return out


def dilate(mask, radius: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    h, w = mask.shape
    padded = np.pad(mask, radius, constant_values=False)
    out = np.zeros_like(mask)
    for dy, dx in _offsets(radius):
        out |= padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
    return out


def morph_open(mask, radius: int) -> np.ndarray:
    """Erosion then dilation with a disk of ``radius``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return dilate(erode(mask, radius), radius)


def morph_close(mask, radius: int) -> np.ndarray:
    """Dilation then erosion with a disk of ``radius``.

    Computed on a canvas extended by ``radius`` so that the dilation is not
    truncated at the image border; this keeps ``mask <= close(mask)`` true
    for pixels touching the border.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    big = np.pad(mask, radius, constant_values=False)
    closed = erode(dilate(big, radius), radius)
    return closed[radius:-radius, radius:-radius]


@dataclass(frozen=True, eq=False)
class SegmentStages:
    enhanced: GrayImage
    response: np.ndarray
    suppressed: GrayImage
    low: np.ndarray
    high: np.ndarray
    fused: np.ndarray
    final: np.ndarray


def segment_stages(
    roi: GrayImage,
    region,
    bank: FilterBank,
    clahe_cfg: ClaheConfig = ClaheConfig(),
    cfg: SegmentConfig = SegmentConfig(),
    jobs: int = 1,
) -> SegmentStages:
    """Run the full decision pipeline and keep every intermediate."""
    region = np.asarray(region, dtype=bool)
    if region.shape != roi.shape:
        raise ValueError(f"region shape {region.shape} != ROI shape {roi.shape}")
    enhanced = clahe(roi, clahe_cfg, mask=region)
    response = bank_response(enhanced, bank, combine=cfg.combine, jobs=jobs)
    suppressed = suppress_vessels(enhanced, response, cfg.gain)
    low = threshold(suppressed, region, cfg.t_low, cfg.reference)
    high = threshold(suppressed, region, cfg.t_high, cfg.reference)
    fused = and_masks(low, high)
    cleaned = morph_close(morph_open(fused, cfg.morph_radius), cfg.morph_radius)
    final = cleaned & region
    return SegmentStages(enhanced, response, suppressed, low, high, fused, final)


def segment_dense(
    roi: GrayImage,
    region,
    bank: FilterBank,
    clahe_cfg: ClaheConfig = ClaheConfig(),
    cfg: SegmentConfig = SegmentConfig(),
    jobs: int = 1,
) -> np.ndarray:
    """Dense-tissue mask for an ROI; always a subset of ``region``."""
    return segment_stages(roi, region, bank, clahe_cfg, cfg, jobs).final
