"""Dense/fat tissue segmentation of digitized mammograms.

Gabor-bank vessel suppression, CLAHE contrast enhancement and dual
intensity thresholds fused with a logical AND, followed by binary
morphology cleanup.
"""

from .clahe import ClaheConfig, clahe
from .gabor import FilterBank, GaborParams, bank_response, kernel_size_for, make_bank, make_kernel
from .imageio import GrayImage, read_mask, read_pgm, write_pgm
from .metrics import DensityReport, categorize, density_percent
from .pipeline import PipelineConfig, run_batch, run_single
from .segment import SegmentConfig, segment_dense

__version__ = "0.1.0"

__all__ = [
    "ClaheConfig",
    "DensityReport",
    "FilterBank",
    "GaborParams",
    "GrayImage",
    "PipelineConfig",
    "SegmentConfig",
    "bank_response",
    "categorize",
    "clahe",
    "density_percent",
    "kernel_size_for",
    "make_bank",
    "make_kernel",
    "read_mask",
    "read_pgm",
    "run_batch",
    "run_single",
    "segment_dense",
    "write_pgm",
]
