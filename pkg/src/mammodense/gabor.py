"""Gabor kernel synthesis, orientation banks, and vessel suppression.

The complex kernel is a Gaussian envelope (elongated by ``gamma`` across the
carrier) multiplied by a complex carrier of wavelength ``wavelength`` running
along direction ``theta``. Only the real, even part is used for filtering.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .convolve import convolve2d, rescale_to_depth, round_half_up
from .imageio import GrayImage

__all__ = [
    "GaborParams",
    "GaborKernel",
    "FilterBank",
    "make_kernel",
    "make_bank",
    "default_params",
    "kernel_size_for",
    "bank_response",
    "orientation_responses",
    "suppress_vessels",
]


@dataclass(frozen=True)
class GaborParams:
    theta: float = 0.0
    gamma: float = 0.5
    wavelength: float = 4.0
    sigma: float = 2.24
    psi: float = 0.0

    def __post_init__(self):
        if not (self.wavelength > 0 and self.sigma > 0 and self.gamma > 0):
            raise ValueError("wavelength, sigma and gamma must be positive")


@dataclass(frozen=True, eq=False)
class GaborKernel:
    size: int
    real: np.ndarray
    imag: np.ndarray
    params: GaborParams


@dataclass(frozen=True, eq=False)
class FilterBank:
    kernels: tuple[GaborKernel, ...]
    thetas: tuple[float, ...]

    def __len__(self):
        return len(self.kernels)

    @property
    def size(self) -> int:
        return self.kernels[0].size


def default_params(size: int, **overrides) -> GaborParams:
    """Bank defaults for a given kernel size: about four carrier periods per kernel."""
    wavelength = overrides.pop("wavelength", None) or size / 4
    sigma = overrides.pop("sigma", None) or 0.56 * wavelength
    return GaborParams(wavelength=wavelength, sigma=sigma, **overrides)


def _grid(size: int):
    half = (size - 1) // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    # rows are y, columns are x
    return np.meshgrid(coords, coords, indexing="xy")


def make_kernel(params: GaborParams, size: int, zero_mean: bool = False) -> GaborKernel:
    """Sample the complex Gabor function on a ``size`` x ``size`` grid.

    No normalization is applied unless ``zero_mean`` is set, in which case the
    mean of the real part is subtracted (the imaginary part is already odd).
    """
    if size < 3 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 3, got {size}")
    x, y = _grid(size)
    c, s = math.cos(params.theta), math.sin(params.theta)
    along = x * c + y * s
    across = y * c - x * s
    envelope = np.exp(-(along**2 + params.gamma**2 * across**2) / (2 * params.sigma**2))
    phase = 2 * math.pi * along / params.wavelength + params.psi
    real = envelope * np.cos(phase)
    imag = envelope * np.sin(phase)
    if zero_mean:
        real = real - real.mean()
    real.setflags(write=False)
    imag.setflags(write=False)
    return GaborKernel(size, real, imag, params)


def make_bank(
    base: GaborParams, n_orientations: int = 8, size: int = 25, zero_mean: bool = True
) -> FilterBank:
    """Kernels at theta_k = k*pi/n, k = 0..n-1, otherwise sharing ``base``."""
    if n_orientations < 1:
        raise ValueError("n_orientations must be >= 1")
    thetas = tuple(k * math.pi / n_orientations for k in range(n_orientations))
    kernels = tuple(make_kernel(replace(base, theta=t), size, zero_mean) for t in thetas)
    return FilterBank(kernels, thetas)


def kernel_size_for(height: int, width: int) -> int:
    """Largest odd size strictly below a tenth of the shorter side, at least 3."""
    short = min(height, width)
    if short < 30:
        raise ValueError(f"image too small for the kernel-size rule: {height}x{width}")
    n = (short - 1) // 10
    if n % 2 == 0:
        n -= 1
    return max(n, 3)


def orientation_responses(image, bank: FilterBank, border: str = "replicate", jobs: int = 1):
    """Rectified convolution of ``image`` with every kernel's real part."""
    if isinstance(image, GrayImage):
        image = image.pixels
    if bank.size > min(np.shape(image)):
        raise ValueError(f"kernel size {bank.size} exceeds image dims {np.shape(image)}")

    def one(kernel):
        return np.maximum(convolve2d(image, kernel.real, border=border), 0.0)

    if jobs > 1 and len(bank) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, bank.kernels))
    return [one(k) for k in bank.kernels]


def bank_response(
    image, bank: FilterBank, combine: str = "max", border: str = "replicate", jobs: int = 1
) -> np.ndarray:
    """Superimpose rectified orientation responses (pixelwise max, or sum)."""
    responses = orientation_responses(image, bank, border=border, jobs=jobs)
    if combine == "max":
        return np.maximum.reduce(responses)
    if combine == "sum":
        return np.add.reduce(responses)
    raise ValueError(f"combine must be 'max' or 'sum', got {combine!r}")


def suppress_vessels(image: GrayImage, response, gain: float = 1.0) -> GrayImage:
    """Subtract the response, rescaled to the image's full range, times ``gain``."""
    response = np.asarray(response, dtype=np.float64)
    if response.shape != image.shape:
        raise ValueError(f"response shape {response.shape} != image shape {image.shape}")
    if gain < 0:
        raise ValueError("gain must be >= 0")
    if gain == 0:
        return image
    scaled = rescale_to_depth(response, image.bit_depth).pixels.astype(np.float64)
    out = round_half_up(image.pixels.astype(np.float64) - gain * scaled)
    return image.with_pixels(np.clip(out, 0, image.maxval).astype(np.int64))
