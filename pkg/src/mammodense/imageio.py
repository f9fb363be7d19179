"""Netpbm reading and writing (PGM P2/P5, PBM P1/P4).

Images are held as :class:`GrayImage`, a thin wrapper over a 2D numpy array
that also records the bit depth. Masks are plain 2D boolean arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GrayImage",
    "PnmError",
    "BadMagicError",
    "TruncatedError",
    "MaxvalError",
    "BadDimensionsError",
    "read_pgm",
    "write_pgm",
    "read_mask",
    "write_mask",
    "load_image",
    "load_mask",
    "save_image",
    "save_mask",
]

_WHITESPACE = b" \t\n\r\v\f"


class PnmError(ValueError):
    """Base class for malformed Netpbm input."""


class BadMagicError(PnmError):
    pass


class TruncatedError(PnmError):
    pass


class MaxvalError(PnmError):
    pass


class BadDimensionsError(PnmError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grayscale raster with an explicit bit depth (8 or 16).

    ``pixels`` has shape ``(height, width)`` and is stored as uint8 for
    depth 8 and uint16 for depth 16.
    """

    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be a nonempty 2D array, got shape {px.shape}")
        if px.size and (px.min() < 0 or px.max() > self.maxval):
            raise ValueError(f"pixel values outside [0, {self.maxval}]")
        dtype = np.uint8 if self.bit_depth == 8 else np.uint16
        px = np.ascontiguousarray(px, dtype=dtype)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def maxval(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_pixels(self, pixels: np.ndarray) -> "GrayImage":
        return GrayImage(pixels, self.bit_depth)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.bit_depth == other.bit_depth and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.height}x{self.width}, depth={self.bit_depth})"


class _Header:
    """Token scanner over a Netpbm header, skipping ``#`` comments."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos : self.pos + 1]
            if ch in _WHITESPACE and ch:
                self.pos += 1
            elif ch == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = n if end < 0 else end + 1
            else:
                break

    def token(self, what: str) -> bytes:
        self._skip()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos : self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise TruncatedError(f"unexpected end of header while reading {what}")
        return data[start : self.pos]

    def integer(self, what: str) -> int:
        tok = self.token(what)
        try:
            return int(tok)
        except ValueError:
            raise PnmError(f"invalid {what}: {tok!r}") from None

    def end_of_header(self):
        # exactly one whitespace byte separates the header from a raster
        if self.pos >= len(self.data):
            raise TruncatedError("missing raster data")
        self.pos += 1


def _read_dims(hdr: _Header) -> tuple[int, int]:
    width = hdr.integer("width")
    height = hdr.integer("height")
    if width <= 0 or height <= 0:
        raise BadDimensionsError(f"nonpositive dimensions {width}x{height}")
    return width, height


def _read_maxval(hdr: _Header) -> int:
    maxval = hdr.integer("maxval")
    if not 1 <= maxval <= 65535:
        raise MaxvalError(f"maxval {maxval} outside [1, 65535]")
    return maxval


def _decode(data: bytes) -> tuple[str, np.ndarray, int]:
    """Decode any supported Netpbm payload into (magic, samples, maxval)."""
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise BadMagicError(f"unsupported magic number {magic!r}")
    hdr = _Header(data)
    hdr.pos = 2
    width, height = _read_dims(hdr)
    count = width * height

    if magic == b"P1":
        # bits may or may not be whitespace separated
        body = bytes(b for b in data[hdr.pos :] if b in b"01")
        if len(body) < count:
            raise TruncatedError(f"expected {count} bits, found {len(body)}")
        bits = np.frombuffer(body[:count], dtype=np.uint8) - ord("0")
        return "P1", bits.reshape(height, width), 1

    if magic == b"P4":
        hdr.end_of_header()
        row_bytes = (width + 7) // 8
        raw = data[hdr.pos : hdr.pos + row_bytes * height]
        if len(raw) < row_bytes * height:
            raise TruncatedError(f"expected {row_bytes * height} bytes, found {len(raw)}")
        packed = np.frombuffer(raw, dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :width]
        return "P4", bits, 1

    maxval = _read_maxval(hdr)
    if magic == b"P2":
        tokens = data[hdr.pos :].split()
        if len(tokens) < count:
            raise TruncatedError(f"expected {count} samples, found {len(tokens)}")
        try:
            values = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError:
            raise PnmError("non-integer sample in P2 raster") from None
    else:
        hdr.end_of_header()
        sample_bytes = 1 if maxval < 256 else 2
        raw = data[hdr.pos : hdr.pos + count * sample_bytes]
        if len(raw) < count * sample_bytes:
            raise TruncatedError(f"expected {count * sample_bytes} bytes, found {len(raw)}")
        values = np.frombuffer(raw, dtype=np.uint8 if sample_bytes == 1 else ">u2")
    values = values.reshape(height, width)
    if values.size and (values.min() < 0 or values.max() > maxval):
        raise MaxvalError(f"sample exceeds maxval {maxval}")
    return magic.decode(), values, maxval


def read_pgm(data: bytes) -> GrayImage:
    """Decode a P2 or P5 PGM. Depth is 8 when maxval <= 255, else 16.

    Samples are kept as-is; a maxval like 4095 is not rescaled to 65535.
    """
    magic, values, maxval = _decode(data)
    if magic not in ("P2", "P5"):
        raise BadMagicError(f"expected a PGM (P2/P5), got {magic}")
    return GrayImage(values, 8 if maxval <= 255 else 16)


def write_pgm(image: GrayImage, ascii: bool = False) -> bytes:
    """Encode as P2 (``ascii=True``) or P5, with maxval ``2**depth - 1``."""
    header = f"{'P2' if ascii else 'P5'}\n{image.width} {image.height}\n{image.maxval}\n".encode()
    if ascii:
        lines = [" ".join(map(str, row)) for row in image.pixels.tolist()]
        return header + ("\n".join(lines) + "\n").encode()
    dtype = np.uint8 if image.bit_depth == 8 else ">u2"
    return header + image.pixels.astype(dtype).tobytes()


def read_mask(data: bytes) -> np.ndarray:
    """Decode a PGM or PBM into a boolean mask (nonzero -> True)."""
    _, values, _ = _decode(data)
    return np.asarray(values) != 0


def write_mask(mask: np.ndarray) -> bytes:
    """Encode a boolean mask as an 8-bit P5 PGM with values 0/255."""
    mask = np.asarray(mask, dtype=bool)
    return write_pgm(GrayImage(mask.astype(np.uint8) * 255, 8))


def load_image(path) -> GrayImage:
    return read_pgm(Path(path).read_bytes())


def load_mask(path) -> np.ndarray:
    return read_mask(Path(path).read_bytes())


def save_image(path, image: GrayImage, ascii: bool = False) -> None:
    Path(path).write_bytes(write_pgm(image, ascii=ascii))


def save_mask(path, mask: np.ndarray) -> None:
    Path(path).write_bytes(write_mask(mask))
