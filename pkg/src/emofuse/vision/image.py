"""RGB/gray images, binary PNM codecs, luminosity grayscale and bilinear resampling."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DecodeError, ParameterError

FACE_SIZE = 48


@dataclass(frozen=True)
class RgbImage:
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] * p.shape[1] == 0:
            raise ParameterError(f"RGB image must be (h, w, 3) with h*w > 0, got {p.shape}")
        object.__setattr__(self, "pixels", p.astype(np.uint8, copy=False))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # (height, width) float64 in [0, 255]

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise ParameterError(f"gray image must be 2-D and non-empty, got {p.shape}")
        if np.any(p < 0) or np.any(p > 255) or not np.all(np.isfinite(p)):
            raise ParameterError("gray values must lie in [0, 255]")
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def to_grayscale(img: RgbImage) -> GrayImage:
    """Luminosity grayscale 0.3 R + 0.59 G + 0.11 B, kept unrounded."""
    rgb = img.pixels.astype(np.int64)
    # Integer weights then one division: exact for gray triplets, no drift above 255.
    weighted = 30 * rgb[..., 0] + 59 * rgb[..., 1] + 11 * rgb[..., 2]
    return GrayImage(weighted / 100.0)


def resize(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resampling with half-pixel centres and edge clamping."""
    if width < 1 or height < 1:
        raise ParameterError("target size must be at least 1x1")
    src = img.pixels
    sh, sw = src.shape

    def axis_coords(n_out, n_in):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis_coords(height, sh)
    x0, x1, fx = axis_coords(width, sw)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    return GrayImage(np.clip(out, 0.0, 255.0))


def resize_48(img: GrayImage) -> GrayImage:
    return resize(img, FACE_SIZE, FACE_SIZE)


def quantize(img: GrayImage) -> np.ndarray:
    return np.clip(np.floor(img.pixels + 0.5), 0, 255).astype(np.uint8)


# -- binary PNM ------------------------------------------------------------


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DecodeError("truncated PNM header", pos)
        tokens.append(data[start:pos])
    if pos >= n or not data[pos:pos + 1].isspace():
        raise DecodeError("missing whitespace after PNM header", pos)
    return tokens, pos + 1


def decode_pnm(data: bytes) -> RgbImage | GrayImage:
    """Decode binary P5 (gray) or P6 (RGB) with maxval 255."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise DecodeError(f"expected P5 or P6 magic, found {magic!r}", 0)
    tokens, body = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise DecodeError(f"non-numeric PNM header field in {tokens[1:4]!r}", 2) from None
    if width < 1 or height < 1:
        raise DecodeError(f"invalid PNM dimensions {width}x{height}", 2)
    if maxval != 255:
        raise DecodeError(f"only maxval 255 is supported, got {maxval}", 2)
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[body:body + need]
    if len(raster) < need:
        raise DecodeError(f"PNM raster truncated: need {need} bytes, have {len(raster)}", body)
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 3:
        return RgbImage(arr.reshape(height, width, 3).copy())
    return GrayImage(arr.reshape(height, width).astype(np.float64))


def encode_pgm(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + quantize(img).tobytes()


def encode_ppm(img: RgbImage) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def read_image(path: str | Path) -> RgbImage | GrayImage:
    return decode_pnm(Path(path).read_bytes())


def as_gray(img: RgbImage | GrayImage) -> GrayImage:
    return to_grayscale(img) if isinstance(img, RgbImage) else img


def preprocess_face(img: RgbImage | GrayImage) -> GrayImage:
    """Grayscale then 48x48: the input format the CNN expects."""
    gray = as_gray(img)
    if gray.pixels.shape == (FACE_SIZE, FACE_SIZE):
        return gray
    return resize_48(gray)
