"""8-bit raster handling: codecs, grayscale, crops, sliding windows and gate statistics.

Statistics follow fixed conventions so that gate thresholds stay calibrated:
population variance everywhere, nearest-rank percentiles, and a 4-neighbor
Laplacian evaluated on interior pixels only (no border padding).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ImageTooSmall, OutOfBounds, WindowTooLarge

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8"

# Rec. 601 luma weights, applied with round-half-up.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


@dataclass
class RgbImage:
    """Row-major 8-bit RGB raster; ``data`` has shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"RgbImage wants uint8 (h, w, 3), got {arr.dtype} {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass
class GrayImage:
    """Row-major 8-bit luminance raster; ``data`` has shape (height, width)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8 or arr.ndim != 2:
            raise ValueError(f"GrayImage wants uint8 (h, w), got {arr.dtype} {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class PixelWindow:
    """Square pixel window with top-left corner (col0, row0)."""

    col0: int
    row0: int
    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"window size must be >= 1: {self.size}")


def _sniff_format(data: bytes) -> str:
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return "PNG"
    if data[: len(_JPEG_MAGIC)] == _JPEG_MAGIC:
        return "JPEG"
    return "unknown"


def decode_image(data: bytes) -> RgbImage:
    """Decode a PNG or JPEG byte stream into an RGB raster.

    Raises DecodeError naming the detected container when the stream is
    malformed or not one of the two supported formats.
    """
    kind = _sniff_format(data)
    try:
        with Image.open(io.BytesIO(data)) as img:
            fmt = img.format
            if fmt not in ("PNG", "JPEG"):
                raise DecodeError(f"unsupported image format {fmt!r} (need PNG or JPEG)")
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        if kind == "unknown":
            raise DecodeError(f"not a PNG or JPEG stream: {exc}") from exc
        raise DecodeError(f"malformed {kind} stream: {exc}") from exc
    return RgbImage(arr.copy())


def encode_png(img: RgbImage | GrayImage) -> bytes:
    """Encode a raster as PNG (lossless; decode round-trips bit-exact)."""
    mode = "RGB" if isinstance(img, RgbImage) else "L"
    pil = Image.fromarray(img.data, mode=mode)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def to_grayscale(img: RgbImage) -> GrayImage:
    """Rec. 601 luma with round-half-up, clamped to [0, 255]."""
    rgb = img.data.astype(np.float64)
    luma = _LUMA_R * rgb[:, :, 0] + _LUMA_G * rgb[:, :, 1] + _LUMA_B * rgb[:, :, 2]
    out = np.clip(np.floor(luma + 0.5), 0.0, 255.0).astype(np.uint8)
    return GrayImage(out)


def crop(img: RgbImage, w: PixelWindow) -> RgbImage:
    """Bit-exact copy of the window's pixels."""
    if w.col0 < 0 or w.row0 < 0 or w.col0 + w.size > img.width or w.row0 + w.size > img.height:
        raise OutOfBounds(
            f"window (col0={w.col0}, row0={w.row0}, size={w.size}) "
            f"exceeds {img.width}x{img.height} image"
        )
    return RgbImage(img.data[w.row0 : w.row0 + w.size, w.col0 : w.col0 + w.size].copy())


def sliding_windows(width: int, height: int, size: int, stride: int) -> list[PixelWindow]:
    """All fully-contained size x size windows on a stride grid, row-major order."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1: {stride}")
    if size > min(width, height):
        raise WindowTooLarge(f"window {size} does not fit a {width}x{height} image")
    windows = []
    for row0 in range(0, height - size + 1, stride):
        for col0 in range(0, width - size + 1, stride):
            windows.append(PixelWindow(col0=col0, row0=row0, size=size))
    return windows


def laplacian_variance(g: GrayImage) -> float:
    """Population variance of the 4-neighbor Laplacian over interior pixels.

    Kernel: center 4, cross neighbors -1, corners 0. Border pixels are
    excluded rather than padded, so the statistic carries no padding policy.
    """
    if g.width < 3 or g.height < 3:
        raise ImageTooSmall(f"laplacian needs at least 3x3, got {g.width}x{g.height}")
    a = g.data.astype(np.float64)
    resp = (
        4.0 * a[1:-1, 1:-1]
        - a[:-2, 1:-1]
        - a[2:, 1:-1]
        - a[1:-1, :-2]
        - a[1:-1, 2:]
    )
    return float(np.var(resp))


def pixel_variance(g: GrayImage) -> float:
    """Population variance of the luminance values."""
    return float(np.var(g.data.astype(np.float64)))


def contrast_range(g: GrayImage, p_low: float, p_high: float) -> int:
    """Difference between two nearest-rank percentiles of the luminance values."""
    if not 0.0 <= p_low < p_high <= 100.0:
        raise ValueError(f"need 0 <= p_low < p_high <= 100, got ({p_low}, {p_high})")
    values = np.sort(g.data, axis=None)
    n = values.size

    def nearest_rank(p: float) -> int:
        rank = max(1, math.ceil(p * n / 100.0))
        return int(values[rank - 1])

    return nearest_rank(p_high) - nearest_rank(p_low)


def histogram_entropy(g: GrayImage) -> float:
    """Shannon entropy in bits of the 256-bin luminance histogram."""
    counts = np.bincount(g.data.reshape(-1), minlength=256)
    p = counts[counts > 0] / g.data.size
    return float(-np.sum(p * np.log2(p)))


def saturated_ratio(g: GrayImage) -> tuple[float, float]:
    """Fractions of pure-black (0) and pure-white (255) pixels."""
    n = g.data.size
    black = float(np.count_nonzero(g.data == 0)) / n
    white = float(np.count_nonzero(g.data == 255)) / n
    return black, white


def block_mean_variance_ratio(g: GrayImage, block: int) -> float:
    """Variance of per-block mean luminance divided by global pixel variance.

    Blocks are non-overlapping block x block tiles; partial edge tiles are
    dropped. White noise has nearly constant block means (ratio near
    1/block^2) while real structure keeps the ratio high. Defined as 0 on a
    globally flat image.
    """
    if block < 1:
        raise ValueError(f"block must be >= 1: {block}")
    if g.width < block or g.height < block:
        raise ImageTooSmall(f"block {block} does not fit a {g.width}x{g.height} image")
    total_var = pixel_variance(g)
    if total_var == 0.0:
        return 0.0
    rows = (g.height // block) * block
    cols = (g.width // block) * block
    tiles = g.data[:rows, :cols].astype(np.float64)
    means = tiles.reshape(rows // block, block, cols // block, block).mean(axis=(1, 3))
    return float(np.var(means)) / total_var


def box_blur(g: GrayImage, size: int) -> GrayImage:
    """Uniform size x size mean filter with edge-replicated borders, round-half-up.

    size must be odd; size 1 is the identity.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"box blur size must be odd and >= 1: {size}")
    if size == 1:
        return GrayImage(g.data.copy())
    r = size // 2
    padded = np.pad(g.data.astype(np.float64), r, mode="edge")
    # Separable box filter via windowed sums of a cumulative sum.
    csum = np.cumsum(padded, axis=0)
    csum = np.vstack([np.zeros((1, csum.shape[1])), csum])
    rows = csum[size:, :] - csum[:-size, :]
    csum = np.cumsum(rows, axis=1)
    csum = np.hstack([np.zeros((csum.shape[0], 1)), csum])
    sums = csum[:, size:] - csum[:, :-size]
    out = np.floor(sums / (size * size) + 0.5)
    return GrayImage(np.clip(out, 0.0, 255.0).astype(np.uint8))
