"""Image and tensor value types plus the similarity primitive the skip gate uses.

All raster values are float64 in [0, 1]; latents are float64 and unbounded.
Instances are immutable after construction (backing arrays are marked
read-only), so they can be shared freely across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

LATENT_CHANNELS = 4
LATENT_DOWNSCALE = 8


def _own(arr: np.ndarray, dtype=np.float64) -> np.ndarray:
    # Takes ownership: the array (or its contiguous conversion) is frozen in
    # place. Callers that want to keep a mutable copy must pass arr.copy().
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GrayImage:
    """Single-channel raster, shape (height, width), intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        d = _own(self.data)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"gray image must be 2-D and non-empty, got shape {d.shape}")
        lo, hi = float(d.min()), float(d.max())
        if not (0.0 <= lo and hi <= 1.0):
            raise ValueError(f"gray intensities outside [0, 1]: min={lo}, max={hi}")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value: float = 0.0) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.float64))


@dataclass(frozen=True)
class RgbImage:
    """Three-channel raster, shape (height, width, 3), channels in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        d = _own(self.data)
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"rgb image must have shape (h, w, 3), got {d.shape}")
        lo, hi = float(d.min()), float(d.max())
        if not (0.0 <= lo and hi <= 1.0):
            raise ValueError(f"rgb channels outside [0, 1]: min={lo}, max={hi}")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Latent:
    """4-channel working tensor, shape (4, height, width), 8x downsampled from source."""

    data: np.ndarray

    def __post_init__(self):
        d = _own(self.data)
        if d.ndim != 3 or d.shape[0] != LATENT_CHANNELS:
            raise ValueError(f"latent must have shape (4, h, w), got {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("latent contains non-finite values")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[0]


def cosine_similarity(a: GrayImage, b: GrayImage) -> float:
    """Cosine of the angle between the flattened intensity vectors of a and b.

    A zero-norm operand (blank canvas) yields 0.0: a first stroke must always
    look maximally dissimilar so the gate forces generation.
    """
    if a.data.shape != b.data.shape:
        raise ValueError(f"dimension mismatch: {a.data.shape} vs {b.data.shape}")
    av = a.data.ravel()
    bv = b.data.ravel()
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(av, bv):
        # identical sketches (the re-stroke case) must gate at exactly 1
        return 1.0
    return float(av @ bv) / (na * nb)


def _resize_axis_coords(n_in: int, n_out: int):
    # Align-corners mapping: output i samples input i * (n_in-1)/(n_out-1).
    if n_out == 1:
        pos = np.zeros(1, dtype=np.float64)
    else:
        pos = np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))
    i0 = np.clip(np.floor(pos).astype(np.intp), 0, n_in - 1)
    frac = pos - i0
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, frac


def _resize_plane(data: np.ndarray, w: int, h: int) -> np.ndarray:
    x0, x1, fx = _resize_axis_coords(data.shape[1], w)
    y0, y1, fy = _resize_axis_coords(data.shape[0], h)
    if data.ndim == 3:
        fx = fx[None, :, None]
        fy = fy[:, None, None]
        top = data[y0][:, x0] + fx * (data[y0][:, x1] - data[y0][:, x0])
        bot = data[y1][:, x0] + fx * (data[y1][:, x1] - data[y1][:, x0])
    else:
        fx = fx[None, :]
        fy = fy[:, None]
        top = data[y0][:, x0] + fx * (data[y0][:, x1] - data[y0][:, x0])
        bot = data[y1][:, x0] + fx * (data[y1][:, x1] - data[y1][:, x0])
    # v0 + f*(v1 - v0) keeps constants bit-exact (the difference term is 0).
    return top + fy * (bot - top)


def resize_bilinear(img, w: int, h: int):
    """Bilinear resize under the align-corners convention; preserves [0, 1]."""
    if w < 1 or h < 1:
        raise ValueError(f"target dimensions must be positive, got {w}x{h}")
    out = np.clip(_resize_plane(img.data, w, h), 0.0, 1.0)
    if isinstance(img, RgbImage):
        return RgbImage(out)
    if isinstance(img, GrayImage):
        return GrayImage(out)
    raise TypeError(f"cannot resize {type(img).__name__}")


def rgb_to_gray(img: RgbImage) -> GrayImage:
    """Luma conversion, 0.299 R + 0.587 G + 0.114 B."""
    d = img.data
    # Summation order chosen so pure white maps to exactly 1.0 in float64.
    gray = 0.299 * d[:, :, 0] + 0.114 * d[:, :, 2] + 0.587 * d[:, :, 1]
    return GrayImage(np.clip(gray, 0.0, 1.0))


def gray_to_rgb(img: GrayImage) -> RgbImage:
    """Lift a single-channel image to RGB by channel replication."""
    out = np.empty((*img.data.shape, 3), dtype=np.float64)
    out[...] = img.data[:, :, None]
    return RgbImage(out)


def png_bytes(img) -> bytes:
    """Encode as an 8-bit PNG; intensities quantize by round(v * 255)."""
    q = np.rint(img.data * 255.0).astype(np.uint8)
    mode = "RGB" if isinstance(img, RgbImage) else "L"
    buf = io.BytesIO()
    Image.fromarray(q, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def gray_from_png_bytes(data: bytes) -> GrayImage:
    with Image.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return GrayImage(arr / 255.0)


def save_png(img, path) -> None:
    """Write an 8-bit PNG; intensities quantize by round(v * 255)."""
    Path(path).write_bytes(png_bytes(img))


def load_gray_png(path) -> GrayImage:
    with Image.open(Path(path)) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return GrayImage(arr / 255.0)


def load_rgb_png(path) -> RgbImage:
    with Image.open(Path(path)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return RgbImage(arr / 255.0)
