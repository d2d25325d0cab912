"""8-bit RGB raster images and the per-image adjustments applied at render time.

All operations are pure: they take immutable rasters and return new ones, so a
Raster can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class OutOfBounds(ValueError):
    """A crop rectangle extends past the image."""


class RasterFormatError(ValueError):
    """An image file could not be decoded."""


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Round .5 away from zero toward +inf (ties never go to even)."""
    return np.floor(values + 0.5)


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Round half up, clamp to [0, 255] and cast to uint8."""
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


class Raster:
    """Immutable (height, width, 3) uint8 pixel grid, row-major."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        a = np.ascontiguousarray(pixels)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixel array, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("raster must be at least 1x1")
        if a.dtype != np.uint8:
            if np.issubdtype(a.dtype, np.integer) and a.min() >= 0 and a.max() <= 255:
                a = a.astype(np.uint8)
            else:
                raise ValueError(f"channel values must be uint8, got dtype {a.dtype}")
        a = a.copy()
        a.setflags(write=False)
        self._pixels = a

    @classmethod
    def full(cls, width: int, height: int, rgb=(0, 0, 0)) -> "Raster":
        """Solid-color raster of the given size."""
        a = np.empty((height, width, 3), dtype=np.uint8)
        a[:, :] = rgb
        return cls(a)

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def pixels(self) -> np.ndarray:
        """Read-only (h, w, 3) uint8 view."""
        return self._pixels

    def __eq__(self, other) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    __hash__ = None  # mutable-sized payload; identity hashing would surprise

    def __repr__(self) -> str:
        return f"Raster({self.width}x{self.height})"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned crop region in pixel units."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"rect origin must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rect size must be at least 1x1, got {self.w}x{self.h}")


@dataclass(frozen=True)
class Levels:
    """Contrast/brightness adjustment. (contrast=1, brightness=0) is the identity."""

    contrast: float = 1.0
    brightness: float = 0.0

    def __post_init__(self):
        if self.contrast < 0:
            raise ValueError(f"contrast must be >= 0, got {self.contrast}")

    def is_identity(self) -> bool:
        return self.contrast == 1.0 and self.brightness == 0.0


def adjust_levels(img: Raster, lv: Levels) -> Raster:
    """Apply contrast about mid-gray 128, then a brightness offset.

    Per channel: out = clamp(round(contrast * (p - 128) + 128 + brightness)).
    The 128 pivot keeps mid-tones in place under contrast changes. The map
    depends only on the channel value, so it runs through a 256-entry table.
    """
    if lv.is_identity():
        return img
    values = np.arange(256, dtype=np.float64)
    lut = quantize_u8(lv.contrast * (values - 128.0) + 128.0 + lv.brightness)
    return Raster(lut[img.pixels])


def crop(img: Raster, r: Rect) -> Raster:
    """Extract the sub-raster covered by ``r``."""
    if r.x + r.w > img.width or r.y + r.h > img.height:
        raise OutOfBounds(
            f"rect {r.w}x{r.h}@({r.x},{r.y}) exceeds image {img.width}x{img.height}"
        )
    return Raster(img.pixels[r.y : r.y + r.h, r.x : r.x + r.w])


def rotate_quarter(img: Raster, turns: int) -> Raster:
    """Lossless clockwise rotation by ``turns`` quarter turns (mod 4)."""
    turns = turns % 4
    if turns == 0:
        return img
    return Raster(np.rot90(img.pixels, k=-turns))


def bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample an image at float positions with the shared bilinear kernel.

    Integer coordinates are pixel centers. Positions are clamped to the image,
    so callers wanting out-of-range behaviour must mask before/after. Returns
    float64 samples with a trailing channel axis.
    """
    h, w = pixels.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    p = pixels.astype(np.float64)
    top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resample_bilinear(img: Raster, out_w: int, out_h: int) -> Raster:
    """Resize with bilinear filtering under the half-pixel-center convention.

    src_x = (dst_x + 0.5) * (w / out_w) - 0.5, clamped at the borders; output
    matches the input bit-exactly when the size is unchanged.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be at least 1x1, got {out_w}x{out_h}")
    if out_w == img.width and out_h == img.height:
        return img
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (img.width / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (img.height / out_h) - 0.5
    samples = bilinear_sample(img.pixels, sx[None, :], sy[:, None])
    return Raster(quantize_u8(samples))


# --- file I/O ---------------------------------------------------------------
# PPM P6 is the bit-exact fixture format; PNG is for user import/export.


def write_ppm(img: Raster, path) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def read_ppm(path) -> Raster:
    data = Path(path).read_bytes()
    fields, offset = _ppm_header_fields(data, path)
    magic, w, h, maxval = fields
    if magic != b"P6":
        raise RasterFormatError(f"{path}: not a P6 ppm (magic {magic!r})")
    if maxval != 255:
        raise RasterFormatError(f"{path}: only maxval 255 supported, got {maxval}")
    n = w * h * 3
    body = data[offset : offset + n]
    if len(body) < n:
        raise RasterFormatError(f"{path}: truncated pixel data ({len(body)} of {n} bytes)")
    return Raster(np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3))


def _ppm_header_fields(data: bytes, path):
    """Parse magic + 3 integers, honoring whitespace and # comments."""
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise RasterFormatError(f"{path}: truncated ppm header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    i += 1  # single whitespace byte between header and pixel data
    try:
        nums = [int(t) for t in tokens[1:]]
    except ValueError as e:
        raise RasterFormatError(f"{path}: bad ppm header field: {e}") from None
    if nums[0] < 1 or nums[1] < 1:
        raise RasterFormatError(f"{path}: bad ppm dimensions {nums[0]}x{nums[1]}")
    return (tokens[0], *nums), i


def write_png(img: Raster, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def read_png(path) -> Raster:
    try:
        with Image.open(path) as im:
            return Raster(np.asarray(im.convert("RGB")))
    except OSError as e:
        raise RasterFormatError(f"{path}: {e}") from e


def save_image(img: Raster, path) -> None:
    """Write PPM or PNG depending on the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        write_ppm(img, path)
    elif suffix == ".png":
        write_png(img, path)
    else:
        raise ValueError(f"unsupported image extension {suffix!r} (use .ppm or .png)")


def load_image(path) -> Raster:
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        return read_ppm(path)
    if suffix == ".png":
        return read_png(path)
    raise ValueError(f"unsupported image extension {suffix!r} (use .ppm or .png)")
