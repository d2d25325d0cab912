"""Reference layers projected onto the board: dot grid, scale bar, trace images.

Compositing uses an additive light model throughout: a projector can only
brighten a dark board, so layers add to the base instead of alpha-blending
over it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import CalibrationProfile, Homography, Point2, apply_h
from .raster import Raster, round_half_up

# Tick marks on the scale bar extend this far into the board, in mm.
SCALE_BAR_TICK_MM = 10.0

_EDGE_EPS_MM = 1e-9


class DimensionMismatch(ValueError):
    """Blend operands differ in size."""


class Polarity(str, Enum):
    AS_IS = "as_is"
    INVERTED = "inverted"


@dataclass(frozen=True)
class ScaleBar:
    """Graphical scale drawn along the bottom of the board."""

    length_mm: float = 500.0
    tick_every_mm: float = 100.0
    margin_mm: float = 20.0

    def __post_init__(self):
        if self.length_mm <= 0 or self.tick_every_mm <= 0:
            raise ValueError("scale bar length and tick spacing must be positive")
        if self.margin_mm < 0:
            raise ValueError("scale bar margin must be >= 0")
        ratio = self.length_mm / self.tick_every_mm
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"tick spacing {self.tick_every_mm} must divide length {self.length_mm} exactly"
            )


@dataclass(frozen=True)
class GridSpec:
    """Dot lattice at a fixed physical spacing, optionally rotated about the board origin."""

    spacing: float
    rotation: float = 0.0
    dot_radius: int = 2
    origin_offset: tuple[float, float] = (0.0, 0.0)
    scale_bar: ScaleBar = field(default_factory=ScaleBar)
    enabled: bool = False

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")
        if self.dot_radius < 1:
            raise ValueError(f"dot radius must be >= 1 px, got {self.dot_radius}")


@dataclass(frozen=True)
class ReferenceLayer:
    """A trace image placed on the board and projected at some opacity."""

    source: Raster
    placement: Homography  # reference px -> board mm
    opacity: float = 1.0
    polarity: Polarity = Polarity.AS_IS
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError(f"opacity must be in [0, 1], got {self.opacity}")


def grid_points(spec: GridSpec, board_w: float, board_h: float) -> list[Point2]:
    """Lattice points R(rotation) @ (i*s, j*s) + offset that land on the board.

    Ordering is row-major over the unrotated lattice indices (j outer,
    i inner, both ascending) so renders and tests are stable.
    """
    if board_w <= 0 or board_h <= 0:
        raise ValueError(f"board size must be positive, got {board_w}x{board_h}")
    s = spec.spacing
    t = math.radians(spec.rotation)
    c, sn = math.cos(t), math.sin(t)
    ox, oy = spec.origin_offset

    # Index bounds: pull the board corners back through the inverse transform.
    corners = np.array(
        [[0.0, 0.0], [board_w, 0.0], [board_w, board_h], [0.0, board_h]]
    ) - (ox, oy)
    inv = np.array([[c, sn], [-sn, c]])  # R(-t)
    back = corners @ inv.T
    i_lo = math.floor(back[:, 0].min() / s) - 1
    i_hi = math.ceil(back[:, 0].max() / s) + 1
    j_lo = math.floor(back[:, 1].min() / s) - 1
    j_hi = math.ceil(back[:, 1].max() / s) + 1

    pts = []
    for j in range(j_lo, j_hi + 1):
        for i in range(i_lo, i_hi + 1):
            x = c * (i * s) - sn * (j * s) + ox
            y = sn * (i * s) + c * (j * s) + oy
            if -_EDGE_EPS_MM <= x <= board_w + _EDGE_EPS_MM and -_EDGE_EPS_MM <= y <= board_h + _EDGE_EPS_MM:
                pts.append(Point2(x, y))
    return pts


def grid_dot_centers_px(spec: GridSpec, prof: CalibrationProfile) -> list[Point2]:
    """Grid points mapped into projector pixels; the centers the renderer draws."""
    h = prof.h_board_to_proj
    return [apply_h(h, p) for p in grid_points(spec, prof.board_w, prof.board_h)]


def render_reference_grid(spec: GridSpec, prof: CalibrationProfile, out_w: int, out_h: int) -> Raster:
    """Draw the dot grid and scale bar as white-on-black in projector space."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be at least 1x1, got {out_w}x{out_h}")
    canvas = np.zeros((out_h, out_w, 3), dtype=np.uint8)
    for center in grid_dot_centers_px(spec, prof):
        _fill_disc(canvas, center.x, center.y, spec.dot_radius)
    _draw_scale_bar(canvas, spec.scale_bar, prof)
    return Raster(canvas)


def _fill_disc(canvas: np.ndarray, cx: float, cy: float, radius: int) -> None:
    h, w = canvas.shape[:2]
    x_lo = max(0, math.floor(cx - radius))
    x_hi = min(w - 1, math.ceil(cx + radius))
    y_lo = max(0, math.floor(cy - radius))
    y_hi = min(h - 1, math.ceil(cy + radius))
    if x_lo > x_hi or y_lo > y_hi:
        return
    ys, xs = np.mgrid[y_lo : y_hi + 1, x_lo : x_hi + 1]
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2
    canvas[y_lo : y_hi + 1, x_lo : x_hi + 1][inside] = 255


def _draw_scale_bar(canvas: np.ndarray, bar: ScaleBar, prof: CalibrationProfile) -> None:
    h = prof.h_board_to_proj
    y = prof.board_h - bar.margin_mm

    def seg(a_mm, b_mm):
        pa = apply_h(h, a_mm)
        pb = apply_h(h, b_mm)
        _draw_line(canvas, pa.x, pa.y, pb.x, pb.y)

    seg((bar.margin_mm, y), (bar.margin_mm + bar.length_mm, y))
    for k in range(int(round(bar.length_mm / bar.tick_every_mm)) + 1):
        x = bar.margin_mm + k * bar.tick_every_mm
        seg((x, y), (x, y - SCALE_BAR_TICK_MM))


def _draw_line(canvas: np.ndarray, x0: float, y0: float, x1: float, y1: float) -> None:
    """1 px Bresenham segment between rounded endpoints, clipped to the frame."""
    h, w = canvas.shape[:2]
    ix0, iy0 = int(round(x0)), int(round(y0))
    ix1, iy1 = int(round(x1)), int(round(y1))
    dx = abs(ix1 - ix0)
    dy = -abs(iy1 - iy0)
    sx = 1 if ix0 < ix1 else -1
    sy = 1 if iy0 < iy1 else -1
    err = dx + dy
    x, y = ix0, iy0
    while True:
        if 0 <= x < w and 0 <= y < h:
            canvas[y, x] = 255
        if x == ix1 and y == iy1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def prepare_reference(src: Raster, polarity: Polarity) -> Raster:
    """Flip dark-on-light scans into light-on-dark projections when requested."""
    if polarity == Polarity.AS_IS:
        return src
    return Raster(255 - src.pixels)


def blend_chalk(base: Raster, layer: Raster, opacity: float) -> Raster:
    """Additive light composite: out = clamp(base + round(opacity * layer)).

    Monotone by construction; projecting black leaves the base untouched.
    The opacity scaling is a per-value map, so it runs through a 256-entry
    table with the sum done in uint16.
    """
    if (base.width, base.height) != (layer.width, layer.height):
        raise DimensionMismatch(
            f"base {base.width}x{base.height} vs layer {layer.width}x{layer.height}"
        )
    if not 0.0 <= opacity <= 1.0:
        raise ValueError(f"opacity must be in [0, 1], got {opacity}")
    lut = round_half_up(opacity * np.arange(256, dtype=np.float64)).astype(np.uint16)
    out = base.pixels.astype(np.uint16) + lut[layer.pixels]
    return Raster(np.minimum(out, 255).astype(np.uint8))
