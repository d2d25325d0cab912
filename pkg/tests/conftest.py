"""Shared fixtures: random rasters and the synthetic desk-scale board scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from abb.geometry import CalibrationProfile, Homography, estimate_homography, invert_h, warp_perspective
from abb.raster import Raster

BOARD_W_MM = 800.0
BOARD_H_MM = 600.0
CAM_SIZE = (1920, 1080)
PROJ_SIZE = (1280, 720)

# Where the fiducial crosses sit on the board, in mm (integer-valued so the
# truth raster at 1 px/mm has pixel-centered crosses).
CROSS_CENTERS_MM = [(150, 120), (650, 120), (400, 300), (150, 480), (650, 480)]


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_raster(rng, w: int, h: int) -> Raster:
    return Raster(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


def gradient_raster(w: int, h: int) -> Raster:
    """Smooth two-axis gradient; friendly to interpolation error bounds."""
    xs = np.linspace(0.0, 255.0, w)
    ys = np.linspace(0.0, 255.0, h)
    r = np.tile(xs, (h, 1))
    g = np.tile(ys[:, None], (1, w))
    b = (r + g) / 2.0
    return Raster(np.clip(np.dstack([r, g, b]), 0, 255).astype(np.uint8))


def quad_homography(src_quad, dst_quad) -> Homography:
    return estimate_homography(list(zip(src_quad, dst_quad)))


def board_corners_mm():
    return [(0.0, 0.0), (BOARD_W_MM, 0.0), (BOARD_W_MM, BOARD_H_MM), (0.0, BOARD_H_MM)]


@dataclass(frozen=True)
class SyntheticScene:
    """Ground-truth geometry for the desk-scale recall experiment."""

    h_board_to_cam: Homography   # board mm -> camera px
    h_board_to_proj: Homography  # board mm -> projector px
    profile: CalibrationProfile
    board_image: Raster          # truth raster at 1 px/mm with fiducial crosses
    camera_frame: Raster         # what the simulated camera photographed


def draw_cross(canvas: np.ndarray, cx: int, cy: int, arm: int = 12, half_width: int = 1) -> None:
    canvas[cy - half_width : cy + half_width + 1, cx - arm : cx + arm + 1] = 255
    canvas[cy - arm : cy + arm + 1, cx - half_width : cx + half_width + 1] = 255


def make_scene() -> SyntheticScene:
    # Mild keystone for both devices: board corners land well inside each frame.
    h_board_to_cam = quad_homography(
        board_corners_mm(),
        [(260.0, 140.0), (1660.0, 180.0), (1620.0, 940.0), (300.0, 900.0)],
    )
    h_board_to_proj = quad_homography(
        board_corners_mm(),
        [(40.0, 30.0), (1240.0, 50.0), (1230.0, 690.0), (50.0, 680.0)],
    )
    profile = CalibrationProfile(
        h_cam_to_board=invert_h(h_board_to_cam),
        h_board_to_proj=h_board_to_proj,
        board_w=BOARD_W_MM,
        board_h=BOARD_H_MM,
        residual_rms=0.0,
    )
    canvas = np.zeros((int(BOARD_H_MM), int(BOARD_W_MM), 3), dtype=np.uint8)
    for cx, cy in CROSS_CENTERS_MM:
        draw_cross(canvas, cx, cy)
    board_image = Raster(canvas)
    camera_frame = warp_perspective(board_image, h_board_to_cam, *CAM_SIZE)
    return SyntheticScene(h_board_to_cam, h_board_to_proj, profile, board_image, camera_frame)


@pytest.fixture(scope="session")
def scene() -> SyntheticScene:
    return make_scene()


def intensity_centroid(pixels: np.ndarray, cx: float, cy: float, radius: int = 26):
    """Brightness-weighted centroid in a window around (cx, cy); None if dark."""
    h, w = pixels.shape[:2]
    x0, x1 = max(0, int(cx) - radius), min(w, int(cx) + radius + 1)
    y0, y1 = max(0, int(cy) - radius), min(h, int(cy) + radius + 1)
    window = pixels[y0:y1, x0:x1].astype(np.float64).mean(axis=2)
    total = window.sum()
    if total <= 0:
        return None
    ys, xs = np.mgrid[y0:y1, x0:x1]
    return float((xs * window).sum() / total), float((ys * window).sum() / total)
