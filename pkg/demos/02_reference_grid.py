"""The dot-grid drawing guide with its graphical scale bar.

Renders three variants of the projected grid: orthogonal, rotated 30 degrees
(for perspective-construction lessons), and orthogonal under a keystoned
board->projector calibration, which is what the chalk actually receives once
the projector is calibrated to a real wall-mounted board.
"""

import pathlib

from abb import CalibrationProfile, GridSpec, ScaleBar, estimate_homography, grid_points
from abb.overlay import render_reference_grid
from abb.raster import save_image

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

BOARD_W, BOARD_H = 800.0, 600.0


def main():
    identity = CalibrationProfile.identity(BOARD_W, BOARD_H)
    spec = GridSpec(
        spacing=100.0,
        dot_radius=3,
        scale_bar=ScaleBar(length_mm=500.0, tick_every_mm=100.0, margin_mm=30.0),
        enabled=True,
    )

    pts = grid_points(spec, BOARD_W, BOARD_H)
    print(f"orthogonal 100 mm lattice on {BOARD_W:.0f}x{BOARD_H:.0f} mm: {len(pts)} dots")
    save_image(render_reference_grid(spec, identity, 800, 600), OUT / "02_grid_orthogonal.png")

    rotated = GridSpec(
        spacing=100.0, rotation=30.0, dot_radius=3, scale_bar=spec.scale_bar, enabled=True
    )
    print(f"rotated 30 deg: {len(grid_points(rotated, BOARD_W, BOARD_H))} dots on board")
    save_image(render_reference_grid(rotated, identity, 800, 600), OUT / "02_grid_rotated.png")

    corners = [(0, 0), (BOARD_W, 0), (BOARD_W, BOARD_H), (0, BOARD_H)]
    keystoned = CalibrationProfile(
        identity.h_cam_to_board,
        estimate_homography(list(zip(corners, [(70, 40), (1210, 80), (1190, 680), (90, 650)]))),
        BOARD_W,
        BOARD_H,
        0.0,
    )
    save_image(
        render_reference_grid(spec, keystoned, 1280, 720), OUT / "02_grid_keystoned.png"
    )
    print("keystoned projector view written; every dot still sits on the mm lattice")
    print("outputs in", OUT)


if __name__ == "__main__":
    main()
