"""Capture -> rectify -> recall, end to end on a synthetic desk-scale scene.

Builds an 800x600 mm board with five chalk-like fiducial crosses, photographs
it with a simulated keystoned camera, rectifies the photo back into board
millimeters, and re-projects it the way the service does when a presenter
recalls an erased drawing. Writes every stage into demos/out/.
"""

import pathlib
import tempfile

import numpy as np

from abb import CalibrationProfile, SessionState, estimate_homography, invert_h, warp_perspective
from abb.geometry import apply_h, rectify_capture
from abb.raster import Raster, save_image
from abb.service import ImageStore, render_frame
from abb.session import ingest_capture

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

BOARD_W, BOARD_H = 800.0, 600.0
CROSSES = [(150, 120), (650, 120), (400, 300), (150, 480), (650, 480)]


def draw_board() -> Raster:
    canvas = np.zeros((int(BOARD_H), int(BOARD_W), 3), dtype=np.uint8)
    for cx, cy in CROSSES:
        canvas[cy - 1 : cy + 2, cx - 12 : cx + 13] = 255
        canvas[cy - 12 : cy + 13, cx - 1 : cx + 2] = 255
    return Raster(canvas)


def main():
    corners = [(0, 0), (BOARD_W, 0), (BOARD_W, BOARD_H), (0, BOARD_H)]
    h_board_to_cam = estimate_homography(
        list(zip(corners, [(260, 140), (1660, 180), (1620, 940), (300, 900)]))
    )
    h_board_to_proj = estimate_homography(
        list(zip(corners, [(40, 30), (1240, 50), (1230, 690), (50, 680)]))
    )
    profile = CalibrationProfile(
        invert_h(h_board_to_cam), h_board_to_proj, BOARD_W, BOARD_H, 0.0
    )

    board = draw_board()
    save_image(board, OUT / "01_board_truth.png")
    print("1. truth board drawn at 1 px/mm ->", OUT / "01_board_truth.png")

    photo = warp_perspective(board, h_board_to_cam, 1920, 1080)
    save_image(photo, OUT / "01_camera_photo.png")
    print("2. simulated 1080p camera photo ->", OUT / "01_camera_photo.png")

    rectified = rectify_capture(photo, profile, px_per_mm=1.0)
    save_image(rectified, OUT / "01_rectified.png")
    print("3. rectified back to board mm ->", OUT / "01_rectified.png")

    with tempfile.TemporaryDirectory() as session_dir:
        state = ingest_capture(SessionState(), photo, profile, session_dir)
        frame = render_frame(state, profile, 1280, 720, ImageStore(session_dir))
    save_image(frame, OUT / "01_projector_recall.png")
    print("4. recall frame for the projector ->", OUT / "01_projector_recall.png")

    print("\ncross positions, board mm -> projector px:")
    for mm in CROSSES:
        p = apply_h(h_board_to_proj, mm)
        print(f"   {mm} -> ({p.x:7.2f}, {p.y:7.2f})")


if __name__ == "__main__":
    main()
