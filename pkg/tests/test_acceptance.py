"""Acceptance suite: quantified desk-scale oracles, one pass line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance here is pinned; nothing is calibrated after the fact.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from abb.cli import main as cli_main
from abb.geometry import (
    CalibrationProfile,
    Homography,
    apply_h,
    apply_h_many,
    estimate_homography,
    invert_h,
    reprojection_rms,
    warp_perspective,
)
from abb.overlay import GridSpec, grid_dot_centers_px, grid_points
from abb.protocol import Command, CommandKind, decode_stream, encode_frame
from abb.raster import Raster, read_ppm
from abb.service import ImageStore, render_frame
from abb.session import SessionState, check_invariants, dispatch, ingest_capture, load, persist
from conftest import (
    CROSS_CENTERS_MM,
    PROJ_SIZE,
    gradient_raster,
    intensity_centroid,
    make_scene,
)
from test_geometry import random_quad
from test_protocol import all_boundary_commands, corrupt_byte
from test_session import all_command_instances, all_states, make_rich_state

GOLDEN = Path(__file__).parent / "golden"


def ok(cid: str, detail: str) -> None:
    print(f"\n[{cid}] PASS — {detail}")


def test_a1_homography_exactness(rng):
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        pairs = list(zip(random_quad(rng), random_quad(rng)))
        h = estimate_homography(pairs)
        worst = max(worst, reprojection_rms(h, pairs))
    assert worst < 1e-9, f"worst 4-point residual {worst:.2e}"

    truth = estimate_homography(
        list(
            zip(
                [(0, 0), (1000, 0), (1000, 1000), (0, 1000)],
                [(31.0, 18.0), (970.0, 45.0), (1005.0, 955.0), (12.0, 980.0)],
            )
        )
    )
    noisy_rms = []
    for _ in range(20):
        src = rng.uniform(0, 1000, size=(12, 2))
        dst = apply_h_many(truth, src) + rng.normal(0, 0.5, size=(12, 2))
        fitted = estimate_homography(list(zip(src, dst)))
        noisy_rms.append(reprojection_rms(fitted, list(zip(src, dst))))
    elapsed = time.perf_counter() - t0
    assert max(noisy_rms) <= 1.0, f"noisy 12-point RMS {max(noisy_rms):.3f}"
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    ok(
        "A1",
        f"1000 exact fits worst residual {worst:.1e}; noisy RMS max "
        f"{max(noisy_rms):.2f} px; {elapsed:.1f}s",
    )


def test_a2_warp_fidelity(rng):
    img = Raster(rng.integers(0, 256, size=(120, 160, 3), dtype=np.uint8))
    assert warp_perspective(img, Homography.identity(), 160, 120) == img

    shifted = warp_perspective(img, Homography.translation(10, 5), 160, 120, fill=(0, 0, 0))
    direct = np.zeros((120, 160, 3), dtype=np.uint8)
    direct[5:, 10:] = img.pixels[:-5, :-10]
    assert np.array_equal(shifted.pixels, direct)

    grad = gradient_raster(160, 120)
    h = estimate_homography(
        list(
            zip(
                [(0, 0), (160, 0), (160, 120), (0, 120)],
                [(6.0, 4.0), (152.0, 9.0), (149.0, 112.0), (10.0, 117.0)],
            )
        )
    )
    back = warp_perspective(warp_perspective(grad, h, 160, 120), invert_h(h), 160, 120)
    interior = slice(20, 100), slice(20, 140)
    err = np.abs(
        back.pixels[interior].astype(np.float64) - grad.pixels[interior].astype(np.float64)
    )
    assert err.mean() <= 3.0, f"round-trip mean abs error {err.mean():.2f}"
    ok("A2", f"identity/translation bit-exact; round-trip interior error {err.mean():.2f}/255")


def test_a3_recall_alignment(tmp_path):
    t0 = time.perf_counter()
    scene = make_scene()
    state = ingest_capture(SessionState(), scene.camera_frame, scene.profile, tmp_path)
    frame = render_frame(state, scene.profile, *PROJ_SIZE, ImageStore(tmp_path))
    worst = 0.0
    for mm in CROSS_CENTERS_MM:
        truth = apply_h(scene.h_board_to_proj, mm)
        got = intensity_centroid(frame.pixels, truth.x, truth.y, radius=26)
        assert got is not None, f"cross at {mm} not found near ({truth.x:.0f}, {truth.y:.0f})"
        worst = max(worst, math.hypot(got[0] - truth.x, got[1] - truth.y))
    elapsed = time.perf_counter() - t0
    assert worst <= 1.0, f"worst cross offset {worst:.3f} px"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    ok("A3", f"5 crosses within {worst:.3f} px of truth after capture→rectify→recall; {elapsed:.1f}s")


def test_a4_grid_geometry():
    spec0 = GridSpec(spacing=100.0)
    assert len(grid_points(spec0, 800.0, 600.0)) == 63

    prof = CalibrationProfile(
        Homography.identity(),
        Homography(
            [[1.45, 0.03, 25.0], [-0.02, 1.52, 38.0], [2e-5, -1e-5, 1.0]]
        ),
        800.0,
        600.0,
        0.0,
    )
    spec = GridSpec(spacing=100.0, rotation=30.0)
    centers = grid_dot_centers_px(spec, prof)
    assert len(centers) > 10
    back = invert_h(prof.h_board_to_proj)
    t = math.radians(30.0)
    c, s = math.cos(t), math.sin(t)
    worst = 0.0
    for center in centers:
        p = apply_h(back, center)
        u = c * p.x + s * p.y
        v = -s * p.x + c * p.y
        du = u - 100.0 * round(u / 100.0)
        dv = v - 100.0 * round(v / 100.0)
        worst = max(worst, math.hypot(du, dv))
    assert worst < 0.1, f"worst lattice distance {worst:.4f} mm"
    ok("A4", f"63 dots orthogonal; {len(centers)} rotated dots back-project within {worst:.1e} mm")


def test_a5_protocol_robustness(rng):
    # round-trip law at the payload boundaries
    sequence = all_boundary_commands()
    stream = b"".join(encode_frame(c) for c in sequence)
    commands, errors, rest = decode_stream(stream)
    assert commands == sequence and errors == [] and rest == b""

    # 1e6 bytes of fuzz, chunked like a serial stream: no fault, nothing lost
    blob = rng.integers(0, 256, size=1_000_000, dtype=np.uint8).tobytes()
    consumed = 0
    buf = b""
    for i in range(0, len(blob), 4096):
        before = len(buf) + len(blob[i : i + 4096])
        _, _, buf = decode_stream(buf + blob[i : i + 4096])
        consumed += before - len(buf)
        assert len(buf) <= 5  # longest prefix of an incomplete frame
    assert consumed + len(buf) == len(blob)

    # corruption sweep: every byte of every frame type
    follower = encode_frame(Command(CommandKind.TOGGLE_GRID))
    for cmd in all_boundary_commands():
        frame = bytearray(encode_frame(cmd))
        for pos in range(len(frame)):
            mutated = bytearray(frame)
            mutated[pos] = corrupt_byte(mutated[pos])
            commands, errors, rest = decode_stream(bytes(mutated) + follower)
            assert commands == [Command(CommandKind.TOGGLE_GRID)], (cmd, pos)
            assert rest == b""
            if pos == 0:
                # a corrupted start byte demotes the frame to silent junk
                assert len(errors) <= 1, (cmd, pos)
            else:
                assert len(errors) == 1, (cmd, pos, errors)
    ok("A5", "round-trip exact; 1e6-byte fuzz clean; corruption sweep isolated per frame")


def test_a6_session_model_check(rng, tmp_path):
    states = all_states()
    commands = all_command_instances()
    checked = 0
    for s in states:
        for c in commands:
            s1, _ = dispatch(s, c)
            check_invariants(s1)
            checked += 1
    assert checked > 5000

    for i in range(50):
        d = tmp_path / f"s{i:02d}"
        state = make_rich_state(rng, d)
        persist(state, d)
        assert load(d) == state
    ok("A6", f"{checked} dispatches invariant-safe; 50 randomized persist∘load identities")


def test_a7_render_budget(rng, tmp_path):
    prof = CalibrationProfile.identity(1280, 720)
    frame = Raster(rng.integers(0, 256, size=(720, 1280, 3), dtype=np.uint8))
    state = ingest_capture(SessionState(), frame, prof, tmp_path)
    state = replace(state, grid=GridSpec(spacing=100.0, enabled=True))
    store = ImageStore(tmp_path)
    render_frame(state, prof, 1280, 720, store)  # JIT warm-up excluded
    times = []
    for _ in range(100):
        t0 = time.perf_counter()
        render_frame(state, prof, 1280, 720, store)
        times.append((time.perf_counter() - t0) * 1000.0)
    median = sorted(times)[50]
    assert median < 50.0, f"median {median:.1f} ms"
    ok("A7", f"1280x720 image+grid render median {median:.1f} ms over 100 runs")


def test_a8_cli_golden_images(tmp_path):
    out_render = tmp_path / "empty.ppm"
    code = cli_main(
        [
            "render",
            "--session",
            str(tmp_path / "fresh"),
            "--out",
            str(out_render),
            "--resolution",
            "160x120",
        ]
    )
    assert code == 0
    assert out_render.read_bytes() == (GOLDEN / "render_empty_160x120.ppm").read_bytes()

    out_grid = tmp_path / "grid.ppm"
    code = cli_main(["grid", "--spacing", "50", "--board", "400x300", "--out", str(out_grid)])
    assert code == 0
    assert out_grid.read_bytes() == (GOLDEN / "grid_400x300_s50.ppm").read_bytes()

    img = read_ppm(out_grid)
    lit = int((img.pixels[..., 0] > 0).sum())
    ok("A8", f"render+grid bit-exact against goldens ({lit} lit px in grid fixture)")
