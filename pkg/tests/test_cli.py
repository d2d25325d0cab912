"""Headless CLI: render/grid golden images, calibrate round trip, exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from abb.cli import main
from abb.geometry import load_profile
from abb.raster import read_ppm
from abb.session import SessionState, persist

GOLDEN = Path(__file__).parent / "golden"


class TestRenderCommand:
    def test_fresh_empty_session_renders_black(self, tmp_path):
        out = tmp_path / "frame.ppm"
        code = main(
            ["render", "--session", str(tmp_path / "s"), "--out", str(out), "--resolution", "160x120"]
        )
        assert code == 0
        img = read_ppm(out)
        assert (img.width, img.height) == (160, 120)
        assert np.all(img.pixels == 0)

    def test_empty_render_matches_golden(self, tmp_path):
        out = tmp_path / "frame.ppm"
        assert (
            main(
                [
                    "render",
                    "--session",
                    str(tmp_path / "s"),
                    "--out",
                    str(out),
                    "--resolution",
                    "160x120",
                ]
            )
            == 0
        )
        assert out.read_bytes() == (GOLDEN / "render_empty_160x120.ppm").read_bytes()

    def test_index_out_of_range_fails(self, tmp_path, capsys):
        session_dir = tmp_path / "s"
        persist(SessionState(), session_dir)
        code = main(
            ["render", "--session", str(session_dir), "--out", str(tmp_path / "x.ppm"), "--index", "3"]
        )
        assert code == 1
        assert "out of range" in capsys.readouterr().err


class TestGridCommand:
    def test_grid_golden_bit_exact(self, tmp_path):
        out = tmp_path / "grid.ppm"
        code = main(
            ["grid", "--spacing", "50", "--board", "400x300", "--out", str(out)]
        )
        assert code == 0
        assert out.read_bytes() == (GOLDEN / "grid_400x300_s50.ppm").read_bytes()

    def test_grid_dot_count_and_positions(self, tmp_path):
        out = tmp_path / "grid.ppm"
        main(["grid", "--spacing", "50", "--board", "400x300", "--out", str(out)])
        img = read_ppm(out)
        # 9 x 7 lattice positions must be lit (identity board->projector map)
        for x in range(0, 401, 50):
            for y in range(0, 301, 50):
                px, py = min(x, 399), min(y, 299)
                assert img.pixels[py, px, 0] == 255, (x, y)

    def test_rotated_grid_runs(self, tmp_path):
        out = tmp_path / "rot.png"
        code = main(
            ["grid", "--spacing", "60", "--rotation", "30", "--board", "400x300", "--out", str(out)]
        )
        assert code == 0
        assert out.exists()


class TestCalibrateCommand:
    def test_from_points_writes_profile(self, tmp_path):
        doc = {
            "board_mm": [800, 600],
            "board_corners": [[0, 0], [800, 0], [800, 600], [0, 600]],
            "proj_markers": [[160, 90], [1120, 90], [1120, 630], [160, 630]],
            "markers": [[160, 90], [1120, 90], [1120, 630], [160, 630]],
        }
        points = tmp_path / "points.json"
        points.write_text(json.dumps(doc))
        out = tmp_path / "profile.json"
        code = main(["calibrate", "--from-points", str(points), "--out", str(out)])
        assert code == 0
        prof = load_profile(out)
        assert prof.board_w == 800 and prof.residual_rms < 1e-6

    def test_degenerate_points_fail_cleanly(self, tmp_path, capsys):
        doc = {
            "board_mm": [800, 600],
            "board_corners": [[0, 0], [1, 1], [2, 2], [3, 3]],
            "proj_markers": [[0, 0], [1, 0], [1, 1], [0, 1]],
            "markers": [[0, 0], [1, 0], [1, 1], [0, 1]],
        }
        points = tmp_path / "points.json"
        points.write_text(json.dumps(doc))
        code = main(["calibrate", "--from-points", str(points), "--out", str(tmp_path / "p.json")])
        assert code == 1
        assert capsys.readouterr().err.startswith("abb calibrate:")


class TestUsage:
    def test_unknown_flag_exits_2(self):
        result = subprocess.run(
            [sys.executable, "-m", "abb", "grid", "--wat"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 2
        assert "usage" in result.stderr.lower()

    def test_help_exits_0(self):
        result = subprocess.run(
            [sys.executable, "-m", "abb", "--help"], capture_output=True, text=True
        )
        assert result.returncode == 0
        assert "serve" in result.stdout and "calibrate" in result.stdout

    def test_render_subprocess_round_trip(self, tmp_path):
        out = tmp_path / "f.ppm"
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "abb",
                "render",
                "--session",
                str(tmp_path / "s"),
                "--out",
                str(out),
                "--resolution",
                "80x60",
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert read_ppm(out).width == 80
