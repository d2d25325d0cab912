"""Command-line entry points: serve, calibrate, render, grid."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import geometry, service, session
from .geometry import CalibrationProfile
from .overlay import GridSpec, ScaleBar, render_reference_grid
from .raster import save_image
from .service import ImageStore, ServiceConfig, configure_logging, render_frame


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _parse_size_mm(text: str) -> tuple[float, float]:
    try:
        w, h = text.lower().split("x")
        return float(w), float(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _parse_offset(text: str) -> tuple[float, float]:
    try:
        x, y = text.split(",")
        return float(x), float(y)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abb", description="augmented blackboard projection service"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the projection service")
    p_serve.add_argument("--listen", default=None, help="host:port for the WebSocket plane")
    p_serve.add_argument("--serial", default=None, help="serial device or FIFO for binary frames")
    p_serve.add_argument("--session", default=None, help="session directory")
    p_serve.add_argument("--camera", default=None, help="dir:<path> or device:<id>")
    p_serve.add_argument("--display", default=None, help="file:<dir> or window:<n>")
    p_serve.add_argument("--resolution", type=_parse_size, default=None, help="projector WxH px")
    p_serve.add_argument("--px-per-mm", type=float, default=None, help="capture board resolution")
    p_serve.add_argument("--calibration", default=None, help="calibration profile path")
    p_serve.add_argument("--static", default=None, help="directory of remote UI assets to serve")
    p_serve.add_argument("--config", default=None, help="TOML/JSON config file (flags win)")
    p_serve.add_argument("--log-level", default=None, choices=sorted(service.LOG_LEVELS))

    p_cal = sub.add_parser("calibrate", help="fit a calibration profile")
    p_cal.add_argument("--from-points", default=None, help="JSON file with the four point sets")
    p_cal.add_argument("--out", required=True, help="profile path to write")

    p_render = sub.add_parser("render", help="render one projector frame headlessly")
    p_render.add_argument("--session", required=True, help="session directory")
    p_render.add_argument("--out", required=True, help="output image (.ppm or .png)")
    p_render.add_argument("--index", type=int, default=None, help="cursor into the current view")
    p_render.add_argument("--calibration", default=None, help="calibration profile path")
    p_render.add_argument("--resolution", type=_parse_size, default=service.DEFAULT_RESOLUTION)

    p_grid = sub.add_parser("grid", help="render the reference grid headlessly")
    p_grid.add_argument("--spacing", type=float, required=True, help="grid spacing in mm")
    p_grid.add_argument("--rotation", type=float, default=0.0, help="grid rotation in degrees")
    p_grid.add_argument("--board", type=_parse_size_mm, required=True, help="board WxH in mm")
    p_grid.add_argument("--out", required=True, help="output image (.ppm or .png)")
    p_grid.add_argument("--resolution", type=_parse_size, default=None, help="frame WxH px (default board size)")
    p_grid.add_argument("--dot-radius", type=int, default=2)
    p_grid.add_argument("--offset", type=_parse_offset, default=(0.0, 0.0), help="lattice origin offset mm")
    p_grid.add_argument("--calibration", default=None, help="board->projector map (default identity)")
    return parser


def _cmd_serve(args) -> int:
    values = {}
    if args.config:
        values.update(load_config_values(args.config))
    for key, flag in (
        ("listen", args.listen),
        ("serial", args.serial),
        ("session_dir", args.session),
        ("camera", args.camera),
        ("display", args.display),
        ("resolution", args.resolution),
        ("px_per_mm", args.px_per_mm),
        ("calibration", args.calibration),
        ("static_dir", args.static),
        ("log_level", args.log_level),
    ):
        if flag is not None:
            values[key] = flag
    config = ServiceConfig(**values)
    service.serve(config)
    return 0


def load_config_values(path) -> dict:
    doc = service.load_config_file(path)
    allowed = {
        "listen", "serial", "session_dir", "camera", "display", "resolution",
        "px_per_mm", "calibration", "static_dir", "log_level",
    }
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}; valid keys: {sorted(allowed)}")
    if "resolution" in doc and isinstance(doc["resolution"], list):
        doc["resolution"] = tuple(int(v) for v in doc["resolution"])
    return doc


def _read_point_list(doc: dict, key: str) -> list[tuple[float, float]]:
    raw = doc.get(key)
    if not isinstance(raw, list) or len(raw) != 4:
        raise ValueError(f"calibration input needs 4 points under {key!r}")
    return [(float(p[0]), float(p[1])) for p in raw]


def _cmd_calibrate(args) -> int:
    if args.from_points:
        doc = json.loads(Path(args.from_points).read_text())
    else:
        print("Paste the calibration JSON document, then EOF (Ctrl-D):", file=sys.stderr)
        doc = json.loads(sys.stdin.read())
    board_mm = doc.get("board_mm")
    if not isinstance(board_mm, list) or len(board_mm) != 2:
        raise ValueError("calibration input needs board_mm as [w, h]")
    prof = geometry.calibrate(
        proj_markers=_read_point_list(doc, "proj_markers"),
        cam_observations=_read_point_list(doc, "markers"),
        board_corners_cam=_read_point_list(doc, "board_corners"),
        board_w=float(board_mm[0]),
        board_h=float(board_mm[1]),
    )
    geometry.save_profile(prof, args.out)
    print(f"calibration written to {args.out} (residual {prof.residual_rms:.4f} px)")
    return 0


def _load_profile_or_identity(path, resolution) -> CalibrationProfile:
    if path:
        return geometry.load_profile(path)
    return CalibrationProfile.identity(*resolution)


def _cmd_render(args) -> int:
    session_dir = Path(args.session)
    if (session_dir / session.MANIFEST_NAME).is_file():
        state = session.load(session_dir)
    else:
        state = session.SessionState()  # fresh, empty session
    if args.index is not None:
        visible = state.filtered()
        if not 0 <= args.index < len(visible):
            raise ValueError(f"--index {args.index} out of range for {len(visible)} visible images")
        state = session.SessionState(
            mode=state.mode, view=state.view, library=state.library,
            cursor=args.index, grid=state.grid, references=state.references,
        )
    prof = _load_profile_or_identity(args.calibration, args.resolution)
    frame = render_frame(state, prof, *args.resolution, ImageStore(session_dir))
    save_image(frame, args.out)
    return 0


def _cmd_grid(args) -> int:
    board_w, board_h = args.board
    resolution = args.resolution or (round(board_w), round(board_h))
    spec = GridSpec(
        spacing=args.spacing,
        rotation=args.rotation,
        dot_radius=args.dot_radius,
        origin_offset=args.offset,
        scale_bar=ScaleBar(),
        enabled=True,
    )
    if args.calibration:
        prof = geometry.load_profile(args.calibration)
    else:
        prof = CalibrationProfile.identity(board_w, board_h)
    frame = render_reference_grid(spec, prof, *resolution)
    save_image(frame, args.out)
    return 0


_HANDLERS = {
    "serve": _cmd_serve,
    "calibrate": _cmd_calibrate,
    "render": _cmd_render,
    "grid": _cmd_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "log_level", None))
    try:
        return _HANDLERS[args.command](args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:
        print(f"abb {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
