"""The running system: capture sources, display sinks, projector rendering,
and the coordinator that ties remote commands to session transitions.

Concurrency model: transport readers (WebSocket, serial, keyboard) push onto
one ordered queue; a single coordinator thread owns the session and
calibration state, executes effects, renders, and broadcasts immutable
snapshots to sinks and subscribers.
"""

from __future__ import annotations

import asyncio
import io
import json
import logging
import os
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from PIL import Image

from . import geometry, protocol, session
from .geometry import CalibrationProfile, Homography, Point2, compose_h, warp_perspective
from .overlay import prepare_reference, render_reference_grid
from .raster import Raster, adjust_levels, crop, load_image, rotate_quarter, save_image
from .session import Mode, SessionState

logger = logging.getLogger("abb.service")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

DEFAULT_RESOLUTION = (1280, 720)
CAPTURE_RESOLUTION = (1920, 1080)  # Full HD default of the reference camera

# Calibration markers are projected at this inset from each frame corner.
MARKER_INSET = 0.125


def configure_logging(level: str | None = None) -> None:
    """Set the package log level from the argument or the ABB_LOG env var."""
    name = (level or os.environ.get("ABB_LOG") or "info").lower()
    if name not in LOG_LEVELS:
        raise ValueError(f"log level must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(format="%(asctime)s %(name)s %(levelname)s %(message)s")
    logging.getLogger("abb").setLevel(LOG_LEVELS[name])


# --- capture sources ----------------------------------------------------------


class CaptureError(RuntimeError):
    """No frame could be produced."""


class DirectoryCaptureSource:
    """Replays image files from a directory in filename order, wrapping around.

    The deterministic stand-in for a tethered camera; each read() is the next
    'photo'.
    """

    def __init__(self, directory):
        self._dir = Path(directory)
        if not self._dir.is_dir():
            raise CaptureError(f"capture directory {self._dir} does not exist")
        self._files = sorted(
            p for p in self._dir.iterdir() if p.suffix.lower() in (".png", ".ppm")
        )
        if not self._files:
            raise CaptureError(f"capture directory {self._dir} holds no .png/.ppm frames")
        self._next = 0

    def read(self) -> Raster:
        path = self._files[self._next % len(self._files)]
        self._next += 1
        return load_image(path)


# Registry for live camera backends; acceptance runs hardware-free.
DEVICE_FACTORIES: dict[str, object] = {}


def make_capture_source(spec: str):
    """Build a source from 'dir:<path>' or 'device:<id>'."""
    kind, _, arg = spec.partition(":")
    if kind == "dir" and arg:
        return DirectoryCaptureSource(arg)
    if kind == "device":
        factory = DEVICE_FACTORIES.get(arg)
        if factory is None:
            raise CaptureError(
                f"no camera backend registered for device {arg!r}; "
                f"register one in abb.service.DEVICE_FACTORIES"
            )
        return factory()
    raise ValueError(f"capture source must be dir:<path> or device:<id>, got {spec!r}")


# --- display sinks --------------------------------------------------------------


class FileDisplaySink:
    """Writes every projector frame as numbered PPM (bit-exact) + PNG pairs."""

    def __init__(self, directory):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._n = 0

    def publish(self, frame: Raster) -> None:
        stem = self._dir / f"frame_{self._n:06d}"
        save_image(frame, stem.with_suffix(".ppm"))
        save_image(frame, stem.with_suffix(".png"))
        self._n += 1

    def close(self) -> None:
        pass


class WindowDisplaySink:
    """Fullscreen-ish window on a secondary screen via matplotlib, if available."""

    def __init__(self, screen: int = 0):
        try:
            import matplotlib.pyplot as plt
        except ImportError as e:  # pragma: no cover - optional path
            raise RuntimeError("window display needs matplotlib installed") from e
        self._plt = plt
        self._screen = screen
        self._image = None

    def publish(self, frame: Raster) -> None:  # pragma: no cover - needs a display
        if self._image is None:
            fig = self._plt.figure(f"projector {self._screen}")
            ax = fig.add_axes([0, 0, 1, 1])
            ax.set_axis_off()
            self._image = ax.imshow(frame.pixels)
            self._plt.show(block=False)
        else:
            self._image.set_data(frame.pixels)
        self._plt.pause(0.001)

    def close(self) -> None:  # pragma: no cover
        self._plt.close("all")


def make_display_sink(spec: str):
    """Build a sink from 'file:<dir>' or 'window:<n>'."""
    kind, _, arg = spec.partition(":")
    if kind == "file" and arg:
        return FileDisplaySink(arg)
    if kind == "window":
        return WindowDisplaySink(int(arg or 0))
    raise ValueError(f"display sink must be file:<dir> or window:<n>, got {spec!r}")


# --- image store ---------------------------------------------------------------


class ImageStore:
    """Lazy, cached loader for session image files, keyed by record id."""

    def __init__(self, session_dir):
        self._dir = Path(session_dir)
        self._cache: dict[str, Raster] = {}

    def get(self, record: session.ImageRecord) -> Raster:
        img = self._cache.get(record.id)
        if img is None:
            img = load_image(self._dir / record.file)
            self._cache[record.id] = img
        return img

    def drop(self, record_id: str) -> None:
        self._cache.pop(record_id, None)


# --- rendering -------------------------------------------------------------------


def _view_homography(adj: session.Adjustments, iw: int, ih: int) -> Homography:
    """Zoom about the image center, then pan, in image pixel units."""
    z = adj.zoom
    cx, cy = (iw - 1) / 2.0, (ih - 1) / 2.0
    zoom = Homography([[z, 0.0, cx * (1.0 - z)], [0.0, z, cy * (1.0 - z)], [0.0, 0.0, 1.0]])
    if adj.pan == (0.0, 0.0):
        return zoom
    return compose_h(Homography.translation(adj.pan[0], adj.pan[1]), zoom)


def _fit_to_board(iw: int, ih: int, board_w: float, board_h: float) -> Homography:
    """Uniform scale centering the image on the board (letterbox, mm units).

    A rectified capture covers the board exactly, so its pixels land back on
    their source mm positions; arbitrary imports are fitted without
    distortion.
    """
    k = min(board_w / iw, board_h / ih)
    ox = (board_w - k * iw) / 2.0
    oy = (board_h - k * ih) / 2.0
    return Homography([[k, 0.0, ox], [0.0, k, oy], [0.0, 0.0, 1.0]])


def _render_image_layer(
    img: Raster, adj: session.Adjustments, prof: CalibrationProfile, out_w: int, out_h: int
) -> Raster:
    work = adjust_levels(img, adj.levels)
    work = rotate_quarter(work, adj.quarter_turns)
    if adj.crop is not None:
        work = crop(work, adj.crop)
    h = compose_h(
        prof.h_board_to_proj,
        compose_h(
            _fit_to_board(work.width, work.height, prof.board_w, prof.board_h),
            _view_homography(adj, work.width, work.height),
        ),
    )
    return warp_perspective(work, h, out_w, out_h)


class _ChalkAccumulator:
    """Folds blend_chalk layers in uint16 with one final clamp.

    Bit-identical to chained blend_chalk calls: contributions are
    non-negative, so iterated clamping equals a single clamp of the sum.
    """

    def __init__(self, out_w: int, out_h: int):
        self._w, self._h = out_w, out_h
        self._acc: np.ndarray | None = None

    def add(self, layer: Raster, opacity: float) -> None:
        if (layer.width, layer.height) != (self._w, self._h):
            raise ValueError("layer size does not match the frame")
        if opacity == 1.0:
            contrib = layer.pixels.astype(np.uint16)
        else:
            lut = np.floor(opacity * np.arange(256, dtype=np.float64) + 0.5).astype(np.uint16)
            contrib = lut[layer.pixels]
        self._acc = contrib if self._acc is None else self._acc + contrib

    def frame(self) -> Raster:
        if self._acc is None:
            return Raster.full(self._w, self._h)
        return Raster(np.minimum(self._acc, 255).astype(np.uint8))


def render_frame(
    state: SessionState,
    prof: CalibrationProfile,
    out_w: int,
    out_h: int,
    images: ImageStore | None = None,
) -> Raster:
    """Compose the projector frame: image layer, reference layers, then grid.

    Deterministic for identical inputs. A layer that fails to render is
    logged and skipped rather than blanking the frame.
    """
    acc = _ChalkAccumulator(out_w, out_h)

    record = None
    if state.mode != Mode.BLANK:
        if state.recall_target is not None:
            record = state.record_by_id(state.recall_target)
        else:
            record = state.current()
    if record is not None and images is not None:
        try:
            layer = _render_image_layer(images.get(record), record.adjustments, prof, out_w, out_h)
            acc.add(layer, 1.0)
        except Exception as e:
            logger.warning("image layer %s skipped: %s", record.id, e)

    for i, ref in enumerate(state.references):
        if not ref.enabled:
            continue
        try:
            src = prepare_reference(ref.source, ref.polarity)
            warped = warp_perspective(
                src, compose_h(prof.h_board_to_proj, ref.placement), out_w, out_h
            )
            acc.add(warped, ref.opacity)
        except Exception as e:
            logger.warning("reference layer %d skipped: %s", i, e)

    if state.grid.enabled:
        acc.add(render_reference_grid(state.grid, prof, out_w, out_h), 1.0)
    return acc.frame()


def marker_positions(out_w: int, out_h: int) -> list[Point2]:
    """Projector positions of the four calibration dots, corner order TL TR BR BL."""
    x0, x1 = MARKER_INSET * out_w, (1.0 - MARKER_INSET) * out_w
    y0, y1 = MARKER_INSET * out_h, (1.0 - MARKER_INSET) * out_h
    return [Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)]


def render_marker_frame(out_w: int, out_h: int, radius: int = 6) -> Raster:
    """Black frame with the four calibration dots."""
    canvas = np.zeros((out_h, out_w, 3), dtype=np.uint8)
    for p in marker_positions(out_w, out_h):
        ys, xs = np.mgrid[0:out_h, 0:out_w]  # small frames only; dots are few
        canvas[(xs - p.x) ** 2 + (ys - p.y) ** 2 <= radius**2] = 255
    return Raster(canvas)


# --- coordinator ------------------------------------------------------------------


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8765"
    serial: str | None = None
    session_dir: str = "session"
    camera: str | None = None
    display: str | None = None
    resolution: tuple[int, int] = DEFAULT_RESOLUTION
    px_per_mm: float = 1.0
    calibration: str | None = None
    static_dir: str | None = None
    log_level: str | None = None

    def __post_init__(self):
        if self.resolution[0] < 1 or self.resolution[1] < 1:
            raise ValueError(f"projector resolution must be >= 1x1, got {self.resolution}")
        if self.px_per_mm <= 0:
            raise ValueError(f"px_per_mm must be positive, got {self.px_per_mm}")

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    @property
    def calibration_path(self) -> Path:
        if self.calibration:
            return Path(self.calibration)
        return Path(self.session_dir) / "calibration.json"


def load_config_file(path) -> dict:
    """Read a TOML or JSON config file mirroring the CLI flags."""
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(raw)
    try:
        import tomllib  # py311+
    except ImportError:
        import tomli as tomllib
    return tomllib.loads(raw.decode())


class Coordinator:
    """Single owner of session + calibration state.

    Transports call submit(); the processing loop (run() on a thread, or
    step() called directly in tests) dispatches commands, executes effects,
    renders, and broadcasts events.
    """

    _CLOSE = object()

    def __init__(
        self,
        state: SessionState,
        prof: CalibrationProfile,
        session_dir,
        resolution: tuple[int, int] = DEFAULT_RESOLUTION,
        px_per_mm: float = 1.0,
        capture_source=None,
        sinks: tuple = (),
        calibration_path=None,
    ):
        self._state = state
        self._prof = prof
        self._session_dir = Path(session_dir)
        self._out_w, self._out_h = resolution
        self._px_per_mm = px_per_mm
        self._capture = capture_source
        self._sinks = list(sinks)
        self._calibration_path = Path(calibration_path) if calibration_path else None
        self._images = ImageStore(session_dir)
        self._queue: queue.Queue = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._subs_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._calibrating = False
        self._preview_frame: Raster | None = None

    # -- state access (immutable snapshots) --

    @property
    def state(self) -> SessionState:
        return self._state

    @property
    def profile(self) -> CalibrationProfile:
        return self._prof

    @property
    def preview_frame(self) -> Raster | None:
        return self._preview_frame

    # -- transport side --

    def submit(self, cmd: protocol.Command) -> None:
        self._queue.put(("command", cmd))

    def submit_calibration(self, points: protocol.CalibrationPoints) -> None:
        self._queue.put(("calibrate", points))

    def subscribe(self, maxsize: int = 256) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=maxsize)
        with self._subs_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subs_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)
        q.put((None, self._CLOSE))  # wake any blocked reader

    def _broadcast(self, kind: str, payload) -> None:
        with self._subs_lock:
            subs = list(self._subscribers)
        for q in subs:
            try:
                q.put_nowait((kind, payload))
            except queue.Full:
                try:  # drop the oldest item for a slow client
                    q.get_nowait()
                    q.put_nowait((kind, payload))
                except (queue.Empty, queue.Full):
                    pass

    # -- processing side --

    def step(self, timeout: float | None = None) -> bool:
        """Process one queued item; returns False on timeout/empty queue."""
        try:
            item = self._queue.get(timeout=timeout) if timeout else self._queue.get_nowait()
        except queue.Empty:
            return False
        self._process(item)
        return True

    def drain(self) -> int:
        """Process everything queued right now (test/CLI convenience)."""
        n = 0
        while self.step():
            n += 1
        return n

    def run(self) -> None:
        while not self._stop.is_set():
            self.step(timeout=0.1)

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run, name="abb-coordinator", daemon=True)
        self._thread.start()

    def stop(self, persist: bool = True) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        if persist:
            try:
                session.persist(self._state, self._session_dir)
            except OSError as e:
                logger.error("session persist on shutdown failed: %s", e)
        for sink in self._sinks:
            sink.close()

    def _process(self, item) -> None:
        kind, payload = item
        if kind == "command":
            self._handle_command(payload)
        elif kind == "calibrate":
            self._handle_calibration(payload)
        else:  # pragma: no cover
            logger.error("unknown queue item %r", kind)

    def _handle_command(self, cmd: protocol.Command) -> None:
        new_state, effects = session.dispatch(self._state, cmd)
        self._state = new_state
        need_render = False
        for eff in effects:
            if isinstance(eff, session.RenderRequested):
                need_render = True
            elif isinstance(eff, session.CaptureRequested):
                need_render |= self._do_capture()
            elif isinstance(eff, session.PersistRequested):
                self._do_persist()
            elif isinstance(eff, session.StartCalibrationRequested):
                self._enter_calibration()
            elif isinstance(eff, session.ErrorEffect):
                self._broadcast("error", protocol.json_error_event(eff.code, eff.message))
        if need_render:
            self._calibrating = False
            self._render_and_publish()
        self._publish_state()

    def _do_capture(self) -> bool:
        if self._capture is None:
            self._broadcast(
                "error", protocol.json_error_event("no_capture_source", "no camera configured")
            )
            return False
        try:
            frame = self._capture.read()
            self._preview_frame = frame
            self._state = session.ingest_capture(
                self._state, frame, self._prof, self._session_dir, self._px_per_mm
            )
            self._do_persist()
            return True
        except Exception as e:
            logger.error("capture failed: %s", e)
            self._broadcast("error", protocol.json_error_event("capture_failed", str(e)))
            return False

    def _do_persist(self) -> None:
        try:
            session.persist(self._state, self._session_dir)
        except OSError as e:
            logger.error("persist failed: %s", e)
            self._broadcast("error", protocol.json_error_event("persist_failed", str(e)))

    def _enter_calibration(self) -> None:
        self._calibrating = True
        if self._capture is not None:
            try:
                self._preview_frame = self._capture.read()
            except Exception as e:
                logger.warning("calibration preview capture failed: %s", e)
        markers = [[p.x, p.y] for p in marker_positions(self._out_w, self._out_h)]
        self._publish_frame(render_marker_frame(self._out_w, self._out_h))
        self._broadcast(
            "calibration_markers",
            json.dumps({"event": "calibration_markers", "points": markers}),
        )

    def _handle_calibration(self, points: protocol.CalibrationPoints) -> None:
        try:
            prof = geometry.calibrate(
                proj_markers=marker_positions(self._out_w, self._out_h),
                cam_observations=points.markers,
                board_corners_cam=points.board_corners,
                board_w=points.board_mm[0],
                board_h=points.board_mm[1],
            )
        except (geometry.CalibrationRejected, geometry.Degenerate, ValueError) as e:
            self._broadcast(
                "calibration", protocol.json_calibration_event(False, None, str(e))
            )
            return
        self._prof = prof
        self._calibrating = False
        if self._calibration_path is not None:
            try:
                self._calibration_path.parent.mkdir(parents=True, exist_ok=True)
                geometry.save_profile(prof, self._calibration_path)
            except OSError as e:
                logger.error("could not save calibration: %s", e)
        self._broadcast("calibration", protocol.json_calibration_event(True, prof.residual_rms))
        self._render_and_publish()
        self._publish_state()

    def _render_and_publish(self) -> None:
        try:
            frame = render_frame(self._state, self._prof, self._out_w, self._out_h, self._images)
        except Exception as e:
            logger.error("render failed: %s", e)
            self._broadcast("error", protocol.json_error_event("render_failed", str(e)))
            return
        self._publish_frame(frame)

    def _publish_frame(self, frame: Raster) -> None:
        for sink in self._sinks:
            try:
                sink.publish(frame)
            except Exception as e:
                logger.error("display sink failed: %s", e)
        with self._subs_lock:
            wants_frames = bool(self._subscribers)
        if wants_frames:
            buf = io.BytesIO()
            Image.fromarray(frame.pixels, mode="RGB").save(buf, format="PNG")
            self._broadcast("frame", buf.getvalue())

    def _publish_state(self) -> None:
        s = self._state
        self._broadcast(
            "state",
            protocol.json_event(
                mode=s.mode.value,
                view=s.view.value,
                cursor=s.cursor,
                count=len(s.filtered()),
                grid=s.grid.enabled,
            ),
        )

    def state_event_text(self) -> str:
        s = self._state
        return protocol.json_event(
            mode=s.mode.value,
            view=s.view.value,
            cursor=s.cursor,
            count=len(s.filtered()),
            grid=s.grid.enabled,
        )


# --- keyboard front-end -------------------------------------------------------------

KEY_COMMANDS = {
    "n": protocol.Command(protocol.CommandKind.NEXT),
    "p": protocol.Command(protocol.CommandKind.PREV),
    "c": protocol.Command(protocol.CommandKind.CAPTURE),
    "x": protocol.Command(protocol.CommandKind.DELETE),
    "g": protocol.Command(protocol.CommandKind.TOGGLE_GRID),
    "s": protocol.Command(protocol.CommandKind.TOGGLE_SOURCE),
    "+": protocol.Command(protocol.CommandKind.BRIGHTNESS, 10),
    "-": protocol.Command(protocol.CommandKind.BRIGHTNESS, -10),
    ">": protocol.Command(protocol.CommandKind.CONTRAST, 10),
    "<": protocol.Command(protocol.CommandKind.CONTRAST, -10),
    "r": protocol.Command(protocol.CommandKind.ROTATE_STEP),
    "z": protocol.Command(protocol.CommandKind.ZOOM_STEP, 1),
    "Z": protocol.Command(protocol.CommandKind.ZOOM_STEP, -1),
    "k": protocol.Command(protocol.CommandKind.START_CALIBRATION),
    "b": protocol.Command(protocol.CommandKind.BLANK),
}


def command_for_key(key: str) -> protocol.Command | None:
    """Keyboard mapping; keys feed the same reducer as remote commands."""
    return KEY_COMMANDS.get(key)


def keyboard_reader(coordinator: Coordinator, stream, stop: threading.Event) -> None:
    """Read single-character commands from a text stream (e.g. a TTY)."""
    for line in stream:
        if stop.is_set():
            break
        for ch in line.strip():
            cmd = command_for_key(ch)
            if cmd is not None:
                coordinator.submit(cmd)


# --- serial transport ----------------------------------------------------------------


def serial_reader(coordinator: Coordinator, path, stop: threading.Event) -> None:
    """Feed bytes from a serial device or FIFO through the frame decoder.

    Reopens on EOF so a loopback pipe can be driven by successive writers.
    """
    buf = b""
    while not stop.is_set():
        try:
            with open(path, "rb", buffering=0) as f:
                while not stop.is_set():
                    chunk = f.read(4096)
                    if not chunk:
                        break  # writer closed; reopen
                    commands, errors, buf = protocol.decode_stream(buf + chunk)
                    for err in errors:
                        logger.warning("serial frame error: %s at %d (%s)", err.kind.value, err.offset, err.detail)
                    for cmd in commands:
                        coordinator.submit(cmd)
        except OSError as e:
            logger.error("serial %s: %s", path, e)
            if stop.wait(1.0):
                return
        if not stop.is_set():
            time.sleep(0.05)


# --- websocket / http app --------------------------------------------------------------


def create_app(coordinator: Coordinator, static_dir=None):
    """FastAPI app exposing /control (WebSocket), /preview and /calibration."""
    app = FastAPI(title="augmented-blackboard")

    @app.websocket("/control")
    async def control(ws: WebSocket, preview: bool = False):
        await ws.accept()
        sub = coordinator.subscribe()
        await ws.send_text(coordinator.state_event_text())

        async def pump():
            while True:
                kind, payload = await asyncio.to_thread(sub.get)
                if payload is Coordinator._CLOSE:
                    return
                if kind == "frame":
                    if preview:
                        await ws.send_bytes(payload)
                else:
                    await ws.send_text(payload)

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = protocol.decode_client_message(text)
                except (
                    protocol.MalformedJson,
                    protocol.UnknownCommand,
                    protocol.PayloadOutOfRange,
                ) as e:
                    await ws.send_text(
                        protocol.json_error_event(type(e).__name__.lower(), str(e))
                    )
                    continue
                if isinstance(msg, protocol.CalibrationPoints):
                    coordinator.submit_calibration(msg)
                else:
                    coordinator.submit(msg)
        except WebSocketDisconnect:
            pass
        finally:
            coordinator.unsubscribe(sub)
            try:
                await asyncio.wait_for(pump_task, timeout=2.0)
            except (asyncio.TimeoutError, asyncio.CancelledError, Exception):
                pump_task.cancel()

    @app.get("/preview")
    def preview_image():
        frame = coordinator.preview_frame
        if frame is None:
            return JSONResponse({"error": "no preview frame captured yet"}, status_code=404)
        buf = io.BytesIO()
        Image.fromarray(frame.pixels, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/calibration")
    def calibration_profile():
        prof = coordinator.profile
        return {
            "version": geometry.PROFILE_VERSION,
            "board_mm": [prof.board_w, prof.board_h],
            "h_cam_to_board": [float(v) for v in prof.h_cam_to_board.normalized().reshape(-1)],
            "h_board_to_proj": [float(v) for v in prof.h_board_to_proj.normalized().reshape(-1)],
            "residual_rms": prof.residual_rms,
        }

    @app.get("/markers")
    def calibration_markers():
        return {"points": [[p.x, p.y] for p in marker_positions(coordinator._out_w, coordinator._out_h)]}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


# --- top-level service ---------------------------------------------------------------


def build_coordinator(config: ServiceConfig) -> Coordinator:
    """Assemble session, calibration, source and sinks from a config."""
    session_dir = Path(config.session_dir)
    if (session_dir / session.MANIFEST_NAME).is_file():
        state = session.load(session_dir)
    else:
        state = SessionState()
        session_dir.mkdir(parents=True, exist_ok=True)

    if config.calibration_path.is_file():
        prof = geometry.load_profile(config.calibration_path)
    else:
        # identity calibration: board mm == projector px until calibrated
        prof = CalibrationProfile.identity(*config.resolution)

    source = make_capture_source(config.camera) if config.camera else None
    sinks = (make_display_sink(config.display),) if config.display else ()
    return Coordinator(
        state,
        prof,
        session_dir,
        resolution=config.resolution,
        px_per_mm=config.px_per_mm,
        capture_source=source,
        sinks=sinks,
        calibration_path=config.calibration_path,
    )


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted; persists the session on the way out."""
    import sys

    import uvicorn

    configure_logging(config.log_level)
    coordinator = build_coordinator(config)
    coordinator.start()

    stop = threading.Event()
    threads = []
    if config.serial:
        t = threading.Thread(
            target=serial_reader, args=(coordinator, config.serial, stop),
            name="abb-serial", daemon=True,
        )
        t.start()
        threads.append(t)
    if sys.stdin is not None and sys.stdin.isatty():
        t = threading.Thread(
            target=keyboard_reader, args=(coordinator, sys.stdin, stop),
            name="abb-keyboard", daemon=True,
        )
        t.start()
        threads.append(t)

    app = create_app(coordinator, static_dir=config.static_dir)
    logger.info("augmented blackboard listening on ws://%s/control", config.listen)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        stop.set()
        coordinator.stop(persist=True)
