"""Presenter-facing session state: image library, slideshow cursor, overlays.

``dispatch`` is a pure reducer from (state, command) to (state, effects); all
I/O happens in the effects executed by the service coordinator. Persistence
writes a versioned ``manifest.json`` plus lossless PNGs under the session
directory.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .geometry import Degenerate, Homography
from .overlay import GridSpec, Polarity, ReferenceLayer, ScaleBar
from .protocol import Command, CommandKind
from .raster import Levels, Raster, Rect, read_png, write_png
from . import geometry

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
ZOOM_STEP_FACTOR = 1.25


class Mode(str, Enum):
    LIVE = "live"
    SLIDESHOW = "slideshow"
    BLANK = "blank"


class View(str, Enum):
    CAPTURED = "captured"
    FILES = "files"


class Source(str, Enum):
    CAPTURED = "captured"
    IMPORTED = "imported"


class CorruptManifest(ValueError):
    """Manifest is unreadable or violates the v1 schema."""


class UnsupportedVersion(ValueError):
    """Manifest version is not one this build understands."""


class MissingImageFile(FileNotFoundError):
    """Manifest references an image file that is not on disk."""


class WriteFailed(OSError):
    """A capture or manifest could not be written (disk full, permissions)."""


@dataclass(frozen=True)
class Adjustments:
    """Non-destructive view settings stored per image, applied at render time."""

    levels: Levels = field(default_factory=Levels)
    quarter_turns: int = 0
    zoom: float = 1.0
    pan: tuple[float, float] = (0.0, 0.0)
    crop: Rect | None = None

    def __post_init__(self):
        if self.quarter_turns not in (0, 1, 2, 3):
            raise ValueError(f"quarter_turns must be 0..3, got {self.quarter_turns}")
        if self.zoom <= 0:
            raise ValueError(f"zoom must be positive, got {self.zoom}")


@dataclass(frozen=True)
class ImageRecord:
    id: str
    source: Source
    file: str  # relative path inside the session directory
    created_at: str  # ISO-8601 UTC
    adjustments: Adjustments = field(default_factory=Adjustments)


@dataclass(frozen=True)
class SessionState:
    mode: Mode = Mode.SLIDESHOW
    view: View = View.CAPTURED
    library: tuple[ImageRecord, ...] = ()
    cursor: int | None = None
    grid: GridSpec = field(default_factory=lambda: GridSpec(spacing=100.0))
    references: tuple[ReferenceLayer, ...] = ()
    recall_target: str | None = None

    def filtered(self) -> tuple[ImageRecord, ...]:
        """Records visible under the current view filter."""
        wanted = Source.CAPTURED if self.view == View.CAPTURED else Source.IMPORTED
        return tuple(r for r in self.library if r.source == wanted)

    def current(self) -> ImageRecord | None:
        if self.cursor is None:
            return None
        return self.filtered()[self.cursor]

    def record_by_id(self, record_id: str) -> ImageRecord | None:
        for r in self.library:
            if r.id == record_id:
                return r
        return None


def check_invariants(state: SessionState) -> None:
    """Raise AssertionError if the structural invariants are violated."""
    ids = [r.id for r in state.library]
    assert len(ids) == len(set(ids)), "duplicate record ids"
    if state.cursor is not None:
        assert 0 <= state.cursor < len(state.filtered()), (
            f"cursor {state.cursor} out of range for {len(state.filtered())} visible records"
        )
    if state.recall_target is not None:
        assert state.record_by_id(state.recall_target) is not None, "dangling recall target"


# --- effects -----------------------------------------------------------------


@dataclass(frozen=True)
class RenderRequested:
    pass


@dataclass(frozen=True)
class CaptureRequested:
    pass


@dataclass(frozen=True)
class PersistRequested:
    pass


@dataclass(frozen=True)
class StartCalibrationRequested:
    pass


@dataclass(frozen=True)
class ErrorEffect:
    code: str
    message: str


Effect = object  # any of the dataclasses above

_NO_IMAGE = ErrorEffect("no_image", "no image selected in the current view")


def dispatch(state: SessionState, cmd: Command) -> tuple[SessionState, list[Effect]]:
    """Pure state transition; never performs I/O.

    Cursor motion clamps at both ends. Commands that need a selected image
    leave the state unchanged and emit a no_image error effect when the view
    is empty.
    """
    kind = cmd.kind

    if kind in (CommandKind.NEXT, CommandKind.PREV):
        visible = state.filtered()
        if not visible:
            return state, [_NO_IMAGE]
        if state.cursor is None:
            new_cursor = 0
        else:
            step = 1 if kind == CommandKind.NEXT else -1
            new_cursor = min(max(state.cursor + step, 0), len(visible) - 1)
        return replace(state, cursor=new_cursor, recall_target=None), [RenderRequested()]

    if kind == CommandKind.TOGGLE_SOURCE:
        flipped = View.FILES if state.view == View.CAPTURED else View.CAPTURED
        interim = replace(state, view=flipped)
        visible = interim.filtered()
        if not visible:
            cursor = None
        else:
            cursor = min(state.cursor if state.cursor is not None else 0, len(visible) - 1)
        return replace(interim, cursor=cursor, recall_target=None), [RenderRequested()]

    if kind == CommandKind.TOGGLE_GRID:
        grid = replace(state.grid, enabled=not state.grid.enabled)
        return replace(state, grid=grid), [RenderRequested()]

    if kind == CommandKind.BLANK:
        mode = Mode.BLANK if state.mode != Mode.BLANK else Mode.SLIDESHOW
        return replace(state, mode=mode), [RenderRequested()]

    if kind == CommandKind.CAPTURE:
        return state, [CaptureRequested()]

    if kind == CommandKind.START_CALIBRATION:
        return state, [StartCalibrationRequested()]

    if kind == CommandKind.DELETE:
        record = state.current()
        if record is None:
            return state, [_NO_IMAGE]
        library = tuple(r for r in state.library if r.id != record.id)
        interim = replace(state, library=library)
        visible = interim.filtered()
        cursor = None if not visible else min(state.cursor, len(visible) - 1)
        recall = None if state.recall_target == record.id else state.recall_target
        new = replace(interim, cursor=cursor, recall_target=recall)
        return new, [RenderRequested(), PersistRequested()]

    if kind == CommandKind.RECALL:
        if cmd.value >= len(state.library):
            return state, [
                ErrorEffect("no_image", f"recall index {cmd.value} beyond library size")
            ]
        return replace(state, recall_target=state.library[cmd.value].id), [RenderRequested()]

    # remaining commands adjust the current record
    record = state.current()
    if record is None:
        return state, [_NO_IMAGE]
    adj = record.adjustments
    if kind == CommandKind.BRIGHTNESS:
        adj = replace(adj, levels=replace(adj.levels, brightness=adj.levels.brightness + cmd.value))
    elif kind == CommandKind.CONTRAST:
        # contrast floor at 0 per the Levels domain
        adj = replace(
            adj, levels=replace(adj.levels, contrast=max(0.0, adj.levels.contrast + cmd.value / 100.0))
        )
    elif kind == CommandKind.ZOOM_STEP:
        adj = replace(adj, zoom=adj.zoom * ZOOM_STEP_FACTOR**cmd.value)
    elif kind == CommandKind.ROTATE_STEP:
        adj = replace(adj, quarter_turns=(adj.quarter_turns + 1) % 4)
    else:  # pragma: no cover - table is exhaustive
        raise NotImplementedError(kind)
    library = tuple(
        replace(r, adjustments=adj) if r.id == record.id else r for r in state.library
    )
    return replace(state, library=library), [RenderRequested()]


# --- capture / import --------------------------------------------------------


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _store_raster(img: Raster, session_dir, rel: str) -> None:
    path = Path(session_dir) / rel
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_png(img, path)
    except OSError as e:
        raise WriteFailed(f"cannot store {path}: {e}") from e


def ingest_capture(
    state: SessionState,
    frame: Raster,
    prof: geometry.CalibrationProfile,
    session_dir,
    px_per_mm: float = 1.0,
) -> SessionState:
    """Rectify a camera frame, store it losslessly, and select it.

    The view switches to Captured and the cursor lands on the new record.
    """
    rectified = geometry.rectify_capture(frame, prof, px_per_mm)
    record_id = uuid.uuid4().hex
    rel = f"images/{record_id}.png"
    _store_raster(rectified, session_dir, rel)
    record = ImageRecord(record_id, Source.CAPTURED, rel, _utc_now_iso())
    library = state.library + (record,)
    captured_count = sum(1 for r in library if r.source == Source.CAPTURED)
    return replace(state, library=library, view=View.CAPTURED, cursor=captured_count - 1)


def ingest_import(state: SessionState, img: Raster, session_dir) -> SessionState:
    """Add an imported picture to the Files view and select it."""
    record_id = uuid.uuid4().hex
    rel = f"images/{record_id}.png"
    _store_raster(img, session_dir, rel)
    record = ImageRecord(record_id, Source.IMPORTED, rel, _utc_now_iso())
    library = state.library + (record,)
    imported_count = sum(1 for r in library if r.source == Source.IMPORTED)
    return replace(state, library=library, view=View.FILES, cursor=imported_count - 1)


# --- persistence ---------------------------------------------------------------
# Layout: <dir>/manifest.json, <dir>/images/<id>.png, <dir>/references/ref_NNN.png


def _adjustments_doc(adj: Adjustments) -> dict:
    return {
        "levels": {"contrast": adj.levels.contrast, "brightness": adj.levels.brightness},
        "quarter_turns": adj.quarter_turns,
        "zoom": adj.zoom,
        "pan": [adj.pan[0], adj.pan[1]],
        "crop": None if adj.crop is None else [adj.crop.x, adj.crop.y, adj.crop.w, adj.crop.h],
    }


def _grid_doc(grid: GridSpec) -> dict:
    return {
        "spacing": grid.spacing,
        "rotation": grid.rotation,
        "dot_radius": grid.dot_radius,
        "origin_offset": [grid.origin_offset[0], grid.origin_offset[1]],
        "scale_bar": {
            "length_mm": grid.scale_bar.length_mm,
            "tick_every_mm": grid.scale_bar.tick_every_mm,
            "margin_mm": grid.scale_bar.margin_mm,
        },
        "enabled": grid.enabled,
    }


def persist(state: SessionState, session_dir) -> dict:
    """Write manifest + reference images; drop image files no manifest entry names.

    Returns the manifest document. ``load`` after ``persist`` reproduces the
    state exactly, timestamps included; only ``recall_target`` is transient
    (a live-render concern with no manifest field).
    """
    root = Path(session_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        (root / "images").mkdir(exist_ok=True)
    except OSError as e:
        raise WriteFailed(f"cannot prepare session directory {root}: {e}") from e
    for r in state.library:
        if not (root / r.file).is_file():
            raise MissingImageFile(str(root / r.file))

    ref_docs = []
    keep_refs = set()
    for idx, layer in enumerate(state.references):
        rel = f"references/ref_{idx:03d}.png"
        _store_raster(layer.source, root, rel)
        keep_refs.add(rel)
        ref_docs.append(
            {
                "file": rel,
                "placement": layer.placement.flat(),
                "opacity": layer.opacity,
                "polarity": layer.polarity.value,
                "enabled": layer.enabled,
            }
        )

    manifest = {
        "version": MANIFEST_VERSION,
        "mode": state.mode.value,
        "view": state.view.value,
        "cursor": state.cursor,
        "grid": _grid_doc(state.grid),
        "references": ref_docs,
        "images": [
            {
                "id": r.id,
                "source": r.source.value,
                "file": r.file,
                "created_at": r.created_at,
                "adjustments": _adjustments_doc(r.adjustments),
            }
            for r in state.library
        ],
    }
    try:
        (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as e:
        raise WriteFailed(f"cannot write manifest: {e}") from e

    # garbage-collect rasters deleted from the library since the last persist
    live = {r.file for r in state.library}
    for sub, keep in (("images", live), ("references", keep_refs)):
        folder = root / sub
        if folder.is_dir():
            for f in sorted(folder.iterdir()):
                rel = f"{sub}/{f.name}"
                if rel not in keep:
                    f.unlink()
    return manifest


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise CorruptManifest(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise CorruptManifest(
            f"manifest v{MANIFEST_VERSION}: unknown fields {sorted(unknown)} in {where}"
        )
    missing = allowed - set(obj)
    if missing:
        raise CorruptManifest(
            f"manifest v{MANIFEST_VERSION}: missing fields {sorted(missing)} in {where}"
        )


def _safe_relative(rel: str, where: str) -> str:
    p = Path(rel)
    if p.is_absolute() or ".." in p.parts:
        raise CorruptManifest(f"{where}: file path {rel!r} escapes the session directory")
    return rel


def _parse_adjustments(doc, where: str) -> Adjustments:
    _require_keys(doc, {"levels", "quarter_turns", "zoom", "pan", "crop"}, where)
    _require_keys(doc["levels"], {"contrast", "brightness"}, f"{where}.levels")
    try:
        levels = Levels(float(doc["levels"]["contrast"]), float(doc["levels"]["brightness"]))
        crop_doc = doc["crop"]
        crop_rect = None if crop_doc is None else Rect(*(int(v) for v in crop_doc))
        pan = doc["pan"]
        if not isinstance(pan, list) or len(pan) != 2:
            raise ValueError("pan must be [x, y]")
        return Adjustments(
            levels=levels,
            quarter_turns=int(doc["quarter_turns"]),
            zoom=float(doc["zoom"]),
            pan=(float(pan[0]), float(pan[1])),
            crop=crop_rect,
        )
    except (TypeError, ValueError) as e:
        raise CorruptManifest(f"{where}: {e}") from None


def _parse_grid(doc) -> GridSpec:
    _require_keys(
        doc, {"spacing", "rotation", "dot_radius", "origin_offset", "scale_bar", "enabled"}, "grid"
    )
    _require_keys(doc["scale_bar"], {"length_mm", "tick_every_mm", "margin_mm"}, "grid.scale_bar")
    try:
        bar = ScaleBar(
            float(doc["scale_bar"]["length_mm"]),
            float(doc["scale_bar"]["tick_every_mm"]),
            float(doc["scale_bar"]["margin_mm"]),
        )
        offset = doc["origin_offset"]
        return GridSpec(
            spacing=float(doc["spacing"]),
            rotation=float(doc["rotation"]),
            dot_radius=int(doc["dot_radius"]),
            origin_offset=(float(offset[0]), float(offset[1])),
            scale_bar=bar,
            enabled=bool(doc["enabled"]),
        )
    except (TypeError, ValueError, IndexError) as e:
        raise CorruptManifest(f"grid: {e}") from None


def load(session_dir) -> SessionState:
    """Rebuild SessionState from a session directory written by persist."""
    root = Path(session_dir)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise CorruptManifest(f"{manifest_path}: no manifest")
    try:
        doc = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CorruptManifest(f"{manifest_path}: {e}") from e
    if not isinstance(doc, dict):
        raise CorruptManifest(f"{manifest_path}: manifest must be a JSON object")
    version = doc.get("version")
    if version != MANIFEST_VERSION:
        raise UnsupportedVersion(
            f"{manifest_path}: version {version!r}, this build reads version {MANIFEST_VERSION}"
        )
    _require_keys(
        doc, {"version", "mode", "view", "cursor", "grid", "references", "images"}, "manifest"
    )

    try:
        mode = Mode(doc["mode"])
        view = View(doc["view"])
    except ValueError as e:
        raise CorruptManifest(f"manifest: {e}") from None
    cursor = doc["cursor"]
    if cursor is not None and not isinstance(cursor, int):
        raise CorruptManifest(f"manifest: cursor must be an integer or null, got {cursor!r}")

    records = []
    if not isinstance(doc["images"], list):
        raise CorruptManifest("manifest: images must be a list")
    for i, entry in enumerate(doc["images"]):
        where = f"images[{i}]"
        _require_keys(entry, {"id", "source", "file", "created_at", "adjustments"}, where)
        rel = _safe_relative(str(entry["file"]), where)
        if not (root / rel).is_file():
            raise MissingImageFile(str(root / rel))
        try:
            source = Source(entry["source"])
        except ValueError as e:
            raise CorruptManifest(f"{where}: {e}") from None
        records.append(
            ImageRecord(
                id=str(entry["id"]),
                source=source,
                file=rel,
                created_at=str(entry["created_at"]),
                adjustments=_parse_adjustments(entry["adjustments"], f"{where}.adjustments"),
            )
        )

    layers = []
    if not isinstance(doc["references"], list):
        raise CorruptManifest("manifest: references must be a list")
    for i, entry in enumerate(doc["references"]):
        where = f"references[{i}]"
        _require_keys(entry, {"file", "placement", "opacity", "polarity", "enabled"}, where)
        rel = _safe_relative(str(entry["file"]), where)
        if not (root / rel).is_file():
            raise MissingImageFile(str(root / rel))
        try:
            layers.append(
                ReferenceLayer(
                    source=read_png(root / rel),
                    placement=Homography.from_flat(entry["placement"]),
                    opacity=float(entry["opacity"]),
                    polarity=Polarity(entry["polarity"]),
                    enabled=bool(entry["enabled"]),
                )
            )
        except (TypeError, ValueError, Degenerate) as e:
            raise CorruptManifest(f"{where}: {e}") from None

    state = SessionState(
        mode=mode,
        view=view,
        library=tuple(records),
        cursor=cursor,
        grid=_parse_grid(doc["grid"]),
        references=tuple(layers),
        recall_target=None,
    )
    try:
        check_invariants(state)
    except AssertionError as e:
        raise CorruptManifest(f"manifest: {e}") from None
    return state
