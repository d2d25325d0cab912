"""Augmented blackboard: capture board drawings, rectify them, and project
reference layers (dot grids, scale bars, trace images) back onto the board,
driven live over a framed serial protocol or a WebSocket remote.
"""

from .geometry import (
    CalibrationProfile,
    Homography,
    Point2,
    apply_h,
    calibrate,
    compose_h,
    estimate_homography,
    invert_h,
    load_profile,
    rectify_capture,
    save_profile,
    warp_perspective,
)
from .overlay import (
    GridSpec,
    Polarity,
    ReferenceLayer,
    ScaleBar,
    blend_chalk,
    grid_points,
    prepare_reference,
    render_reference_grid,
)
from .protocol import Command, CommandKind, decode_stream, encode_frame, json_decode, json_encode
from .raster import (
    Levels,
    Raster,
    Rect,
    adjust_levels,
    crop,
    load_image,
    resample_bilinear,
    rotate_quarter,
    save_image,
)
from .session import ImageRecord, Mode, SessionState, Source, View, dispatch, ingest_capture, load, persist
from .service import Coordinator, ServiceConfig, render_frame, serve

__version__ = "0.1.0"

__all__ = [
    "CalibrationProfile",
    "Command",
    "CommandKind",
    "Coordinator",
    "GridSpec",
    "Homography",
    "ImageRecord",
    "Levels",
    "Mode",
    "Point2",
    "Polarity",
    "Raster",
    "Rect",
    "ReferenceLayer",
    "ScaleBar",
    "ServiceConfig",
    "SessionState",
    "Source",
    "View",
    "adjust_levels",
    "apply_h",
    "blend_chalk",
    "calibrate",
    "compose_h",
    "crop",
    "decode_stream",
    "dispatch",
    "encode_frame",
    "estimate_homography",
    "grid_points",
    "ingest_capture",
    "invert_h",
    "json_decode",
    "json_encode",
    "load",
    "load_image",
    "load_profile",
    "persist",
    "prepare_reference",
    "rectify_capture",
    "render_frame",
    "render_reference_grid",
    "resample_bilinear",
    "rotate_quarter",
    "save_image",
    "save_profile",
    "serve",
    "warp_perspective",
]
