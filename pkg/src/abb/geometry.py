"""Projective mappings among the three planes of the system.

Coordinate spaces: camera pixels (what the capture device sees), board
millimeters (origin at the top-left board corner, y down), and projector
pixels. A Homography carries points between two of these planes; a
CalibrationProfile bundles the two fitted maps plus the board dimensions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange

from .raster import Raster

# Invertibility threshold, scale-aware: |det| relative to the Frobenius norm
# cubed is invariant under H -> k*H.
_DET_RATIO = 1e-12
_W_RATIO = 1e-12
_NULLSPACE_RATIO = 1e-8

CALIBRATION_MAX_RMS_PX = 3.0


class TooFewPoints(ValueError):
    """Fewer than 4 correspondences were supplied."""


class Degenerate(ValueError):
    """The point configuration or matrix does not determine an invertible map."""


class AtInfinity(ArithmeticError):
    """A point maps to the plane at infinity (homogeneous w ~ 0)."""


class CalibrationRejected(ValueError):
    """Fit residual exceeds the acceptance threshold."""


class ProfileFormatError(ValueError):
    """A calibration profile file could not be parsed."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


def _xy(p) -> tuple[float, float]:
    if isinstance(p, Point2):
        return (p.x, p.y)
    x, y = p
    return (float(x), float(y))


class Homography:
    """3x3 projective map, defined up to nonzero scale."""

    __slots__ = ("_m",)

    def __init__(self, m):
        a = np.ascontiguousarray(m, dtype=np.float64)
        if a.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("homography entries must be finite")
        fro = float(np.linalg.norm(a))
        if fro == 0.0 or abs(float(np.linalg.det(a))) <= _DET_RATIO * fro**3:
            raise Degenerate("matrix is singular within tolerance")
        a = a.copy()
        a.setflags(write=False)
        self._m = a

    @property
    def m(self) -> np.ndarray:
        """Read-only 3x3 float64 matrix."""
        return self._m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def from_flat(cls, values) -> "Homography":
        a = np.asarray(values, dtype=np.float64)
        if a.shape != (9,):
            raise ValueError(f"expected 9 row-major values, got shape {a.shape}")
        return cls(a.reshape(3, 3))

    @classmethod
    def scale(cls, sx: float, sy: float | None = None) -> "Homography":
        if sy is None:
            sy = sx
        return cls(np.diag([sx, sy, 1.0]))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        return cls([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])

    @classmethod
    def rotation_deg(cls, degrees: float) -> "Homography":
        t = math.radians(degrees)
        c, s = math.cos(t), math.sin(t)
        return cls([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def flat(self) -> list[float]:
        return [float(v) for v in self._m.reshape(-1)]

    def normalized(self) -> np.ndarray:
        """Canonical matrix for storage: m22 = 1 when usable, else unit
        Frobenius norm with a positive leading entry."""
        m = self._m
        if abs(m[2, 2]) > 1e-9:
            return m / m[2, 2]
        m = m / np.linalg.norm(m)
        anchor = m[0, 0] if m[0, 0] != 0.0 else m.reshape(-1)[np.flatnonzero(m.reshape(-1))[0]]
        return m if anchor > 0 else -m

    def approx_equal(self, other: "Homography", tol: float = 1e-9) -> bool:
        """Equality up to projective scale."""
        a = self._m / np.linalg.norm(self._m)
        b = other._m / np.linalg.norm(other._m)
        return bool(np.allclose(a, b, atol=tol) or np.allclose(a, -b, atol=tol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Homography):
            return NotImplemented
        return bool(np.array_equal(self._m, other._m))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Homography({self._m.tolist()})"


def apply_h(H: Homography, p) -> Point2:
    """Map a point through H with the homogeneous divide."""
    x, y = _xy(p)
    v = H.m @ (x, y, 1.0)
    w = v[2]
    if abs(w) < _W_RATIO * np.linalg.norm(H.m):
        raise AtInfinity(f"point ({x}, {y}) maps to infinity")
    return Point2(float(v[0] / w), float(v[1] / w))


def apply_h_many(H: Homography, pts: np.ndarray) -> np.ndarray:
    """Vectorized apply_h over an (n, 2) array."""
    pts = np.asarray(pts, dtype=np.float64)
    ones = np.ones((pts.shape[0], 1))
    v = np.hstack([pts, ones]) @ H.m.T
    w = v[:, 2]
    if np.any(np.abs(w) < _W_RATIO * np.linalg.norm(H.m)):
        raise AtInfinity("some points map to infinity")
    return v[:, :2] / w[:, None]


def invert_h(H: Homography) -> Homography:
    return Homography(np.linalg.inv(H.m))


def compose_h(A: Homography, B: Homography) -> Homography:
    """A after B: apply_h(compose_h(A, B), p) == apply_h(A, apply_h(B, p))."""
    return Homography(A.m @ B.m)


def _hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity T moving the centroid to the origin and the mean radius to sqrt(2)."""
    centroid = pts.mean(axis=0)
    radius = np.linalg.norm(pts - centroid, axis=1).mean()
    if radius < 1e-12:
        raise Degenerate("all points coincide")
    s = math.sqrt(2.0) / radius
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def estimate_homography(pairs) -> Homography:
    """Fit the homography minimizing algebraic error of the normalized DLT system.

    Points are Hartley-normalized, the 2n x 9 system is solved for its
    least-squares null vector by SVD, and the result is denormalized. Exact
    for any 4 correspondences in general position.
    """
    pairs = list(pairs)
    if len(pairs) < 4:
        raise TooFewPoints(f"need at least 4 correspondences, got {len(pairs)}")
    src = np.array([_xy(s) for s, _ in pairs], dtype=np.float64)
    dst = np.array([_xy(d) for _, d in pairs], dtype=np.float64)

    ts = _hartley_normalization(src)
    td = _hartley_normalization(dst)
    sn = (np.hstack([src, np.ones((len(src), 1))]) @ ts.T)[:, :2]
    dn = (np.hstack([dst, np.ones((len(dst), 1))]) @ td.T)[:, :2]

    n = len(pairs)
    a = np.zeros((2 * n, 9))
    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v

    _, sv, vt = np.linalg.svd(a)
    # A collinear/coincident configuration leaves a >1-dimensional null space.
    if sv[-2] < _NULLSPACE_RATIO * sv[0]:
        raise Degenerate("correspondences do not determine a unique homography")
    hn = vt[-1].reshape(3, 3)
    try:
        return Homography(np.linalg.inv(td) @ hn @ ts)
    except Degenerate:
        raise Degenerate("fitted homography is singular (degenerate configuration)") from None


def reprojection_rms(H: Homography, pairs) -> float:
    """RMS distance between H(src) and dst, in destination units."""
    pairs = list(pairs)
    src = np.array([_xy(s) for s, _ in pairs], dtype=np.float64)
    dst = np.array([_xy(d) for _, d in pairs], dtype=np.float64)
    err = apply_h_many(H, src) - dst
    return float(np.sqrt((err**2).sum(axis=1).mean()))


@dataclass(frozen=True)
class CalibrationProfile:
    """Camera->board and board->projector maps plus the board's mm dimensions."""

    h_cam_to_board: Homography
    h_board_to_proj: Homography
    board_w: float
    board_h: float
    residual_rms: float

    def __post_init__(self):
        if self.board_w <= 0 or self.board_h <= 0:
            raise ValueError(f"board size must be positive, got {self.board_w}x{self.board_h}")
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be >= 0")

    @classmethod
    def identity(cls, board_w: float, board_h: float) -> "CalibrationProfile":
        """Board, camera and projector frames coincide (useful default)."""
        return cls(Homography.identity(), Homography.identity(), board_w, board_h, 0.0)


@njit(parallel=True, cache=True)
def _warp_kernel(src, minv, out, fill, w_floor):  # pragma: no cover - jitted
    out_h, out_w = out.shape[:2]
    h, w = src.shape[:2]
    m00, m01, m02 = minv[0, 0], minv[0, 1], minv[0, 2]
    m10, m11, m12 = minv[1, 0], minv[1, 1], minv[1, 2]
    m20, m21, m22 = minv[2, 0], minv[2, 1], minv[2, 2]
    for y in prange(out_h):
        for x in range(out_w):
            den = m20 * x + m21 * y + m22
            if abs(den) <= w_floor:
                out[y, x, 0] = fill[0]
                out[y, x, 1] = fill[1]
                out[y, x, 2] = fill[2]
                continue
            sx = (m00 * x + m01 * y + m02) / den
            sy = (m10 * x + m11 * y + m12) / den
            if not (0.0 <= sx <= w - 1.0) or not (0.0 <= sy <= h - 1.0):
                out[y, x, 0] = fill[0]
                out[y, x, 1] = fill[1]
                out[y, x, 2] = fill[2]
                continue
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            fx = sx - x0
            fy = sy - y0
            for c in range(3):
                top = src[y0, x0, c] * (1.0 - fx) + src[y0, x1, c] * fx
                bot = src[y1, x0, c] * (1.0 - fx) + src[y1, x1, c] * fx
                v = top * (1.0 - fy) + bot * fy
                out[y, x, c] = np.uint8(min(255.0, max(0.0, np.floor(v + 0.5))))


def warp_perspective(img: Raster, H: Homography, out_w: int, out_h: int, fill=(0, 0, 0)) -> Raster:
    """Warp ``img`` through H (source px -> destination px) by inverse mapping.

    Each destination pixel center is pulled back through H^-1 and sampled
    with the same bilinear kernel as resample_bilinear (round half up);
    pixels whose pre-image falls outside the source get ``fill``. The inner
    loop is jit-compiled: the projector path must hold a real-time budget.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be at least 1x1, got {out_w}x{out_h}")
    minv = np.ascontiguousarray(invert_h(H).m)
    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    fill_arr = np.asarray(fill, dtype=np.uint8)
    if fill_arr.shape != (3,):
        raise ValueError(f"fill must be an rgb triple, got {fill!r}")
    _warp_kernel(img.pixels, minv, out, fill_arr, _W_RATIO * float(np.linalg.norm(minv)))
    return Raster(out)


def rectify_capture(frame: Raster, prof: CalibrationProfile, px_per_mm: float = 1.0) -> Raster:
    """Warp a camera frame into board space at the requested resolution.

    Output covers the full board: ceil(board_w * px_per_mm) by
    ceil(board_h * px_per_mm) pixels.
    """
    if px_per_mm <= 0:
        raise ValueError(f"px_per_mm must be positive, got {px_per_mm}")
    out_w = math.ceil(prof.board_w * px_per_mm)
    out_h = math.ceil(prof.board_h * px_per_mm)
    h = compose_h(Homography.scale(px_per_mm), prof.h_cam_to_board)
    return warp_perspective(frame, h, out_w, out_h)


def calibrate(
    proj_markers,
    cam_observations,
    board_corners_cam,
    board_w: float,
    board_h: float,
) -> CalibrationProfile:
    """Two-stage fit from user-supplied point sets.

    Stage 1 maps the four tapped board corners (camera px) to the board's
    metric frame. Stage 2 takes the camera observations of the projected
    markers into board space and fits board -> projector against the markers'
    known projector positions. The residual of stage 2, in projector px, is
    the recorded quality figure.
    """
    if board_w <= 0 or board_h <= 0:
        raise ValueError(f"board size must be positive, got {board_w}x{board_h}")
    proj_markers = [_xy(p) for p in proj_markers]
    cam_observations = [_xy(p) for p in cam_observations]
    if len(proj_markers) != len(cam_observations):
        raise ValueError(
            f"marker count mismatch: {len(proj_markers)} projected, "
            f"{len(cam_observations)} observed"
        )
    corners_board = [(0.0, 0.0), (board_w, 0.0), (board_w, board_h), (0.0, board_h)]
    h_cam_to_board = estimate_homography(zip(board_corners_cam, corners_board))
    markers_board = apply_h_many(h_cam_to_board, np.array(cam_observations))
    h_board_to_proj = estimate_homography(zip(markers_board, proj_markers))
    rms = reprojection_rms(h_board_to_proj, zip(markers_board, proj_markers))
    if rms > CALIBRATION_MAX_RMS_PX:
        raise CalibrationRejected(
            f"residual {rms:.3f} px exceeds {CALIBRATION_MAX_RMS_PX} px"
        )
    return CalibrationProfile(h_cam_to_board, h_board_to_proj, board_w, board_h, rms)


# --- profile persistence ----------------------------------------------------

PROFILE_VERSION = 1


def save_profile(prof: CalibrationProfile, path) -> None:
    doc = {
        "version": PROFILE_VERSION,
        "board_mm": [prof.board_w, prof.board_h],
        "h_cam_to_board": [float(v) for v in prof.h_cam_to_board.normalized().reshape(-1)],
        "h_board_to_proj": [float(v) for v in prof.h_board_to_proj.normalized().reshape(-1)],
        "residual_rms": prof.residual_rms,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_profile(path) -> CalibrationProfile:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ProfileFormatError(f"{path}: {e}") from e
    if not isinstance(doc, dict):
        raise ProfileFormatError(f"{path}: profile must be a JSON object")
    expected = {"version", "board_mm", "h_cam_to_board", "h_board_to_proj", "residual_rms"}
    if set(doc) != expected:
        raise ProfileFormatError(
            f"{path}: profile v{PROFILE_VERSION} fields are {sorted(expected)}, "
            f"got {sorted(doc)}"
        )
    if doc["version"] != PROFILE_VERSION:
        raise ProfileFormatError(f"{path}: unsupported profile version {doc['version']!r}")
    try:
        w, h = (float(v) for v in doc["board_mm"])
        return CalibrationProfile(
            Homography.from_flat(doc["h_cam_to_board"]),
            Homography.from_flat(doc["h_board_to_proj"]),
            w,
            h,
            float(doc["residual_rms"]),
        )
    except (TypeError, ValueError, Degenerate) as e:
        raise ProfileFormatError(f"{path}: {e}") from e
