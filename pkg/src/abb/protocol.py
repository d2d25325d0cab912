"""Remote-command plane: framed binary codec and its JSON mirror.

Binary frames ride any byte stream (serial device, loopback pipe):

    0xAB | cmd_id | len | payload... | checksum

where checksum is the XOR of cmd_id, len and every payload byte, and len is
fixed per command id. The JSON plane carries the same commands as
``{"cmd": "<name>", ...}`` objects over a WebSocket text channel, plus state
events back to clients. Decoding is total: arbitrary byte garbage produces
diagnostics and resynchronization, never an exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple

START_BYTE = 0xAB


class CommandKind(IntEnum):
    """Command ids on the wire; values are the binary cmd_id bytes."""

    NEXT = 0x01
    PREV = 0x02
    CAPTURE = 0x03
    DELETE = 0x04
    TOGGLE_GRID = 0x05
    TOGGLE_SOURCE = 0x06
    BRIGHTNESS = 0x07
    CONTRAST = 0x08
    ROTATE_STEP = 0x09
    ZOOM_STEP = 0x0A
    START_CALIBRATION = 0x0B
    BLANK = 0x0C
    RECALL = 0x0D


# payload encoding per command: None, signed byte, or big-endian u16
_PAYLOAD: dict[CommandKind, str | None] = {
    CommandKind.NEXT: None,
    CommandKind.PREV: None,
    CommandKind.CAPTURE: None,
    CommandKind.DELETE: None,
    CommandKind.TOGGLE_GRID: None,
    CommandKind.TOGGLE_SOURCE: None,
    CommandKind.BRIGHTNESS: "i8",
    CommandKind.CONTRAST: "i8",
    CommandKind.ROTATE_STEP: None,
    CommandKind.ZOOM_STEP: "i8",
    CommandKind.START_CALIBRATION: None,
    CommandKind.BLANK: None,
    CommandKind.RECALL: "u16",
}

_PAYLOAD_LEN = {None: 0, "i8": 1, "u16": 2}

# JSON payload key per payload-carrying command
_JSON_VALUE_KEY = {
    CommandKind.BRIGHTNESS: "delta",
    CommandKind.CONTRAST: "delta",
    CommandKind.ZOOM_STEP: "delta",
    CommandKind.RECALL: "index",
}

_BY_NAME = {k.name.lower(): k for k in CommandKind}


class PayloadOutOfRange(ValueError):
    """Payload value outside its wire domain."""


class UnknownCommand(ValueError):
    """Command name not in the table (JSON plane)."""


class MalformedJson(ValueError):
    """Text is not a well-formed command object."""


@dataclass(frozen=True)
class Command:
    """Decoded remote command; ``value`` is the delta/index for payload commands."""

    kind: CommandKind
    value: int | None = None

    def __post_init__(self):
        enc = _PAYLOAD[self.kind]
        if enc is None:
            if self.value is not None:
                raise PayloadOutOfRange(f"{self.kind.name} takes no payload")
        elif self.value is None or not isinstance(self.value, int) or isinstance(self.value, bool):
            raise PayloadOutOfRange(f"{self.kind.name} requires an integer payload")
        elif enc == "i8" and not -128 <= self.value <= 127:
            raise PayloadOutOfRange(f"{self.kind.name} delta {self.value} outside [-128, 127]")
        elif enc == "u16" and not 0 <= self.value <= 65535:
            raise PayloadOutOfRange(f"{self.kind.name} index {self.value} outside [0, 65535]")


class FrameErrorKind(str, Enum):
    UNKNOWN_COMMAND = "unknown_command"
    LENGTH_MISMATCH = "length_mismatch"
    CHECKSUM_ERROR = "checksum_error"


@dataclass(frozen=True)
class FrameError:
    """Per-frame decode diagnostic; offset is the start byte's buffer position."""

    kind: FrameErrorKind
    offset: int
    detail: str


class DecodeResult(NamedTuple):
    commands: list[Command]
    errors: list[FrameError]
    remainder: bytes


def payload_length(kind: CommandKind) -> int:
    return _PAYLOAD_LEN[_PAYLOAD[kind]]


def encode_frame(cmd: Command) -> bytes:
    """Serialize one command as start | cmd_id | len | payload | checksum."""
    enc = _PAYLOAD[cmd.kind]
    if enc is None:
        payload = b""
    elif enc == "i8":
        payload = cmd.value.to_bytes(1, "big", signed=True)
    else:
        payload = cmd.value.to_bytes(2, "big")
    checksum = cmd.kind.value ^ len(payload)
    for b in payload:
        checksum ^= b
    return bytes([START_BYTE, cmd.kind.value, len(payload), *payload, checksum])


def decode_stream(buffer: bytes) -> DecodeResult:
    """Scan a byte buffer for frames; total over arbitrary input.

    Bytes before a start byte are skipped silently. A frame failing id,
    length or checksum validation yields one diagnostic and scanning resumes
    at the byte after its start byte. A trailing frame that could still
    complete is returned as the remainder.
    """
    buf = bytes(buffer)
    commands: list[Command] = []
    errors: list[FrameError] = []
    i = 0
    n = len(buf)
    while True:
        idx = buf.find(START_BYTE, i)
        if idx < 0:
            return DecodeResult(commands, errors, b"")
        if n - idx < 3:
            return DecodeResult(commands, errors, buf[idx:])
        cmd_id = buf[idx + 1]
        length = buf[idx + 2]
        try:
            kind = CommandKind(cmd_id)
        except ValueError:
            errors.append(
                FrameError(FrameErrorKind.UNKNOWN_COMMAND, idx, f"cmd id 0x{cmd_id:02X}")
            )
            i = idx + 1
            continue
        expected = payload_length(kind)
        if length != expected:
            errors.append(
                FrameError(
                    FrameErrorKind.LENGTH_MISMATCH,
                    idx,
                    f"{kind.name} declares {length} payload bytes, expected {expected}",
                )
            )
            i = idx + 1
            continue
        total = 4 + expected
        if n - idx < total:
            return DecodeResult(commands, errors, buf[idx:])
        payload = buf[idx + 3 : idx + 3 + expected]
        checksum = cmd_id ^ length
        for b in payload:
            checksum ^= b
        if checksum != buf[idx + 3 + expected]:
            errors.append(
                FrameError(
                    FrameErrorKind.CHECKSUM_ERROR,
                    idx,
                    f"{kind.name} checksum 0x{buf[idx + 3 + expected]:02X}, "
                    f"computed 0x{checksum:02X}",
                )
            )
            i = idx + 1
            continue
        enc = _PAYLOAD[kind]
        if enc is None:
            value = None
        elif enc == "i8":
            value = int.from_bytes(payload, "big", signed=True)
        else:
            value = int.from_bytes(payload, "big")
        commands.append(Command(kind, value))
        i = idx + total
    # unreachable


# --- JSON plane ---------------------------------------------------------------


def json_encode(cmd: Command) -> str:
    doc: dict = {"cmd": cmd.kind.name.lower()}
    key = _JSON_VALUE_KEY.get(cmd.kind)
    if key is not None:
        doc[key] = cmd.value
    return json.dumps(doc)


def json_decode(text: str) -> Command:
    """Parse one JSON command; unknown extra keys are ignored."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as e:
        raise MalformedJson(str(e)) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("cmd"), str):
        raise MalformedJson("command must be an object with a string 'cmd' field")
    kind = _BY_NAME.get(doc["cmd"])
    if kind is None:
        raise UnknownCommand(f"unknown command {doc['cmd']!r}")
    key = _JSON_VALUE_KEY.get(kind)
    if key is None:
        return Command(kind)
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedJson(f"{doc['cmd']} requires an integer {key!r} field")
    return Command(kind, value)  # may raise PayloadOutOfRange


def json_event(*, mode: str, view: str, cursor: int | None, count: int, grid: bool) -> str:
    """State snapshot event pushed to remote clients."""
    return json.dumps(
        {
            "event": "state",
            "mode": mode,
            "view": view,
            "cursor": cursor,
            "count": count,
            "grid": grid,
        }
    )


def json_error_event(code: str, message: str) -> str:
    return json.dumps({"event": "error", "code": code, "message": message})


def json_calibration_event(accepted: bool, residual_rms: float | None, message: str = "") -> str:
    doc: dict = {"event": "calibration", "accepted": accepted}
    if residual_rms is not None:
        doc["residual_rms"] = residual_rms
    if message:
        doc["message"] = message
    return json.dumps(doc)


@dataclass(frozen=True)
class CalibrationPoints:
    """Wizard submission: tapped camera points plus the board's mm size.

    JSON-plane extension message, not one of the 13 wire commands:
    {"cmd":"calib_points","board_corners":[[x,y]*4],"markers":[[x,y]*4],
     "board_mm":[w,h]}.
    """

    board_corners: tuple[tuple[float, float], ...]
    markers: tuple[tuple[float, float], ...]
    board_mm: tuple[float, float]


def _point_list(doc: dict, key: str, count: int) -> tuple[tuple[float, float], ...]:
    raw = doc.get(key)
    if not isinstance(raw, list) or len(raw) != count:
        raise MalformedJson(f"calib_points needs exactly {count} {key}")
    pts = []
    for item in raw:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item)
        ):
            raise MalformedJson(f"{key} entries must be [x, y] number pairs")
        pts.append((float(item[0]), float(item[1])))
    return tuple(pts)


def decode_client_message(text: str) -> Command | CalibrationPoints:
    """Parse a JSON-plane message: one of the 13 commands or the wizard extension."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as e:
        raise MalformedJson(str(e)) from None
    if isinstance(doc, dict) and doc.get("cmd") == "calib_points":
        corners = _point_list(doc, "board_corners", 4)
        markers = _point_list(doc, "markers", 4)
        raw_mm = doc.get("board_mm")
        if (
            not isinstance(raw_mm, list)
            or len(raw_mm) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_mm)
        ):
            raise MalformedJson("calib_points needs board_mm as [w, h]")
        return CalibrationPoints(corners, markers, (float(raw_mm[0]), float(raw_mm[1])))
    return json_decode(text)
