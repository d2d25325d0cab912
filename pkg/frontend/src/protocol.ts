// Client side of the JSON command plane. Mirrors the server's 13-command
// table; the guards here keep the UI from ever emitting a message the
// service cannot decode.

export type PlainCommandName =
  | "next"
  | "prev"
  | "capture"
  | "delete"
  | "toggle_grid"
  | "toggle_source"
  | "rotate_step"
  | "start_calibration"
  | "blank";

export type DeltaCommandName = "brightness" | "contrast" | "zoom_step";

export type Command =
  | { cmd: PlainCommandName }
  | { cmd: DeltaCommandName; delta: number }
  | { cmd: "recall"; index: number };

export const PLAIN_COMMANDS: readonly PlainCommandName[] = [
  "next",
  "prev",
  "capture",
  "delete",
  "toggle_grid",
  "toggle_source",
  "rotate_step",
  "start_calibration",
  "blank",
];

export const DELTA_COMMANDS: readonly DeltaCommandName[] = [
  "brightness",
  "contrast",
  "zoom_step",
];

export function plain(cmd: PlainCommandName): Command {
  return { cmd };
}

export function withDelta(cmd: DeltaCommandName, delta: number): Command {
  if (!Number.isInteger(delta) || delta < -128 || delta > 127) {
    throw new RangeError(`${cmd} delta ${delta} outside [-128, 127]`);
  }
  return { cmd, delta };
}

export function recall(index: number): Command {
  if (!Number.isInteger(index) || index < 0 || index > 65535) {
    throw new RangeError(`recall index ${index} outside [0, 65535]`);
  }
  return { cmd: "recall", index };
}

export interface CalibPointsMessage {
  cmd: "calib_points";
  board_corners: [number, number][];
  markers: [number, number][];
  board_mm: [number, number];
}

export type ClientMessage = Command | CalibPointsMessage;

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

// --- events from the service ---

export interface StateEvent {
  event: "state";
  mode: string;
  view: string;
  cursor: number | null;
  count: number;
  grid: boolean;
}

export interface ErrorEvent {
  event: "error";
  code: string;
  message: string;
}

export interface CalibrationEvent {
  event: "calibration";
  accepted: boolean;
  residual_rms?: number;
  message?: string;
}

export interface CalibrationMarkersEvent {
  event: "calibration_markers";
  points: [number, number][];
}

export type ServerEvent =
  | StateEvent
  | ErrorEvent
  | CalibrationEvent
  | CalibrationMarkersEvent;

// Malformed events are reported as null; the caller logs and ignores them.
export function parseEvent(text: string): ServerEvent | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const ev = doc as Record<string, unknown>;
  switch (ev["event"]) {
    case "state":
      if (
        typeof ev["mode"] === "string" &&
        typeof ev["view"] === "string" &&
        (ev["cursor"] === null || typeof ev["cursor"] === "number") &&
        typeof ev["count"] === "number" &&
        typeof ev["grid"] === "boolean"
      ) {
        return ev as unknown as StateEvent;
      }
      return null;
    case "error":
      if (typeof ev["code"] === "string" && typeof ev["message"] === "string") {
        return ev as unknown as ErrorEvent;
      }
      return null;
    case "calibration":
      if (typeof ev["accepted"] === "boolean") {
        return ev as unknown as CalibrationEvent;
      }
      return null;
    case "calibration_markers":
      if (Array.isArray(ev["points"])) {
        return ev as unknown as CalibrationMarkersEvent;
      }
      return null;
    default:
      return null;
  }
}

export function positionLabel(ev: StateEvent): string {
  if (ev.cursor === null || ev.count === 0) return `– / ${ev.count}`;
  return `${ev.cursor + 1} / ${ev.count}`;
}
