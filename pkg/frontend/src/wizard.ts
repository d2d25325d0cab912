// Calibration wizard state machine: four board-corner taps on the camera
// preview, four taps matching the projected marker dots, board dimensions,
// then a residual review with accept/retry. Pure functions over WizardState
// so every transition is unit-testable.

import type { CalibPointsMessage } from "./protocol.js";

export type WizardStep =
  | "pick_board_corners"
  | "confirm_markers"
  | "enter_board_mm"
  | "review_residual";

export type Point = [number, number];

export interface WizardState {
  step: WizardStep;
  boardCorners: Point[];
  markers: Point[];
  boardMm: [number, number] | null;
  residual: number | null;
  error: string | null;
}

export const POINTS_PER_STEP = 4;

export function newWizard(): WizardState {
  return {
    step: "pick_board_corners",
    boardCorners: [],
    markers: [],
    boardMm: null,
    residual: null,
    error: null,
  };
}

function collecting(state: WizardState): Point[] | null {
  if (state.step === "pick_board_corners") return state.boardCorners;
  if (state.step === "confirm_markers") return state.markers;
  return null;
}

export function addPoint(state: WizardState, p: Point): WizardState {
  const bucket = collecting(state);
  if (bucket === null || bucket.length >= POINTS_PER_STEP) return state;
  const next = { ...state, error: null };
  if (state.step === "pick_board_corners") next.boardCorners = [...bucket, p];
  else next.markers = [...bucket, p];
  return next;
}

export function undoPoint(state: WizardState): WizardState {
  const bucket = collecting(state);
  if (bucket === null || bucket.length === 0) return state;
  const trimmed = bucket.slice(0, -1);
  if (state.step === "pick_board_corners") return { ...state, boardCorners: trimmed };
  return { ...state, markers: trimmed };
}

export function canAdvance(state: WizardState): boolean {
  switch (state.step) {
    case "pick_board_corners":
      return state.boardCorners.length === POINTS_PER_STEP;
    case "confirm_markers":
      return state.markers.length === POINTS_PER_STEP;
    case "enter_board_mm":
      return state.boardMm !== null;
    case "review_residual":
      return false;
  }
}

export function advance(state: WizardState): WizardState {
  if (!canAdvance(state)) return state;
  if (state.step === "pick_board_corners") return { ...state, step: "confirm_markers" };
  if (state.step === "confirm_markers") return { ...state, step: "enter_board_mm" };
  return state; // enter_board_mm advances via the submission result
}

export function setBoardMm(state: WizardState, w: number, h: number): WizardState {
  if (state.step !== "enter_board_mm" || !(w > 0) || !(h > 0)) return state;
  return { ...state, boardMm: [w, h] };
}

// The message is only available once every step's data is complete.
export function submission(state: WizardState): CalibPointsMessage | null {
  if (
    state.boardCorners.length !== POINTS_PER_STEP ||
    state.markers.length !== POINTS_PER_STEP ||
    state.boardMm === null
  ) {
    return null;
  }
  return {
    cmd: "calib_points",
    board_corners: state.boardCorners,
    markers: state.markers,
    board_mm: state.boardMm,
  };
}

// Server verdict: acceptance shows the residual; rejection restarts the
// point collection with the reason on screen.
export function applyResult(
  state: WizardState,
  accepted: boolean,
  residual: number | null,
  message: string,
): WizardState {
  if (accepted) {
    return { ...state, step: "review_residual", residual, error: null };
  }
  return { ...newWizard(), error: message || "calibration rejected, try again" };
}
