import { describe, expect, it } from "vitest";

import {
  addPoint,
  advance,
  applyResult,
  canAdvance,
  newWizard,
  setBoardMm,
  submission,
  undoPoint,
} from "../src/wizard.js";
import type { Point, WizardState } from "../src/wizard.js";

const TAPS: Point[] = [
  [10, 10],
  [630, 12],
  [628, 350],
  [12, 348],
];

function collected(state: WizardState, pts: Point[]): WizardState {
  return pts.reduce((s, p) => addPoint(s, p), state);
}

describe("point collection", () => {
  it("starts at the corner-picking step with nothing collected", () => {
    const w = newWizard();
    expect(w.step).toBe("pick_board_corners");
    expect(canAdvance(w)).toBe(false);
  });

  it("cannot advance with fewer than 4 taps", () => {
    const w = collected(newWizard(), TAPS.slice(0, 3));
    expect(canAdvance(w)).toBe(false);
    expect(advance(w).step).toBe("pick_board_corners");
  });

  it("caps each step at exactly 4 points", () => {
    const w = collected(newWizard(), [...TAPS, [99, 99]]);
    expect(w.boardCorners).toHaveLength(4);
    expect(w.boardCorners[3]).toEqual(TAPS[3]);
  });

  it("undo removes the most recent tap", () => {
    const w = undoPoint(collected(newWizard(), TAPS));
    expect(w.boardCorners).toHaveLength(3);
  });

  it("walks corners -> markers -> board size", () => {
    let w = advance(collected(newWizard(), TAPS));
    expect(w.step).toBe("confirm_markers");
    w = advance(collected(w, TAPS));
    expect(w.step).toBe("enter_board_mm");
  });
});

describe("submission", () => {
  function ready(): WizardState {
    let w = advance(collected(newWizard(), TAPS));
    w = advance(collected(w, TAPS));
    return setBoardMm(w, 800, 600);
  }

  it("requires both point sets and the board size", () => {
    expect(submission(newWizard())).toBeNull();
    const msg = submission(ready());
    expect(msg).not.toBeNull();
    expect(msg!.cmd).toBe("calib_points");
    expect(msg!.board_mm).toEqual([800, 600]);
    expect(msg!.board_corners).toHaveLength(4);
    expect(msg!.markers).toHaveLength(4);
  });

  it("rejects non-positive board sizes", () => {
    let w = advance(collected(newWizard(), TAPS));
    w = advance(collected(w, TAPS));
    expect(setBoardMm(w, 0, 600).boardMm).toBeNull();
  });

  it("acceptance shows the residual", () => {
    const w = applyResult(ready(), true, 0.42, "");
    expect(w.step).toBe("review_residual");
    expect(w.residual).toBe(0.42);
  });

  it("rejection restarts collection with the reason", () => {
    const w = applyResult(ready(), false, null, "residual 5.1 px exceeds 3.0 px");
    expect(w.step).toBe("pick_board_corners");
    expect(w.boardCorners).toHaveLength(0);
    expect(w.error).toContain("residual");
  });
});
