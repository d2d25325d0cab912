// DOM wiring for the handheld remote: command pad, live state readout,
// optional frame preview, and the 4+4-point calibration wizard.

import {
  DELTA_COMMANDS,
  PLAIN_COMMANDS,
  plain,
  positionLabel,
  recall,
  withDelta,
} from "./protocol.js";
import type { DeltaCommandName, PlainCommandName, StateEvent } from "./protocol.js";
import { ControlSocket } from "./socket.js";
import {
  addPoint,
  advance,
  applyResult,
  canAdvance,
  newWizard,
  setBoardMm,
  submission,
  undoPoint,
} from "./wizard.js";
import type { WizardState } from "./wizard.js";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

const statusEl = $("#status");
const staleEl = $("#stale");
const positionEl = $("#position");
const modeEl = $("#mode");
const viewEl = $("#view");
const gridBtn = $("#cmd-toggle_grid");
const noticeEl = $("#notice");
const previewImg = $<HTMLImageElement>("#preview");

const wizardPanel = $("#wizard");
const wizardStepEl = $("#wizard-step");
const wizardCanvas = $<HTMLCanvasElement>("#wizard-canvas");
const wizardAdvance = $<HTMLButtonElement>("#wizard-advance");
const wizardUndo = $<HTMLButtonElement>("#wizard-undo");
const wizardSubmit = $<HTMLButtonElement>("#wizard-submit");
const boardWInput = $<HTMLInputElement>("#board-w");
const boardHInput = $<HTMLInputElement>("#board-h");
const residualEl = $("#wizard-residual");

let wizard: WizardState | null = null;
let markerPoints: [number, number][] = [];

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/control?preview=1`;

function notice(text: string, isError = false): void {
  noticeEl.textContent = text;
  noticeEl.classList.toggle("error", isError);
  if (text) setTimeout(() => (noticeEl.textContent = ""), 4000);
}

function renderState(ev: StateEvent): void {
  positionEl.textContent = positionLabel(ev);
  modeEl.textContent = ev.mode;
  viewEl.textContent = ev.view;
  gridBtn.classList.toggle("active", ev.grid);
}

const socket = new ControlSocket(wsUrl, {
  onStatus: (status) => {
    statusEl.textContent = status;
    statusEl.className = `pill ${status}`;
  },
  onStale: (stale) => staleEl.classList.toggle("hidden", !stale),
  onEvent: (ev) => {
    switch (ev.event) {
      case "state":
        renderState(ev);
        break;
      case "error":
        notice(`${ev.code}: ${ev.message}`, true);
        break;
      case "calibration_markers":
        markerPoints = ev.points;
        if (wizard) refreshWizard();
        break;
      case "calibration":
        if (wizard) {
          wizard = applyResult(
            wizard,
            ev.accepted,
            ev.residual_rms ?? null,
            ev.message ?? "",
          );
          refreshWizard();
        }
        break;
    }
  },
  onFrame: async (blob) => {
    const data = blob instanceof Blob ? blob : new Blob([blob]);
    const url = URL.createObjectURL(data);
    previewImg.onload = () => URL.revokeObjectURL(url);
    previewImg.src = url;
  },
});

function guardedSend(msg: Parameters<ControlSocket["send"]>[0]): void {
  if (!socket.send(msg)) notice("not connected — command dropped", true);
}

for (const name of PLAIN_COMMANDS) {
  const btn = document.querySelector<HTMLButtonElement>(`#cmd-${name}`);
  if (!btn) continue;
  btn.addEventListener("click", () => {
    if (name === "start_calibration") openWizard();
    guardedSend(plain(name as PlainCommandName));
  });
}

for (const name of DELTA_COMMANDS) {
  for (const [suffix, delta] of [
    ["minus", -10],
    ["plus", 10],
  ] as const) {
    const btn = document.querySelector<HTMLButtonElement>(`#cmd-${name}-${suffix}`);
    btn?.addEventListener("click", () =>
      guardedSend(withDelta(name as DeltaCommandName, name === "zoom_step" ? Math.sign(delta) : delta)),
    );
  }
}

$("#cmd-recall").addEventListener("click", () => {
  const raw = prompt("library index to recall", "0");
  if (raw === null) return;
  const index = Number(raw);
  try {
    guardedSend(recall(index));
  } catch (e) {
    notice(String(e), true);
  }
});

// --- calibration wizard ---

const STEP_HINTS: Record<WizardState["step"], string> = {
  pick_board_corners: "tap the 4 board corners on the camera preview (TL, TR, BR, BL)",
  confirm_markers: "tap the 4 projected dots in the same order",
  enter_board_mm: "enter the board size in millimetres",
  review_residual: "calibration accepted",
};

function openWizard(): void {
  wizard = newWizard();
  wizardPanel.classList.remove("hidden");
  loadWizardPreview();
  refreshWizard();
}

function loadWizardPreview(): void {
  const img = new Image();
  img.onload = () => {
    wizardCanvas.width = img.width;
    wizardCanvas.height = img.height;
    wizardCanvas.getContext("2d")?.drawImage(img, 0, 0);
    drawTaps();
  };
  img.src = `/preview?ts=${Date.now()}`;
}

function drawTaps(): void {
  if (!wizard) return;
  const ctx = wizardCanvas.getContext("2d");
  if (!ctx) return;
  const pts =
    wizard.step === "pick_board_corners" ? wizard.boardCorners : wizard.markers;
  ctx.fillStyle = wizard.step === "pick_board_corners" ? "#ff5252" : "#40c4ff";
  for (const [x, y] of pts) {
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, Math.PI * 2);
    ctx.fill();
  }
}

wizardCanvas.addEventListener("click", (ev) => {
  if (!wizard) return;
  const rect = wizardCanvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * wizardCanvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * wizardCanvas.height;
  wizard = addPoint(wizard, [x, y]);
  refreshWizard();
});

wizardUndo.addEventListener("click", () => {
  if (!wizard) return;
  wizard = undoPoint(wizard);
  refreshWizard();
});

wizardAdvance.addEventListener("click", () => {
  if (!wizard) return;
  wizard = advance(wizard);
  if (wizard.step === "confirm_markers") loadWizardPreview();
  refreshWizard();
});

wizardSubmit.addEventListener("click", () => {
  if (!wizard) return;
  const w = Number(boardWInput.value);
  const h = Number(boardHInput.value);
  wizard = setBoardMm(wizard, w, h);
  const msg = submission(wizard);
  if (msg === null) {
    notice("wizard incomplete", true);
    return;
  }
  guardedSend(msg);
});

$("#wizard-close").addEventListener("click", () => {
  wizard = null;
  wizardPanel.classList.add("hidden");
});

function refreshWizard(): void {
  if (!wizard) return;
  wizardStepEl.textContent = `${STEP_HINTS[wizard.step]}${
    wizard.error ? ` — ${wizard.error}` : ""
  }`;
  const collecting =
    wizard.step === "pick_board_corners" || wizard.step === "confirm_markers";
  wizardAdvance.disabled = !canAdvance(wizard) || wizard.step === "enter_board_mm";
  wizardUndo.disabled = !collecting;
  wizardSubmit.disabled = wizard.step !== "enter_board_mm";
  residualEl.textContent =
    wizard.residual !== null ? `residual ${wizard.residual.toExponential(2)} px` : "";
  if (collecting) {
    loadWizardPreviewIfIdle();
    drawTaps();
  }
  if (markerPoints.length && wizard.step === "confirm_markers") {
    const ctx = wizardCanvas.getContext("2d");
    if (ctx) {
      ctx.strokeStyle = "#ffe082";
      for (const [, pt] of markerPoints.entries()) {
        ctx.beginPath();
        ctx.arc(pt[0], pt[1], 10, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
  }
}

let previewLoading = false;
function loadWizardPreviewIfIdle(): void {
  if (previewLoading) return;
  previewLoading = true;
  setTimeout(() => (previewLoading = false), 500);
}

socket.connect();
