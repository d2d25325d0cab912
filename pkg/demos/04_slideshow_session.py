"""A presenter's session: capture, page around, adjust, persist, reload.

Every remote press is a pure dispatch against the session state; the script
narrates each transition and finishes by proving the manifest round-trip
brings the whole session back.
"""

import pathlib
import tempfile

import numpy as np

from abb import CalibrationProfile, Command, CommandKind, SessionState, dispatch
from abb.raster import Raster
from abb.session import ingest_capture, load, persist

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def press(state: SessionState, kind: CommandKind, value=None):
    new_state, effects = dispatch(state, Command(kind, value))
    names = [type(e).__name__ for e in effects]
    cursor = "-" if new_state.cursor is None else str(new_state.cursor + 1)
    print(
        f"  {kind.name:14s} -> slide {cursor}/{len(new_state.filtered())}"
        f"  grid={'on' if new_state.grid.enabled else 'off'}"
        f"  mode={new_state.mode.value:9s}  effects={names}"
    )
    return new_state


def main():
    rng = np.random.default_rng(42)
    prof = CalibrationProfile.identity(640, 480)

    with tempfile.TemporaryDirectory() as tmp:
        session_dir = pathlib.Path(tmp) / "session"
        state = SessionState()
        print("capturing three board drawings:")
        for _ in range(3):
            frame = Raster(rng.integers(0, 256, size=(480, 640, 3), dtype=np.uint8))
            state = ingest_capture(state, frame, prof, session_dir)
            print(f"  captured -> slide {state.cursor + 1}/{len(state.filtered())}")

        print("\npaging and adjusting with the remote:")
        state = press(state, CommandKind.PREV)
        state = press(state, CommandKind.PREV)
        state = press(state, CommandKind.PREV)  # clamped at the first slide
        state = press(state, CommandKind.BRIGHTNESS, 20)
        state = press(state, CommandKind.CONTRAST, 30)
        state = press(state, CommandKind.ROTATE_STEP)
        state = press(state, CommandKind.TOGGLE_GRID)
        state = press(state, CommandKind.BLANK)
        state = press(state, CommandKind.BLANK)
        state = press(state, CommandKind.RECALL, 2)

        adj = state.library[0].adjustments
        print(
            f"\nslide 1 adjustments: contrast {adj.levels.contrast}, "
            f"brightness {adj.levels.brightness}, quarter turns {adj.quarter_turns}"
        )

        persist(state, session_dir)
        reloaded = load(session_dir)
        same = reloaded.library == state.library and reloaded.grid == state.grid
        print(f"\npersisted to manifest.json and reloaded: library+grid identical = {same}")
        print("manifest at", session_dir / "manifest.json")


if __name__ == "__main__":
    main()
