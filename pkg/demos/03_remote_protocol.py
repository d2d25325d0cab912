"""The remote-command wire protocol, byte by byte.

Shows the framed binary encoding used on the serial path (start byte,
command id, length, payload, XOR checksum), what the resynchronizing decoder
does with noise and corruption, and the equivalent JSON messages the browser
remote sends over the WebSocket.
"""

from abb.protocol import (
    Command,
    CommandKind,
    decode_stream,
    encode_frame,
    json_decode,
    json_encode,
)


def show(label, data: bytes):
    print(f"{label:28s} {' '.join(f'{b:02X}' for b in data)}")


def main():
    print("-- encoding --")
    show("Next", encode_frame(Command(CommandKind.NEXT)))
    show("Brightness(+10)", encode_frame(Command(CommandKind.BRIGHTNESS, 10)))
    show("Recall(258)", encode_frame(Command(CommandKind.RECALL, 258)))

    print("\n-- a noisy serial stream --")
    stream = (
        b"\x13\x37"  # line noise before the first frame
        + encode_frame(Command(CommandKind.TOGGLE_GRID))
        + b"\xab\x07\x01\x0a\xff"  # brightness frame with a corrupted checksum
        + encode_frame(Command(CommandKind.CAPTURE))
        + encode_frame(Command(CommandKind.RECALL, 7))[:4]  # cut off mid-frame
    )
    show("wire bytes", stream)
    commands, errors, remainder = decode_stream(stream)
    print("decoded:", [c.kind.name for c in commands])
    print("diagnostics:", [f"{e.kind.value}@{e.offset}" for e in errors])
    show("remainder (kept for later)", remainder)

    print("\n-- completing the cut-off frame on the next read --")
    rest = encode_frame(Command(CommandKind.RECALL, 7))[4:]
    commands, errors, remainder = decode_stream(remainder + rest)
    print("decoded:", [(c.kind.name, c.value) for c in commands])

    print("\n-- the JSON mirror used by the browser remote --")
    for cmd in (
        Command(CommandKind.NEXT),
        Command(CommandKind.CONTRAST, -25),
        Command(CommandKind.RECALL, 258),
    ):
        text = json_encode(cmd)
        assert json_decode(text) == cmd
        print(f"{cmd.kind.name:10s} <-> {text}")


if __name__ == "__main__":
    main()
