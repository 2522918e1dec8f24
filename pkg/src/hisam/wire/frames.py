"""Frame layout: kind (1 byte) | length (u16 big-endian) | payload."""
from __future__ import annotations

import asyncio
import struct
from dataclasses import dataclass
from enum import IntEnum

from ..errors import IncompleteFrame, ProtocolError

HEADER = struct.Struct(">BH")
MAX_PAYLOAD = 0xFFFF

REGISTER_BODY = struct.Struct(">Id")       # device id, demand
STATUS_BODY = struct.Struct(">B")
BROADCAST_BODY = struct.Struct(">dddB")    # X(m), R, F_m, final flag
ALPHA_BODY = struct.Struct(">d")
EVICT_BODY = struct.Struct(">d")           # ledger workload at eviction


class FrameKind(IntEnum):
    REGISTER = 1
    NEGOTIATE_BROADCAST = 2
    ALPHA_REPORT = 3
    AUTH1 = 4
    AUTH2 = 5
    AUTH3 = 6
    EVICT = 7


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    payload: bytes = b""


def encode_frame(kind, payload=b"") -> bytes:
    kind = FrameKind(kind)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(kind, len(payload)) + bytes(payload)


def _kind(value) -> FrameKind:
    try:
        return FrameKind(value)
    except ValueError:
        raise ProtocolError(f"unknown frame kind {value}") from None


def decode_frame(data) -> tuple[Frame, int]:
    """Decode one frame from the front of ``data``.

    Returns ``(frame, bytes_consumed)``.  Raises :class:`IncompleteFrame` when
    ``data`` holds only part of a frame; feed more bytes and call again.
    """
    data = memoryview(data)
    if len(data) >= 1:
        kind = _kind(data[0])
    if len(data) < HEADER.size:
        raise IncompleteFrame(HEADER.size - len(data))
    _, length = HEADER.unpack_from(data)
    end = HEADER.size + length
    if len(data) < end:
        raise IncompleteFrame(end - len(data))
    return Frame(kind, bytes(data[HEADER.size:end])), end


class FrameBuffer:
    """Accumulates stream bytes and yields complete frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data):
        self._buf.extend(data)
        frames = []
        while True:
            try:
                frame, n = decode_frame(self._buf)
            except IncompleteFrame:
                return frames
            del self._buf[:n]
            frames.append(frame)

    def __len__(self):
        return len(self._buf)


async def read_frame(reader: asyncio.StreamReader) -> Frame:
    """Read one frame; raises ``asyncio.IncompleteReadError`` on EOF."""
    header = await reader.readexactly(HEADER.size)
    kind = _kind(header[0])
    _, length = HEADER.unpack(header)
    payload = await reader.readexactly(length) if length else b""
    return Frame(kind, payload)


def expect(frame: Frame, kind: FrameKind, body: struct.Struct | None = None):
    if frame.kind is not kind:
        raise ProtocolError(f"expected {kind.name}, got {frame.kind.name}")
    if body is not None:
        if len(frame.payload) != body.size:
            raise ProtocolError(f"{kind.name} payload must be {body.size} bytes")
        return body.unpack(frame.payload)
    return frame.payload
