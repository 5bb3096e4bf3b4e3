"""Length-prefixed binary frames.

Layout: ``length (4, big-endian) | type (1) | version (1) | payload``;
``length`` counts type, version and payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Dict, Optional

from qres.config.constants import WIRE_VERSION
from qres.errors import QresError, Truncated, UnknownType, VersionMismatch, WireError, from_code

HEADER = struct.Struct(">IBB")
MAX_FRAME = 256 * 1024 * 1024


class FrameType(IntEnum):
    REGISTER_SECSLA = 0x01
    SUBMIT_REQUIREMENTS = 0x02
    RANKING_RESULT = 0x03
    GARBLED_CIRCUIT = 0x10
    OT_SENDER = 0x11
    OT_RECEIVER = 0x12
    OT_PAYLOAD = 0x13
    KEYWORD_DONE = 0x14
    SESSION_ABORT = 0x15
    CAC_OPEN = 0x16
    CAC_OPENING = 0x17
    RESOLVE_REQUEST = 0x20
    RESOLVE_RESULT = 0x21
    RELAY = 0x30
    RENDEZVOUS = 0x31
    ACK = 0x40
    ERROR = 0x7F


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""
    version: int = WIRE_VERSION


def frame_encode(frame: Frame) -> bytes:
    return HEADER.pack(len(frame.payload) + 2, int(frame.type), frame.version) + frame.payload


def frame_length(header: bytes) -> int:
    """Body size announced by a 4-byte length prefix."""
    if len(header) < 4:
        raise Truncated(f"frame header needs 4 bytes, got {len(header)}")
    (length,) = struct.unpack(">I", header[:4])
    if length < 2 or length > MAX_FRAME:
        raise Truncated(f"frame length {length} out of range")
    return length


def frame_decode(data: bytes) -> Frame:
    if len(data) < HEADER.size:
        raise Truncated(f"frame needs at least {HEADER.size} bytes, got {len(data)}")
    length, ftype, version = HEADER.unpack_from(data)
    if length != len(data) - 4:
        raise Truncated(f"frame announces {length} bytes after the prefix, got {len(data) - 4}")
    try:
        kind = FrameType(ftype)
    except ValueError:
        raise UnknownType(f"unknown frame type 0x{ftype:02x}") from None
    if version != WIRE_VERSION:
        raise VersionMismatch(f"frame version {version}, expected {WIRE_VERSION}")
    return Frame(kind, bytes(data[HEADER.size :]), version)


# ---------- JSON payloads ----------

def json_frame(ftype: FrameType, obj: Dict[str, Any]) -> Frame:
    return Frame(ftype, json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8"))


def parse_json(frame: Frame) -> Dict[str, Any]:
    try:
        obj = json.loads(frame.payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WireError(f"{frame.type.name} payload is not JSON: {e}") from e
    if not isinstance(obj, dict):
        raise WireError(f"{frame.type.name} payload must be a JSON object")
    return obj


def error_frame(exc: BaseException, ftype: FrameType = FrameType.ERROR) -> Frame:
    code = getattr(exc, "code", "internal")
    return json_frame(ftype, {"code": code, "msg": str(exc) or exc.__class__.__name__})


def raise_for_error(frame: Frame, expected: Optional[FrameType] = None) -> Frame:
    """Turn ERROR / SESSION_ABORT replies back into exceptions; check the reply type."""
    if frame.type in (FrameType.ERROR, FrameType.SESSION_ABORT):
        try:
            body = parse_json(frame)
        except WireError:
            body = {"code": "internal", "msg": frame.payload[:200].decode("utf-8", "replace")}
        raise from_code(str(body.get("code", "internal")), str(body.get("msg", "")))
    if expected is not None and frame.type != expected:
        raise QresError(f"expected {expected.name} reply, got {frame.type.name}")
    return frame


class Reader:
    """Cursor over a binary payload; running short raises ``Truncated``."""

    def __init__(self, data: bytes, what: str = "payload"):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise Truncated(f"{self.what} ends after {len(self.data)} bytes, needed {self.pos + n}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def rest(self) -> bytes:
        return self.take(len(self.data) - self.pos)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise WireError(f"{self.what} has {len(self.data) - self.pos} trailing bytes")
