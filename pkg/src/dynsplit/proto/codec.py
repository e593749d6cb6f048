"""Binary frame codec.

Frame = 18-byte header + payload, all little-endian::

    magic "RDSP" | version u16 | msg_type u8 | round u32 | device_id u16 |
    cut_index u8 | payload_len u32

Payload = n_tensors u8, then per tensor ``ndims u8, dims u32 * ndims,
float32 data (row-major)``, then a CRC-32 of every preceding payload byte.
See docs/protocol.md for the full reference.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"RDSP"
VERSION = 1
HEADER = struct.Struct("<4sHBIHBI")
HEADER_SIZE = HEADER.size
DEFAULT_MAX_PAYLOAD = 64 * 1024 * 1024
MAX_NDIMS = 8
_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")


class MsgType(enum.IntEnum):
    SMASHED = 1
    GRAD_AT_CUT = 2
    PARAM_PULL_REQUEST = 3
    PARAM_SEGMENT = 4
    PARAM_PUSH = 5


class ProtocolError(ValueError):
    """Base class for every decode rejection."""


class BadMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class UnknownMessageType(ProtocolError):
    pass


class ChecksumError(ProtocolError):
    pass


class OversizedFrame(ProtocolError):
    pass


class MalformedPayload(ProtocolError):
    pass


class TruncatedFrame(ProtocolError):
    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(f"truncated {what}: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


@dataclass(eq=False)
class Message:
    msg_type: MsgType
    round: int
    device_id: int
    cut_index: int
    tensors: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Message):
            return NotImplemented
        head = (self.msg_type, self.round, self.device_id, self.cut_index)
        if head != (other.msg_type, other.round, other.device_id, other.cut_index):
            return False
        if len(self.tensors) != len(other.tensors):
            return False
        return all(
            a.shape == b.shape and np.asarray(a, _F32).tobytes() == np.asarray(b, _F32).tobytes()
            for a, b in zip(self.tensors, other.tensors)
        )


def _check_range(name: str, value: int, bits: int) -> None:
    if not 0 <= value < (1 << bits):
        raise ValueError(f"{name}={value} does not fit in u{bits}")


def encode(msg: Message, max_payload: int = DEFAULT_MAX_PAYLOAD) -> bytes:
    _check_range("round", msg.round, 32)
    _check_range("device_id", msg.device_id, 16)
    _check_range("cut_index", msg.cut_index, 8)
    if len(msg.tensors) > 255:
        raise ValueError("at most 255 tensors per frame")
    parts = [bytes([len(msg.tensors)])]
    for t in msg.tensors:
        arr = np.asarray(t)
        if arr.ndim > MAX_NDIMS:
            raise ValueError(f"tensor rank {arr.ndim} exceeds {MAX_NDIMS}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("cannot encode non-finite tensor values")
        with np.errstate(over="ignore"):
            data = np.ascontiguousarray(arr, dtype=_F32)
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor values overflow float32")
        parts.append(bytes([arr.ndim]))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(data.tobytes())
    body = b"".join(parts)
    payload = body + _U32.pack(zlib.crc32(body))
    if len(payload) > max_payload:
        raise OversizedFrame(f"payload of {len(payload)} bytes exceeds cap {max_payload}")
    header = HEADER.pack(MAGIC, VERSION, int(msg.msg_type), msg.round, msg.device_id, msg.cut_index, len(payload))
    return header + payload


def decode_header(frame: bytes, max_payload: int = DEFAULT_MAX_PAYLOAD) -> tuple[MsgType, int, int, int, int]:
    if len(frame) < HEADER_SIZE:
        raise TruncatedFrame("header", HEADER_SIZE, len(frame))
    magic, version, mtype, rnd, dev, cut, plen = HEADER.unpack_from(frame)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        kind = MsgType(mtype)
    except ValueError:
        raise UnknownMessageType(f"unknown msg_type {mtype}") from None
    if plen > max_payload:
        raise OversizedFrame(f"payload_len {plen} exceeds cap {max_payload}")
    return kind, rnd, dev, cut, plen


def decode(frame: bytes, max_payload: int = DEFAULT_MAX_PAYLOAD) -> Message:
    frame = bytes(frame)
    kind, rnd, dev, cut, plen = decode_header(frame, max_payload)
    total = HEADER_SIZE + plen
    if len(frame) < total:
        raise TruncatedFrame("frame", total, len(frame))
    if len(frame) > total:
        raise MalformedPayload(f"{len(frame) - total} trailing bytes after payload")
    payload = memoryview(frame)[HEADER_SIZE:]
    if plen < 5:
        raise TruncatedFrame("payload", 5, plen)
    body = payload[:-4]
    (crc,) = _U32.unpack_from(payload, plen - 4)
    if zlib.crc32(body) != crc:
        raise ChecksumError("payload CRC-32 mismatch")

    n_tensors = body[0]
    pos = 1
    tensors = []
    for i in range(n_tensors):
        if pos >= len(body):
            raise MalformedPayload(f"tensor {i}: missing rank byte")
        ndims = body[pos]
        pos += 1
        if ndims > MAX_NDIMS:
            raise MalformedPayload(f"tensor {i}: rank {ndims} exceeds {MAX_NDIMS}")
        if pos + 4 * ndims > len(body):
            raise MalformedPayload(f"tensor {i}: dims run past payload end")
        dims = struct.unpack_from(f"<{ndims}I", body, pos)
        pos += 4 * ndims
        count = 1
        for d in dims:
            count *= d
        nbytes = 4 * count
        if pos + nbytes > len(body):
            raise MalformedPayload(f"tensor {i}: needs {nbytes} data bytes, {len(body) - pos} left")
        arr = np.frombuffer(body, dtype=_F32, count=count, offset=pos).reshape(dims).copy()
        pos += nbytes
        tensors.append(arr)
    if pos != len(body):
        raise MalformedPayload(f"{len(body) - pos} unparsed payload bytes")
    return Message(kind, rnd, dev, cut, tuple(tensors))
