from __future__ import annotations

import struct
import threading
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dynsplit.proto import (
    HEADER_SIZE,
    BadMagic,
    BadVersion,
    ChecksumError,
    MalformedPayload,
    Message,
    MsgType,
    OversizedFrame,
    ProtocolError,
    TransportError,
    TruncatedFrame,
    UnknownMessageType,
    decode,
    encode,
    loopback_transport,
    stream_connect,
    stream_transport,
)
from dynsplit.proto import messages
from dynsplit.splitnet.network import GradAtCut, NetworkSpec, SmashedBatch, build_network


def _smashed():
    acts = np.arange(6, dtype=np.float32).reshape(2, 3) / 7
    return Message(MsgType.SMASHED, 12, 3, 2, (acts, np.array([1.0, 4.0], dtype=np.float32)))


def test_round_trip_2x3():
    msg = _smashed()
    out = decode(encode(msg))
    assert out == msg
    assert out.tensors[0].shape == (2, 3)
    assert out.tensors[0].tobytes() == msg.tensors[0].tobytes()


def test_header_layout():
    frame = encode(_smashed())
    assert frame[:4] == b"RDSP"
    assert struct.unpack_from("<H", frame, 4)[0] == 1
    assert frame[6] == 1
    assert struct.unpack_from("<I", frame, 7)[0] == 12
    assert struct.unpack_from("<H", frame, 11)[0] == 3
    assert frame[13] == 2
    assert struct.unpack_from("<I", frame, 14)[0] == len(frame) - HEADER_SIZE
    payload = frame[HEADER_SIZE:]
    assert struct.unpack("<I", payload[-4:])[0] == zlib.crc32(payload[:-4])


def test_payload_byte_flip_is_crc_error():
    frame = bytearray(encode(_smashed()))
    for pos in range(HEADER_SIZE, len(frame) - 4):
        bad = bytearray(frame)
        bad[pos] ^= 0x40
        with pytest.raises(ChecksumError):
            decode(bytes(bad))


def test_empty_tensor():
    msg = Message(MsgType.PARAM_PUSH, 0, 0, 0, (np.zeros((0, 5), np.float32), np.zeros((3, 0, 2), np.float32)))
    out = decode(encode(msg))
    assert [t.shape for t in out.tensors] == [(0, 5), (3, 0, 2)]
    assert out == msg


def test_distinct_header_errors():
    frame = bytearray(encode(_smashed()))
    cases = [
        (lambda f: f.__setitem__(slice(0, 4), b"XXXX"), BadMagic),
        (lambda f: f.__setitem__(slice(4, 6), b"\x02\x00"), BadVersion),
        (lambda f: f.__setitem__(6, 9), UnknownMessageType),
    ]
    for mutate, err in cases:
        bad = bytearray(frame)
        mutate(bad)
        with pytest.raises(err):
            decode(bytes(bad))
    with pytest.raises(MalformedPayload):
        decode(bytes(frame) + b"\x00")
    assert len({BadMagic, BadVersion, UnknownMessageType, ChecksumError, OversizedFrame,
                MalformedPayload, TruncatedFrame}) == 7


def test_truncation_reports_sizes():
    frame = encode(_smashed())
    with pytest.raises(TruncatedFrame) as info:
        decode(frame[:-3])
    assert info.value.expected == len(frame)
    assert info.value.actual == len(frame) - 3
    with pytest.raises(TruncatedFrame) as info:
        decode(frame[:10])
    assert (info.value.expected, info.value.actual) == (HEADER_SIZE, 10)


def test_inconsistent_tensor_table_is_malformed():
    body = bytes([1, 2]) + struct.pack("<2I", 4, 4) + b"\x00" * 8  # claims 64 bytes, carries 8
    frame = struct.pack("<4sHBIHBI", b"RDSP", 1, 1, 0, 0, 0, len(body) + 4) + body + struct.pack("<I", zlib.crc32(body))
    with pytest.raises(MalformedPayload):
        decode(frame)


def test_oversized_rejected_from_header():
    header = struct.pack("<4sHBIHBI", b"RDSP", 1, 1, 0, 0, 0, 2**32 - 1)
    with pytest.raises(OversizedFrame):
        decode(header)  # no payload bytes present: the cap fires before any buffer is needed
    msg = Message(MsgType.SMASHED, 0, 0, 1, (np.zeros((100, 100), np.float32),))
    with pytest.raises(OversizedFrame):
        encode(msg, max_payload=1000)
    with pytest.raises(OversizedFrame):
        decode(encode(msg), max_payload=1000)


def test_encoder_rejects_bad_values():
    for bad in (np.array([np.nan]), np.array([np.inf]), np.array([1e300])):
        with pytest.raises(ValueError):
            encode(Message(MsgType.SMASHED, 0, 0, 1, (bad,)))
    with pytest.raises(ValueError):
        encode(Message(MsgType.SMASHED, 2**32, 0, 1, ()))
    with pytest.raises(ValueError):
        encode(Message(MsgType.SMASHED, 0, 0, 1, (np.zeros((1,) * 9),)))


_finite32 = st.floats(width=32, allow_nan=False, allow_infinity=False)
_tensor = hnp.arrays(np.float32, hnp.array_shapes(min_dims=0, max_dims=4, min_side=0, max_side=5), elements=_finite32)


@given(st.sampled_from(list(MsgType)), st.integers(0, 2**32 - 1), st.integers(0, 2**16 - 1),
       st.integers(0, 255), st.lists(_tensor, max_size=6))
def test_round_trip_property(kind, rnd, dev, cut, tensors):
    msg = Message(kind, rnd, dev, cut, tuple(tensors))
    frame = encode(msg)
    assert decode(frame) == msg
    assert encode(decode(frame)) == frame


@given(st.binary(max_size=256))
def test_fuzz_raw_bytes(data):
    try:
        decode(data)
    except ProtocolError:
        pass


@given(st.integers(0, 200), st.integers(0, 255))
def test_fuzz_mutated_frames(pos, value):
    frame = bytearray(encode(_smashed()))
    frame[pos % len(frame)] = value
    try:
        decode(bytes(frame))
    except ProtocolError:
        pass


def test_loopback_order():
    a, b = loopback_transport()
    frames = [encode(Message(MsgType.SMASHED, i, i % 7, 1, (np.full((2, 2), i, np.float32),))) for i in range(1000)]
    for f in frames:
        a.send(f)
    received = [b.recv() for _ in range(1000)]
    assert received == frames
    with pytest.raises(TransportError):
        b.recv()
    b.close()
    with pytest.raises(TransportError):
        a.send(frames[0])


def test_stream_round_trip():
    listener = stream_transport("127.0.0.1:0")
    frames = [encode(_smashed()), encode(Message(MsgType.PARAM_PULL_REQUEST, 1, 2, 3))]
    echoed = []

    def serve():
        conn = listener.accept()
        for _ in frames:
            conn.send(conn.recv())
        conn.close()

    t = threading.Thread(target=serve)
    t.start()
    client = stream_connect(listener.address)
    for f in frames:
        client.send(f)
        echoed.append(client.recv())
    t.join()
    with pytest.raises(TransportError):
        client.recv()
    client.close()
    listener.close()
    assert echoed == frames


def test_stream_rejects_oversized_length_prefix():
    listener = stream_transport("127.0.0.1:0")
    client = stream_connect(listener.address)
    conn = listener.accept()
    conn.max_frame = 64
    client.sock.sendall(struct.pack("<I", 1 << 30))
    with pytest.raises(OversizedFrame):
        conn.recv()
    for end in (client, conn, listener):
        end.close()


def test_connect_failure_is_transport_error():
    listener = stream_transport("127.0.0.1:0")
    address = listener.address
    listener.close()
    with pytest.raises(TransportError):
        stream_connect(address, timeout=1.0)


def test_message_helpers_round_trip():
    store = build_network(NetworkSpec.mlp([4, 6, 5, 3]), seed=1)
    seg = store.segment(0, 2)
    msg = decode(encode(messages.segment_message(MsgType.PARAM_SEGMENT, 5, 2, seg)))
    back = messages.segment_from(msg, store.activations)
    assert back.n_layers == 2 and len(msg.tensors) == 13
    for a, b in zip(back.layer_arrays(1), seg.layer_arrays(1)):
        assert np.array_equal(a, messages.wire_cast(b))
    smashed = SmashedBatch(3, 1, 2, np.ones((4, 5)) / 3, np.array([0, 1, 2, 0]))
    s2 = messages.smashed_from(decode(encode(messages.smashed_message(smashed))))
    assert s2.labels.tolist() == [0, 1, 2, 0] and s2.cut == 2
    g = GradAtCut(3, 1, 2, np.ones((4, 5)), 0.5, 0.75)
    g2 = messages.grad_from(decode(encode(messages.grad_message(g))))
    assert (g2.loss, g2.accuracy) == (0.5, 0.75)
    with pytest.raises(MalformedPayload):
        messages.grad_from(decode(encode(messages.smashed_message(smashed))))
    assert decode(encode(messages.ack(1, 2))).tensors == ()
