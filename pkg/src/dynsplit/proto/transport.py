"""Ordered, reliable frame delivery: in-process loopback and TCP streams.

Stream framing puts a 4-byte little-endian length in front of every frame.
"""

from __future__ import annotations

import collections
import socket
import struct
import threading

from .codec import DEFAULT_MAX_PAYLOAD, HEADER_SIZE, OversizedFrame

_LEN = struct.Struct("<I")
DEFAULT_MAX_FRAME = HEADER_SIZE + DEFAULT_MAX_PAYLOAD


class TransportError(ConnectionError):
    def __init__(self, message: str, device_id: int | None = None):
        where = "" if device_id is None else f" [device {device_id}]"
        super().__init__(message + where)
        self.device_id = device_id


class LoopbackEndpoint:
    def __init__(self) -> None:
        self.inbox: collections.deque[bytes] = collections.deque()
        self.peer: LoopbackEndpoint | None = None
        self.closed = False

    def send(self, frame: bytes) -> None:
        if self.closed or self.peer is None or self.peer.closed:
            raise TransportError("loopback endpoint closed")
        self.peer.inbox.append(bytes(frame))

    def recv(self) -> bytes:
        if not self.inbox:
            raise TransportError("no frame pending on loopback endpoint")
        return self.inbox.popleft()

    def pending(self) -> int:
        return len(self.inbox)

    def close(self) -> None:
        self.closed = True


def loopback_transport() -> tuple[LoopbackEndpoint, LoopbackEndpoint]:
    a, b = LoopbackEndpoint(), LoopbackEndpoint()
    a.peer, b.peer = b, a
    return a, b


def parse_address(address: str) -> tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must be HOST:PORT, got {address!r}")
    return host, int(port)


class StreamEndpoint:
    def __init__(self, sock: socket.socket, max_frame: int = DEFAULT_MAX_FRAME):
        self.sock = sock
        self.max_frame = max_frame
        self._lock = threading.Lock()
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send(self, frame: bytes) -> None:
        if len(frame) > self.max_frame:
            raise OversizedFrame(f"frame of {len(frame)} bytes exceeds cap {self.max_frame}")
        try:
            with self._lock:
                self.sock.sendall(_LEN.pack(len(frame)) + frame)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self.sock.recv(min(n - len(buf), 1 << 20))
            except OSError as exc:
                raise TransportError(f"recv failed: {exc}") from exc
            if not chunk:
                raise TransportError(f"connection closed with {n - len(buf)} bytes outstanding")
            buf += chunk
        return bytes(buf)

    def recv(self) -> bytes:
        (length,) = _LEN.unpack(self._read_exact(_LEN.size))
        if length > self.max_frame:
            raise OversizedFrame(f"length prefix {length} exceeds cap {self.max_frame}")
        return self._read_exact(length)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class StreamListener:
    def __init__(self, address: str = "127.0.0.1:0", backlog: int = 64):
        host, port = parse_address(address)
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.listen(backlog)

    @property
    def address(self) -> str:
        host, port = self.sock.getsockname()[:2]
        return f"{host}:{port}"

    def accept(self) -> StreamEndpoint:
        conn, _ = self.sock.accept()
        return StreamEndpoint(conn)

    def close(self) -> None:
        self.sock.close()


def stream_transport(address: str = "127.0.0.1:0") -> StreamListener:
    """Bind a listening socket; peers reach it through :func:`stream_connect`."""
    return StreamListener(address)


def stream_connect(address: str, timeout: float | None = 30.0) -> StreamEndpoint:
    host, port = parse_address(address)
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise TransportError(f"cannot connect to {address}: {exc}") from exc
    sock.settimeout(None)
    return StreamEndpoint(sock)
