"""Parameter server: canonical weights, server-side split execution, merging."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..proto import messages
from ..proto.codec import DEFAULT_MAX_PAYLOAD, Message, MsgType, decode, encode
from ..proto.transport import StreamEndpoint, StreamListener, TransportError
from ..splitnet.network import ParamStore, ProtocolOrderError, ShapeError, forward_server_and_loss

log = logging.getLogger(__name__)


@dataclass
class SegmentUpdate:
    device_id: int
    lo: int
    deltas: list[tuple[np.ndarray, ...]]  # per layer, same order as ParamStore.layer_arrays

    @property
    def hi(self) -> int:
        return self.lo + len(self.deltas)


def segment_delta(device_id: int, lo: int, before: ParamStore, after: ParamStore) -> SegmentUpdate:
    """Difference between two stores covering the same layers starting at ``lo``."""
    deltas = []
    for i in range(after.n_layers):
        deltas.append(tuple(a - b for a, b in zip(after.layer_arrays(i), before.layer_arrays(i))))
    return SegmentUpdate(device_id, lo, deltas)


def merge_client_segment(store: ParamStore, updates: Sequence[SegmentUpdate], mode: str) -> None:
    """Fold device deltas into the canonical store.

    ``sequential`` applies each update in device order; ``averaged`` averages
    the deltas of all updates touching a layer, then applies once. AdamW step
    counters advance by one per applied update (sequential) or per touched
    layer (averaged).
    """
    ordered = sorted(updates, key=lambda u: (u.device_id, u.lo))
    for u in ordered:
        if u.lo < 0 or u.hi > store.n_layers:
            raise ShapeError(f"update from device {u.device_id} covers layers [{u.lo}, {u.hi})")
        for j, layer_deltas in enumerate(u.deltas):
            for target, d in zip(store.layer_arrays(u.lo + j), layer_deltas):
                if target.shape != d.shape:
                    raise ShapeError(f"device {u.device_id}, layer {u.lo + j}: delta {d.shape} vs {target.shape}")
    if mode == "sequential":
        for u in ordered:
            for j, layer_deltas in enumerate(u.deltas):
                for target, d in zip(store.layer_arrays(u.lo + j), layer_deltas):
                    target += d
                store.steps[u.lo + j] += 1
    elif mode == "averaged":
        for layer in range(store.n_layers):
            touching = [u.deltas[layer - u.lo] for u in ordered if u.lo <= layer < u.hi]
            if not touching:
                continue
            for a, target in enumerate(store.layer_arrays(layer)):
                total = np.zeros_like(target)
                for layer_deltas in touching:
                    total += layer_deltas[a]
                target += total / len(touching)
            store.steps[layer] += 1
    else:
        raise ValueError(f"unknown merge mode {mode!r}")


class ParameterServer:
    """Answers split-learning frames against the canonical :class:`ParamStore`.

    In ``averaged`` mode every request reads the round-start snapshot and all
    updates are staged until :meth:`commit_round`.
    """

    def __init__(self, store: ParamStore, lr: float, weight_decay: float, merge_mode: str = "sequential",
                 max_payload: int = DEFAULT_MAX_PAYLOAD):
        if merge_mode not in ("sequential", "averaged"):
            raise ValueError(f"unknown merge mode {merge_mode!r}")
        self.store = store
        self.lr = lr
        self.weight_decay = weight_decay
        self.merge_mode = merge_mode
        self.max_payload = max_payload
        self.errors: dict[int, BaseException] = {}
        self._lock = threading.Lock()
        self._bases: dict[int, ParamStore] = {}
        self._staged: list[SegmentUpdate] = []
        self._snapshot: ParamStore | None = None

    def begin_round(self) -> None:
        if self.merge_mode == "averaged":
            self._snapshot = self.store.copy()
            self._staged = []

    def commit_round(self) -> None:
        if self.merge_mode == "averaged":
            merge_client_segment(self.store, self._staged, "averaged")
            self._staged = []
            self._snapshot = None

    def _source(self) -> ParamStore:
        if self.merge_mode == "averaged":
            if self._snapshot is None:
                raise ProtocolOrderError("averaged mode needs begin_round() before device traffic")
            return self._snapshot
        return self.store

    def handle(self, frame: bytes) -> bytes:
        msg = decode(frame, self.max_payload)
        with self._lock:
            if msg.msg_type == MsgType.SMASHED:
                reply = self._on_smashed(msg)
            elif msg.msg_type == MsgType.PARAM_PULL_REQUEST:
                reply = self._on_pull(msg)
            elif msg.msg_type == MsgType.PARAM_PUSH:
                reply = self._on_push(msg)
            else:
                raise ProtocolOrderError(f"server does not accept {msg.msg_type.name} frames")
        return encode(reply, self.max_payload)

    def _on_smashed(self, msg: Message) -> Message:
        smashed = messages.smashed_from(msg)
        if self.merge_mode == "sequential":
            result = forward_server_and_loss(self.store, smashed, self.lr, self.weight_decay)
        else:
            base = self._source()
            work = base.copy()
            result = forward_server_and_loss(work, smashed, self.lr, self.weight_decay)
            lo = smashed.cut
            self._staged.append(segment_delta(msg.device_id, lo, base.segment(lo, base.n_layers),
                                              work.segment(lo, work.n_layers)))
        return messages.grad_message(result)

    def _on_pull(self, msg: Message) -> Message:
        cut = msg.cut_index
        source = self._source()
        if not 1 <= cut < source.n_layers:
            raise ShapeError(f"cannot serve a client segment of {cut} layers")
        seg = source.segment(0, cut)
        reply = messages.segment_message(MsgType.PARAM_SEGMENT, msg.round, msg.device_id, seg)
        # what the device will actually hold after float32 transfer
        self._bases[msg.device_id] = messages.segment_from(reply, source.activations)
        return reply

    def _on_push(self, msg: Message) -> Message:
        base = self._bases.pop(msg.device_id, None)
        if base is None:
            raise ProtocolOrderError(f"device {msg.device_id} pushed without pulling")
        pushed = messages.segment_from(msg, self.store.activations)
        if pushed.n_layers != base.n_layers:
            raise ShapeError(f"device {msg.device_id} pushed {pushed.n_layers} layers, pulled {base.n_layers}")
        update = segment_delta(msg.device_id, 0, base, pushed)
        if self.merge_mode == "sequential":
            merge_client_segment(self.store, [update], "sequential")
        else:
            self._staged.append(update)
        return messages.ack(msg.round, msg.device_id)

    def serve_pending(self, endpoint) -> None:
        """Drain a loopback endpoint, answering each frame in order."""
        while endpoint.pending():
            endpoint.send(self.handle(endpoint.recv()))


class StreamServer:
    """Accept loop plus one handler thread per device connection."""

    def __init__(self, server: ParameterServer, listener: StreamListener):
        self.server = server
        self.listener = listener
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, name="ps-accept", daemon=True)
        self._stopping = False

    @property
    def address(self) -> str:
        return self.listener.address

    def start(self) -> "StreamServer":
        self._accept_thread.start()
        return self

    def _accept_loop(self) -> None:
        while not self._stopping:
            try:
                conn = self.listener.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve(self, conn: StreamEndpoint) -> None:
        device_id = None
        try:
            while True:
                try:
                    frame = conn.recv()
                except TransportError:
                    return
                if len(frame) >= 16:
                    device_id = int.from_bytes(frame[11:13], "little")
                conn.send(self.server.handle(frame))
        except Exception as exc:  # surfaced to the driver through server.errors
            log.error("server-side failure for device %s: %s", device_id, exc)
            self.server.errors[-1 if device_id is None else device_id] = exc
        finally:
            conn.close()

    def stop(self) -> None:
        self._stopping = True
        self.listener.close()
        for t in self._threads:
            t.join(timeout=5)
