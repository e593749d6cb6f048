"""Conversions between split-learning values and wire messages."""

from __future__ import annotations

import numpy as np

from ..splitnet.network import GradAtCut, ParamStore, SmashedBatch
from .codec import MalformedPayload, Message, MsgType

ARRAYS_PER_LAYER = 6  # W, b, m_W, v_W, m_b, v_b


def smashed_message(s: SmashedBatch) -> Message:
    return Message(MsgType.SMASHED, s.round_id, s.device_id, s.cut,
                   (s.activations, np.asarray(s.labels, dtype=np.float64)))


def smashed_from(msg: Message) -> SmashedBatch:
    _expect(msg, MsgType.SMASHED, 2)
    acts, labels = msg.tensors
    if acts.ndim != 2 or labels.shape != (acts.shape[0],):
        raise MalformedPayload("smashed batch needs (B, W) activations and (B,) labels")
    return SmashedBatch(msg.round, msg.device_id, msg.cut_index, acts.astype(np.float64),
                        labels.astype(np.int64))


def grad_message(g: GradAtCut) -> Message:
    return Message(MsgType.GRAD_AT_CUT, g.round_id, g.device_id, g.cut,
                   (g.grad, np.array([g.loss, g.accuracy])))


def grad_from(msg: Message) -> GradAtCut:
    _expect(msg, MsgType.GRAD_AT_CUT, 2)
    grad, scalars = msg.tensors
    if scalars.shape != (2,):
        raise MalformedPayload("grad_at_cut needs a [loss, accuracy] tensor")
    return GradAtCut(msg.round, msg.device_id, msg.cut_index, grad.astype(np.float64),
                     float(scalars[0]), float(scalars[1]))


def pull_request(round_id: int, device_id: int, cut: int) -> Message:
    return Message(MsgType.PARAM_PULL_REQUEST, round_id, device_id, cut, ())


def segment_message(kind: MsgType, round_id: int, device_id: int, store: ParamStore) -> Message:
    """All layers of ``store`` plus its per-layer AdamW step counters."""
    tensors: list[np.ndarray] = []
    for i in range(store.n_layers):
        tensors.extend(store.layer_arrays(i))
    tensors.append(store.steps.astype(np.float64))
    return Message(kind, round_id, device_id, store.n_layers, tuple(tensors))


def segment_from(msg: Message, activations: list[str]) -> ParamStore:
    n = msg.cut_index
    if len(msg.tensors) != ARRAYS_PER_LAYER * n + 1:
        raise MalformedPayload(f"segment of {n} layers needs {ARRAYS_PER_LAYER * n + 1} tensors")
    t = [a.astype(np.float64) for a in msg.tensors]
    cols = [t[j:ARRAYS_PER_LAYER * n:ARRAYS_PER_LAYER] for j in range(ARRAYS_PER_LAYER)]
    steps = t[-1]
    if steps.shape != (n,):
        raise MalformedPayload("step counter tensor has the wrong shape")
    return ParamStore(
        weights=cols[0], biases=cols[1], activations=list(activations[:n]),
        m_w=cols[2], v_w=cols[3], m_b=cols[4], v_b=cols[5],
        steps=steps.astype(np.int64),
    )


def ack(round_id: int, device_id: int) -> Message:
    """Empty PARAM_SEGMENT acknowledging a PARAM_PUSH."""
    return Message(MsgType.PARAM_SEGMENT, round_id, device_id, 0, ())


def _expect(msg: Message, kind: MsgType, n_tensors: int) -> None:
    if msg.msg_type != kind:
        raise MalformedPayload(f"expected {kind.name}, got {msg.msg_type.name}")
    if len(msg.tensors) != n_tensors:
        raise MalformedPayload(f"{kind.name} carries {n_tensors} tensors, got {len(msg.tensors)}")


def wire_cast(a: np.ndarray) -> np.ndarray:
    """``a`` as it arrives after a trip through the float32 wire format."""
    return np.asarray(a, dtype=np.float32).astype(np.float64)
