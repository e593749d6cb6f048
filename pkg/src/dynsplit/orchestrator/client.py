"""Device side of one split-learning step, spoken entirely over the wire protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..proto import messages
from ..proto.codec import Message, MsgType, ProtocolError, decode, encode
from ..proto.transport import TransportError
from ..splitnet.network import (
    ParamStore,
    ProtocolOrderError,
    SplitNetError,
    adamw_step,
    backward_client,
    forward_client,
    grad_norm,
)


class RoundError(RuntimeError):
    """Round-fatal failure attributed to one device."""

    def __init__(self, device_id: int, round_id: int, cause: BaseException):
        super().__init__(f"round {round_id}, device {device_id}: {type(cause).__name__}: {cause}")
        self.device_id = device_id
        self.round_id = round_id
        self.cause = cause


@dataclass
class StepResult:
    loss: float
    batch_acc: float
    client_grad_norm: float


class DeviceClient:
    """Pull, forward, exchange, backward, update, push.

    ``pump`` is called after every send; loopback transports use it to let
    the server answer synchronously.
    """

    def __init__(self, device_id: int, endpoint, activations: list[str],
                 pump: Callable[[], None] | None = None):
        self.device_id = device_id
        self.endpoint = endpoint
        self.activations = activations
        self.pump = pump

    def _request(self, msg: Message, expect: MsgType) -> Message:
        self.endpoint.send(encode(msg))
        if self.pump is not None:
            self.pump()
        reply = decode(self.endpoint.recv())
        if reply.msg_type != expect or reply.device_id != self.device_id:
            raise ProtocolOrderError(
                f"expected {expect.name} for device {self.device_id}, got {reply.msg_type.name} "
                f"for device {reply.device_id}")
        return reply

    def train_step(self, round_id: int, cut: int, x: np.ndarray, y: np.ndarray,
                   lr: float, weight_decay: float) -> StepResult:
        try:
            seg_msg = self._request(messages.pull_request(round_id, self.device_id, cut), MsgType.PARAM_SEGMENT)
            local: ParamStore = messages.segment_from(seg_msg, self.activations)
            if local.n_layers != cut:
                raise ProtocolOrderError(f"pulled {local.n_layers} layers for a cut of {cut}")
            smashed = forward_client(local, cut, x, y, round_id, self.device_id)
            grad = messages.grad_from(self._request(messages.smashed_message(smashed), MsgType.GRAD_AT_CUT))
            grads = backward_client(local, grad)
            adamw_step(local, range(cut), grads, lr, weight_decay)
            self._request(messages.segment_message(MsgType.PARAM_PUSH, round_id, self.device_id, local),
                          MsgType.PARAM_SEGMENT)
        except (TransportError, ProtocolError, SplitNetError) as exc:
            raise RoundError(self.device_id, round_id, exc) from exc
        return StepResult(grad.loss, grad.accuracy, grad_norm(grads))

    def close(self) -> None:
        self.endpoint.close()
