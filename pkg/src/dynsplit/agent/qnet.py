"""Two-layer Q-network (state -> 128 ReLU -> K) with DQN updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..splitnet.gradcheck import numeric_gradient, relative_error
from ..splitnet.network import adamw_update
from .replay import ReplayBuffer, TransitionBatch

HIDDEN = 128


@dataclass(eq=False)
class QNetwork:
    w1: np.ndarray  # (state_dim, 128)
    b1: np.ndarray
    w2: np.ndarray  # (128, K)
    b2: np.ndarray
    moments: list[np.ndarray] | None = None  # m/v pairs for w1, b1, w2, b2
    t: int = 0

    @classmethod
    def init(cls, state_dim: int, K: int, rng: np.random.Generator, hidden: int = HIDDEN) -> "QNetwork":
        if state_dim not in (2, 3):
            raise ValueError("state_dim must be 2 or 3")
        w1 = rng.standard_normal((state_dim, hidden)) * np.sqrt(2.0 / state_dim)
        w2 = rng.standard_normal((hidden, K)) * np.sqrt(2.0 / hidden)
        return cls(w1, np.zeros(hidden), w2, np.zeros(K))

    @classmethod
    def zeros(cls, state_dim: int, K: int, hidden: int = HIDDEN) -> "QNetwork":
        return cls(np.zeros((state_dim, hidden)), np.zeros(hidden), np.zeros((hidden, K)), np.zeros(K))

    @property
    def state_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def K(self) -> int:
        return self.w2.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> "QNetwork":
        net = QNetwork(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(), t=self.t)
        if self.moments is not None:
            net.moments = [m.copy() for m in self.moments]
        return net

    def forward(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns ``(q, hidden_pre, hidden_post)`` for a 2-D batch."""
        z = states @ self.w1 + self.b1
        h = np.maximum(z, 0.0)
        return h @ self.w2 + self.b2, z, h


def q_forward(qnet: QNetwork, state: np.ndarray) -> np.ndarray:
    """Q-values for one state (1-D in, K out) or a batch (2-D in, (n, K) out)."""
    s = np.asarray(state, dtype=np.float64)
    if s.shape[-1] != qnet.state_dim or s.ndim not in (1, 2):
        raise ValueError(f"state must have trailing dim {qnet.state_dim}, got shape {s.shape}")
    q, _, _ = qnet.forward(s.reshape(-1, qnet.state_dim))
    return q[0] if s.ndim == 1 else q


def bellman_targets(batch: TransitionBatch, target_net: QNetwork, discount: float) -> np.ndarray:
    """``r + discount * max_a' Q_target(s', a')``, or just ``r`` on terminal transitions."""
    rewards = np.asarray(batch.rewards, dtype=np.float64)
    if rewards.size == 0:
        raise ValueError("empty transition batch")
    if not np.all(np.isfinite(rewards)):
        raise ValueError("non-finite reward in batch")
    bootstrap = q_forward(target_net, batch.next_states).max(axis=1)
    return rewards + discount * bootstrap * (1.0 - batch.terminals.astype(np.float64))


def q_gradients(qnet: QNetwork, states: np.ndarray, actions: np.ndarray,
                targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """MSE loss between targets and Q(s, a) and its gradients; ``actions`` are 1-based."""
    q, z, h = qnet.forward(states)
    n = states.shape[0]
    rows = np.arange(n)
    err = q[rows, actions - 1] - targets
    loss = float(np.mean(err * err))
    dq = np.zeros_like(q)
    dq[rows, actions - 1] = 2.0 * err / n
    dw2 = h.T @ dq
    db2 = dq.sum(axis=0)
    dz = (dq @ qnet.w2.T) * (z > 0.0)
    dw1 = states.T @ dz
    db1 = dz.sum(axis=0)
    return loss, [dw1, db1, dw2, db2]


def apply_adamw(qnet: QNetwork, grads: list[np.ndarray], lr: float, weight_decay: float) -> None:
    if qnet.moments is None:
        qnet.moments = [np.zeros_like(p) for p in qnet.params() for _ in (0, 1)]
    qnet.t += 1
    for i, (p, g) in enumerate(zip(qnet.params(), grads)):
        adamw_update(p, g, qnet.moments[2 * i], qnet.moments[2 * i + 1], qnet.t, lr, weight_decay)


def dqn_train_step(qnet: QNetwork, target_net: QNetwork, buffer: ReplayBuffer, *, batch_size: int,
                   discount: float, lr: float, weight_decay: float) -> float | None:
    """One AdamW step on ``qnet``; returns the pre-step loss, or None while the buffer is underfull."""
    if len(buffer) < batch_size:
        return None
    batch = buffer.sample(batch_size)
    targets = bellman_targets(batch, target_net, discount)
    loss, grads = q_gradients(qnet, batch.states, batch.actions, targets)
    apply_adamw(qnet, grads, lr, weight_decay)
    return loss


def sync_target(qnet: QNetwork, target_net: QNetwork) -> None:
    for src, dst in zip(qnet.params(), target_net.params()):
        np.copyto(dst, src)


def q_finite_diff_check(qnet: QNetwork, states: np.ndarray, actions: np.ndarray, targets: np.ndarray,
                        step: float = 1e-5) -> float:
    """Worst relative error of :func:`q_gradients` against central differences."""
    states = np.asarray(states, dtype=np.float64)
    work = qnet.copy()
    _, analytic = q_gradients(work, states, actions, targets)

    def loss() -> float:
        return q_gradients(work, states, actions, targets)[0]

    return max(relative_error(g, numeric_gradient(loss, p, step)) for g, p in zip(analytic, work.params()))
