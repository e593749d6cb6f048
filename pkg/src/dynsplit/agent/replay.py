from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int  # 1-based split index
    r: float
    s_next: np.ndarray
    terminal: bool


class TransitionBatch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling from its own RNG stream."""

    def __init__(self, capacity: int, state_dim: int, rng: np.random.Generator):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros(capacity, dtype=np.int64)
        self._r = np.zeros(capacity)
        self._s2 = np.zeros((capacity, state_dim))
        self._done = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        if tr.a < 1:
            raise ValueError(f"action {tr.a} is not a 1-based split index")
        if not (np.all(np.isfinite(tr.s)) and np.all(np.isfinite(tr.s_next)) and np.isfinite(tr.r)):
            raise ValueError("transition contains non-finite values")
        i = self._next
        self._s[i] = tr.s
        self._a[i] = tr.a
        self._r[i] = tr.r
        self._s2[i] = tr.s_next
        self._done[i] = tr.terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_indices(self, n: int) -> np.ndarray:
        if self._size < n:
            raise ValueError(f"buffer holds {self._size} transitions, asked for {n}")
        return self.rng.integers(0, self._size, size=n)

    def sample(self, n: int) -> TransitionBatch:
        idx = self.sample_indices(n)
        return TransitionBatch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx], self._done[idx])
