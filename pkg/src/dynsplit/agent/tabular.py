"""Exact dynamic programming and tabular Q-learning on small finite MDPs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class TabularMDP:
    P: np.ndarray  # (S, A, S) transition probabilities
    R: np.ndarray  # (S, A) expected immediate reward
    discount: float

    def __post_init__(self) -> None:
        S, A, S2 = self.P.shape
        if S != S2 or self.R.shape != (S, A):
            raise ValueError(f"inconsistent shapes P{self.P.shape} R{self.R.shape}")
        if np.any(self.P < 0) or np.max(np.abs(self.P.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("each P(.|s,a) must be a probability vector")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]


def lowest_argmax(q: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Row-wise argmax keeping the lowest index among entries within ``tol`` of the max."""
    q = np.atleast_2d(q)
    best = q.max(axis=1, keepdims=True)
    return np.argmax(q >= best - tol, axis=1)


def q_from_values(mdp: TabularMDP, V: np.ndarray) -> np.ndarray:
    return mdp.R + mdp.discount * mdp.P @ V


def value_iteration(mdp: TabularMDP, tol: float = 1e-10, max_iter: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Optimal values and greedy policy (0-based actions, lowest-index ties)."""
    if mdp.discount >= 1.0:
        raise ValueError("value iteration needs discount < 1")
    V = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        V_new = q_from_values(mdp, V).max(axis=1)
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta < tol:
            break
    else:
        raise RuntimeError("value iteration did not converge")
    Q = q_from_values(mdp, V)
    return V, lowest_argmax(Q, tol=1e-9)


def tabular_q_learning(mdp: TabularMDP, n_steps: int, *, lr: Callable[[int], float],
                       epsilon: float | Callable[[int], float], seed: int,
                       q_init: float = 0.0, episode_len: int | None = None) -> np.ndarray:
    """Off-policy Q-learning on simulated transitions of ``mdp``.

    ``lr`` maps the visit count of the updated (s, a) pair to a step size;
    ``epsilon`` is a constant or a function of the global step. Episodes of
    ``episode_len`` steps restart from a uniformly drawn state.
    """
    rng = np.random.default_rng(seed)
    S, A = mdp.n_states, mdp.n_actions
    Q = np.full((S, A), float(q_init))
    visits = np.zeros((S, A), dtype=np.int64)
    cdf = np.cumsum(mdp.P, axis=2)
    s = int(rng.integers(S))
    for step in range(n_steps):
        if episode_len and step and step % episode_len == 0:
            s = int(rng.integers(S))
        eps = epsilon(step) if callable(epsilon) else epsilon
        if rng.random() < eps:
            a = int(rng.integers(A))
        else:
            a = int(lowest_argmax(Q[s])[0])
        s_next = min(int(np.searchsorted(cdf[s, a], rng.random(), side="right")), S - 1)
        visits[s, a] += 1
        target = mdp.R[s, a] + mdp.discount * Q[s_next].max()
        Q[s, a] += lr(int(visits[s, a])) * (target - Q[s, a])
        s = s_next
    return Q
