from __future__ import annotations

import numpy as np

from ..core.config import EpsilonSchedule


def epsilon_at(schedule: EpsilonSchedule, episode: int, total_episodes: int) -> float:
    """Per-episode exploration rate, hitting ``end`` on the last episode."""
    if not 0 <= episode < total_episodes:
        raise ValueError(f"episode {episode} outside [0, {total_episodes})")
    if total_episodes == 1:
        return schedule.start
    frac = episode / (total_episodes - 1)
    if schedule.shape == "linear":
        eps = schedule.start + (schedule.end - schedule.start) * frac
    elif schedule.start == 0:
        eps = 0.0
    else:
        eps = schedule.start * (schedule.end / schedule.start) ** frac
    return float(min(max(eps, schedule.end), schedule.start))


def greedy(q_values: np.ndarray) -> int:
    """1-based argmax; ties go to the lowest index."""
    return int(np.argmax(q_values)) + 1


def select_action(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise ValueError("no q-values to choose from")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    # both draws always happen so the stream position does not depend on epsilon
    explore = rng.random() < epsilon
    random_action = int(rng.integers(1, q_values.size + 1))
    return random_action if explore else greedy(q_values)
