"""Heterogeneous device simulation: capacity dynamics, feasibility and reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.config import ExperimentConfig, RewardWeights
from ..splitnet.catalog import SplitCatalog


@dataclass(frozen=True)
class DeviceState:
    device_id: int
    R_t: float
    T_t: float
    available: bool = True


@dataclass(frozen=True)
class DeviceDynamics:
    low: float = 0.5
    high: float = 7.5
    drift_sigma: float = 0.25
    unavailability_prob: float = 0.10

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "DeviceDynamics":
        low, high = cfg.capacity_range
        return cls(float(low), float(high), cfg.drift_sigma, cfg.unavailability_prob)


@dataclass(frozen=True)
class FeasibilityReport:
    delta_r: tuple[float, ...]  # index k-1 holds split k
    delta_t: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.delta_r)

    def is_feasible(self, k: int) -> bool:
        return self.delta_r[k - 1] >= 0.0 and self.delta_t[k - 1] >= 0.0

    @property
    def feasible(self) -> tuple[bool, ...]:
        return tuple(self.is_feasible(k) for k in range(1, self.K + 1))

    @property
    def feasible_set(self) -> frozenset[int]:
        return frozenset(k for k in range(1, self.K + 1) if self.is_feasible(k))

    def deficit(self, k: int) -> float:
        return max(0.0, -self.delta_r[k - 1]) + max(0.0, -self.delta_t[k - 1])


def init_devices(cfg: ExperimentConfig, rng: np.random.Generator) -> list[DeviceState]:
    """Fresh devices with R, T ~ Uniform[low, high], all available."""
    return spawn_devices(DeviceDynamics.from_config(cfg), cfg.n_devices, rng)


def spawn_devices(dyn: DeviceDynamics, n: int, rng: np.random.Generator) -> list[DeviceState]:
    if n < 1:
        raise ValueError("need at least one device")
    draws = rng.uniform(dyn.low, dyn.high, size=(n, 2))
    return [DeviceState(i, float(r), float(t), True) for i, (r, t) in enumerate(draws)]


def step_device_state(state: DeviceState, rng: np.random.Generator, dyn: DeviceDynamics) -> DeviceState:
    """Gaussian drift on R and T, clamped to the range; fresh availability coin."""
    drift = rng.normal(0.0, 1.0, size=2) * dyn.drift_sigma
    r = min(max(state.R_t + float(drift[0]), dyn.low), dyn.high)
    t = min(max(state.T_t + float(drift[1]), dyn.low), dyn.high)
    available = bool(rng.random() >= dyn.unavailability_prob)
    return DeviceState(state.device_id, r, t, available)


def feasibility(state: DeviceState, catalog: SplitCatalog) -> FeasibilityReport:
    if not state.available:
        raise ValueError(f"device {state.device_id} is unavailable; skip it this round")
    return FeasibilityReport(
        delta_r=tuple(state.R_t - e.r_req for e in catalog),
        delta_t=tuple(state.T_t - e.t_req for e in catalog),
    )


def compute_reward(acc: float, report: FeasibilityReport, k: int, w: RewardWeights) -> float:
    """Accuracy reward minus resource/time deficits; flat penalty for infeasible splits in strict mode."""
    if w.mode == "strict" and not report.is_feasible(k):
        return -w.gamma_pen * w.penalty
    return w.alpha * acc - w.beta * report.deficit(k)


def client_load(catalog: SplitCatalog, k: int) -> float:
    return catalog[k].load_fraction


def state_features(state: DeviceState, high: float, last_acc: float | None = None) -> np.ndarray:
    """Q-network input: R and T scaled by the capacity ceiling, optionally last accuracy."""
    feats = [state.R_t / high, state.T_t / high]
    if last_acc is not None:
        feats.append(last_acc)
    return np.array(feats)
