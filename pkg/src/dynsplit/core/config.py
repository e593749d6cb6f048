"""Experiment configuration: defaults, YAML loading, overrides and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration values."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.05
    shape: str = "exponential"  # exponential | linear


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0
    beta: float = 0.5
    gamma_pen: float = 1.0
    penalty: float = 1.0
    mode: str = "strict"  # strict | soft


@dataclass(frozen=True)
class DataSpec:
    classes: int = 5
    dim: int = 8
    samples: int = 2000
    spread: float = 0.75


@dataclass(frozen=True)
class Distribution:
    kind: str = "iid"  # iid | noniid
    shards_per_client: int = 2


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n_devices: int = 5
    n_splits: int = 5
    episodes: int = 50
    steps_per_episode: int = 75
    capacity_range: tuple[float, float] = (0.5, 7.5)
    unavailability_prob: float = 0.10
    drift_sigma: float = 0.25
    lr: float = 1e-3
    weight_decay: float = 1e-4
    discount: float = 0.95
    batch_size: int = 32
    target_sync_every: int = 500
    replay_capacity: int = 10_000
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    reward: RewardWeights = field(default_factory=RewardWeights)
    agent_mode: str = "shared"  # shared | per-device
    merge_mode: str = "sequential"  # sequential | averaged
    state_dim: int = 2
    hidden: tuple[int, ...] = (64, 64, 64, 64, 64)
    cost_table: tuple[tuple[float, float], ...] | None = None
    val_subsample: int = 256
    data: DataSpec = field(default_factory=DataSpec)
    distribution: Distribution = field(default_factory=Distribution)

    def to_dict(self) -> dict[str, Any]:
        return _plain(dataclasses.asdict(self))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return validate_config({**self.to_dict(), **changes})


_NESTED = {
    "epsilon": EpsilonSchedule,
    "reward": RewardWeights,
    "data": DataSpec,
    "distribution": Distribution,
}


def _plain(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls: type, raw: Mapping[str, Any], prefix: str) -> Any:
    if not isinstance(raw, Mapping):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(prefix + unknown[0], f"unknown key(s): {', '.join(prefix + k for k in unknown)}")
    kwargs: dict[str, Any] = {}
    for name, value in raw.items():
        if name in _NESTED and cls is ExperimentConfig:
            kwargs[name] = _build(_NESTED[name], value or {}, f"{prefix}{name}.")
        else:
            kwargs[name] = _coerce(value)
    return cls(**kwargs)


def _coerce(value: Any) -> Any:
    # YAML 1.1 reads "1e-3" as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _num(cfg_value: Any, name: str, *, integer: bool = False) -> float:
    if isinstance(cfg_value, bool) or not isinstance(cfg_value, (int, float)):
        raise ConfigError(name, f"expected a number, got {cfg_value!r}")
    if integer and int(cfg_value) != cfg_value:
        raise ConfigError(name, f"expected an integer, got {cfg_value!r}")
    if cfg_value != cfg_value or cfg_value in (float("inf"), float("-inf")):
        raise ConfigError(name, "must be finite")
    return cfg_value


def _check(cfg: ExperimentConfig) -> ExperimentConfig:
    ints = {
        "seed": 0, "n_devices": 1, "n_splits": 2, "episodes": 1, "steps_per_episode": 1,
        "batch_size": 1, "target_sync_every": 1, "replay_capacity": 1, "val_subsample": 1,
    }
    for name, lo in ints.items():
        value = _num(getattr(cfg, name), name, integer=True)
        if value < lo:
            raise ConfigError(name, f"must be >= {lo}, got {value}")
    if cfg.seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")

    cap = cfg.capacity_range
    if not isinstance(cap, (list, tuple)) or len(cap) != 2:
        raise ConfigError("capacity_range", "expected [low, high]")
    low, high = (_num(v, "capacity_range") for v in cap)
    if low >= high:
        raise ConfigError("capacity_range", f"low >= high ({low} >= {high})")
    if low < 0:
        raise ConfigError("capacity_range", "low must be >= 0")

    p = _num(cfg.unavailability_prob, "unavailability_prob")
    if not 0 <= p < 1:
        raise ConfigError("unavailability_prob", f"must be in [0, 1), got {p}")
    if _num(cfg.drift_sigma, "drift_sigma") < 0:
        raise ConfigError("drift_sigma", "must be >= 0")
    if _num(cfg.lr, "lr") <= 0:
        raise ConfigError("lr", "must be > 0")
    if _num(cfg.weight_decay, "weight_decay") < 0:
        raise ConfigError("weight_decay", "must be >= 0")
    d = _num(cfg.discount, "discount")
    if not 0 <= d <= 1:
        raise ConfigError("discount", f"must be in [0, 1], got {d}")

    eps = cfg.epsilon
    for name in ("start", "end"):
        v = _num(getattr(eps, name), f"epsilon.{name}")
        if not 0 <= v <= 1:
            raise ConfigError(f"epsilon.{name}", f"must be in [0, 1], got {v}")
    if eps.end > eps.start:
        raise ConfigError("epsilon.end", "must be <= epsilon.start")
    if eps.shape not in ("exponential", "linear"):
        raise ConfigError("epsilon.shape", f"unknown decay shape {eps.shape!r}")
    if eps.shape == "exponential" and eps.end == 0 and eps.start > 0:
        raise ConfigError("epsilon.end", "exponential decay needs end > 0")

    w = cfg.reward
    for name in ("alpha", "beta", "gamma_pen", "penalty"):
        if _num(getattr(w, name), f"reward.{name}") < 0:
            raise ConfigError(f"reward.{name}", "must be >= 0")
    if w.mode not in ("strict", "soft"):
        raise ConfigError("reward.mode", f"expected strict|soft, got {w.mode!r}")

    if cfg.agent_mode not in ("shared", "per-device"):
        raise ConfigError("agent_mode", f"expected shared|per-device, got {cfg.agent_mode!r}")
    if cfg.merge_mode not in ("sequential", "averaged"):
        raise ConfigError("merge_mode", f"expected sequential|averaged, got {cfg.merge_mode!r}")
    if cfg.state_dim not in (2, 3):
        raise ConfigError("state_dim", "must be 2 or 3")

    if not isinstance(cfg.hidden, (list, tuple)) or not cfg.hidden:
        raise ConfigError("hidden", "expected a non-empty list of widths")
    for h in cfg.hidden:
        if _num(h, "hidden", integer=True) < 1:
            raise ConfigError("hidden", "widths must be >= 1")
    if len(cfg.hidden) + 1 < cfg.n_splits + 1:
        raise ConfigError("hidden", f"need at least {cfg.n_splits} hidden layers for {cfg.n_splits} splits")

    if cfg.cost_table is not None:
        table = cfg.cost_table
        if len(table) != cfg.n_splits or any(len(row) != 2 for row in table):
            raise ConfigError("cost_table", f"expected {cfg.n_splits} rows of [R_req, T_req]")
        for row in table:
            for v in row:
                if _num(v, "cost_table") < 0:
                    raise ConfigError("cost_table", "costs must be >= 0")
        for prev, cur in zip(table, table[1:]):
            if cur[0] < prev[0] or cur[1] < prev[1]:
                raise ConfigError("cost_table", "costs must be non-decreasing in the split index")

    ds = cfg.data
    if _num(ds.classes, "data.classes", integer=True) < 2:
        raise ConfigError("data.classes", "must be >= 2")
    if _num(ds.dim, "data.dim", integer=True) < 2:
        raise ConfigError("data.dim", "must be >= 2")
    if _num(ds.samples, "data.samples", integer=True) < max(20, ds.classes):
        raise ConfigError("data.samples", "must be >= max(20, classes)")
    if _num(ds.spread, "data.spread") < 0:
        raise ConfigError("data.spread", "must be >= 0")

    dist = cfg.distribution
    if dist.kind not in ("iid", "noniid"):
        raise ConfigError("distribution.kind", f"expected iid|noniid, got {dist.kind!r}")
    if _num(dist.shards_per_client, "distribution.shards_per_client", integer=True) < 1:
        raise ConfigError("distribution.shards_per_client", "must be >= 1")
    return cfg


def _freeze(raw: dict[str, Any]) -> dict[str, Any]:
    out = dict(raw)
    if "capacity_range" in out and isinstance(out["capacity_range"], list):
        out["capacity_range"] = tuple(out["capacity_range"])
    if "hidden" in out and isinstance(out["hidden"], list):
        out["hidden"] = tuple(out["hidden"])
    if out.get("cost_table") is not None:
        out["cost_table"] = tuple(tuple(row) for row in out["cost_table"])
    return out


def validate_config(raw: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Build a fully-defaulted, range-checked config from a raw mapping."""
    raw = dict(raw or {})
    cfg = _build(ExperimentConfig, _freeze(raw), "")
    return _check(cfg)


def parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ConfigError(text, "override must look like KEY=VALUE")
    key, value = text.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(text, "empty override key")
    return path, yaml.safe_load(value) if value.strip() else None


def apply_overrides(raw: Mapping[str, Any], overrides: list[str]) -> dict[str, Any]:
    out = _plain(dict(raw))
    for item in overrides:
        path, value = parse_override(item)
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(".".join(path), "cannot override inside a scalar")
        node[path[-1]] = value
    return out


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load YAML from ``path`` (defaults when None), apply KEY=VALUE overrides."""
    raw: Any = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(str(path), "top level must be a mapping")
    return validate_config(apply_overrides(raw, overrides or []))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, allow_unicode=True)
