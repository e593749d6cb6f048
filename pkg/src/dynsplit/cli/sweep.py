"""Deterministic grid sweep over the tunable optimisation hyperparameters.

Grid file layout::

    base:            # optional config overrides shared by every trial
      episodes: 10
    grid:
      discount: [0.95, 0.99, 0.999]
      lr: [1.0e-3]
"""

from __future__ import annotations

import itertools
from pathlib import Path
from typing import Any, Callable

import yaml

from ..core.config import ConfigError, ExperimentConfig, apply_overrides, validate_config
from ..core.records import fmt_float
from ..orchestrator.runner import RunArtifacts, run_training
from .rundir import _csv_text, summarize

# tunable axes and the ranges explored for them
RANGES: dict[str, tuple[float, float]] = {
    "lr": (1e-4, 1e-2),
    "weight_decay": (1e-6, 1e-3),
    "discount": (0.95, 0.999),
}
CHOICES: dict[str, tuple[int, ...]] = {
    "batch_size": (32, 64),
    "target_sync_every": (500, 1000),
}
AXES = tuple(sorted([*RANGES, *CHOICES]))
SWEEP_HEADER = ("config_hash", *AXES, "final_accuracy", "mean_reward", "straggler_rate")


def load_grid(path: str | Path) -> tuple[dict[str, Any], dict[str, list[Any]]]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    unknown = set(raw) - {"base", "grid"}
    if unknown:
        raise ConfigError(", ".join(sorted(unknown)), "unknown sweep section")
    base = raw.get("base") or {}
    grid = raw.get("grid") or {}
    if not isinstance(base, dict) or not isinstance(grid, dict):
        raise ConfigError(str(path), "base and grid must be mappings")
    return base, {k: v if isinstance(v, list) else [v] for k, v in grid.items()}


def _check_axis(name: str, values: list[Any]) -> None:
    if name not in AXES:
        raise ConfigError(f"grid.{name}", f"not a sweepable axis (choose from {', '.join(AXES)})")
    if not values:
        raise ConfigError(f"grid.{name}", "axis has no values")
    for v in values:
        if name in CHOICES:
            if isinstance(v, bool) or v not in CHOICES[name]:
                raise ConfigError(f"grid.{name}", f"{v!r} not in {list(CHOICES[name])}")
        else:
            lo, hi = RANGES[name]
            try:
                x = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"grid.{name}", f"{v!r} is not a number") from None
            if not lo <= x <= hi:
                raise ConfigError(f"grid.{name}", f"{v!r} outside [{lo:g}, {hi:g}]")


def expand_grid(base: dict[str, Any], grid: dict[str, list[Any]],
                overrides: list[str] | None = None) -> list[ExperimentConfig]:
    """Cartesian product of the axes on top of ``base``; duplicates collapse by config hash."""
    if not grid:
        raise ConfigError("grid", "empty grid")
    for name, values in grid.items():
        _check_axis(name, values)
    base = apply_overrides(base, overrides or [])
    names = sorted(grid)
    seen: dict[str, ExperimentConfig] = {}
    for combo in itertools.product(*(grid[n] for n in names)):
        cfg = validate_config({**base, **dict(zip(names, combo))})
        seen.setdefault(cfg.config_hash(), cfg)
    return list(seen.values())


def sweep_row(art: RunArtifacts) -> dict[str, Any]:
    s = summarize(art)
    row = {"config_hash": s["config_hash"]}
    row.update({name: getattr(art.config, name) for name in AXES})
    row.update({k: s[k] for k in ("final_accuracy", "mean_reward", "straggler_rate")})
    return row


def run_sweep(configs: list[ExperimentConfig],
              runner: Callable[[ExperimentConfig], RunArtifacts] = run_training) -> list[dict[str, Any]]:
    rows = [sweep_row(runner(cfg)) for cfg in configs]
    rows.sort(key=lambda r: (-r["final_accuracy"], r["config_hash"]))
    return rows


def sweep_csv(rows: list[dict[str, Any]]) -> str:
    def cell(v: Any) -> str:
        return fmt_float(v) if isinstance(v, float) else str(v)

    return _csv_text(SWEEP_HEADER, ([cell(r[h]) for h in SWEEP_HEADER] for r in rows))
