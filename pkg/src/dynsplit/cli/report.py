"""Figure-ready aggregates computed from a finished run directory alone."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from ..core.metrics import minmax_normalize
from .rundir import REPORT_FILE, ROUNDS_FILE, RUN_FILES, SPLIT_FREQ_FILE, SUMMARY_FILE, dumps_json, read_csv

WINDOW = 10  # episodes compared at each end of the run


def _episode_means(rows: list[dict[str, str]], episodes: int, key: str) -> list[float | None]:
    sums = np.zeros(episodes)
    counts = np.zeros(episodes, dtype=np.int64)
    for r in rows:
        e = int(r["episode"])
        sums[e] += float(r[key])
        counts[e] += 1
    return [float(s / c) if c else None for s, c in zip(sums, counts)]


def build_report(run_dir: str | Path) -> dict[str, Any]:
    run_dir = Path(run_dir)
    for name in RUN_FILES:
        if not (run_dir / name).is_file():
            raise FileNotFoundError(f"run directory {run_dir} lacks {name}")
    summary = json.loads((run_dir / SUMMARY_FILE).read_text(encoding="utf-8"))
    rounds = read_csv(run_dir / ROUNDS_FILE)
    freq_rows = read_csv(run_dir / SPLIT_FREQ_FILE)
    episodes = len(freq_rows)
    K = sum(1 for col in freq_rows[0] if col.startswith("k")) if freq_rows else 0

    avail = [r for r in rounds if r["available"] == "1"]
    per_episode = []
    for row in freq_rows:
        e = int(row["episode"])
        counts = [int(row[f"k{k}"]) for k in range(1, K + 1)]
        n_avail = sum(1 for r in avail if int(r["episode"]) == e)
        per_episode.append({
            "episode": e,
            "counts": counts,
            "available_device_steps": n_avail,
            "frequency": [c / n_avail if n_avail else 0.0 for c in counts],
            "mean_val_acc": float(row["mean_val_acc"]),
        })

    stragglers = _episode_means(avail, episodes, "straggler")
    rates = [0.0 if s is None else s for s in stragglers]
    w = min(WINDOW, episodes)
    first = float(np.mean(rates[:w])) if w else 0.0
    last = float(np.mean(rates[-w:])) if w else 0.0

    metrics = summary["test_metrics"]
    names = sorted(metrics)
    normalized = dict(zip(names, minmax_normalize([metrics[n] for n in names])))

    rewards = _episode_means(avail, episodes, "reward")
    accs = _episode_means(avail, episodes, "acc")
    loads = _episode_means(avail, episodes, "client_load")
    return {
        "seed": summary["seed"],
        "config_hash": summary["config_hash"],
        "split_frequency": {
            "per_episode": per_episode,
            "totals": [sum(p["counts"][k] for p in per_episode) for k in range(K)],
            "available_device_steps": len(avail),
            "device_steps": len(rounds),
        },
        "metrics": metrics,
        "normalized_metrics": normalized,
        "reward_vs_accuracy": [
            {"episode": e, "mean_reward": rewards[e], "mean_acc": accs[e], "mean_client_load": loads[e]}
            for e in range(episodes)
        ],
        "straggler": {
            "window": w,
            "first": first,
            "last": last,
            "ratio": last / first if first > 0 else None,
        },
    }


def write_report(run_dir: str | Path) -> Path:
    report = build_report(run_dir)
    path = Path(run_dir) / REPORT_FILE
    path.write_text(dumps_json(report), encoding="utf-8")
    return path
