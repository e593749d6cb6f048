"""Run directory layout: config echo, per-round log, split frequencies, summary."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from ..core.config import dump_config
from ..core.records import CSV_HEADER, RoundRecord, fmt_float
from ..orchestrator.runner import RunArtifacts

CONFIG_FILE = "config.yaml"
ROUNDS_FILE = "rounds.csv"
SPLIT_FREQ_FILE = "split_freq.csv"
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.json"
RUN_FILES = (CONFIG_FILE, ROUNDS_FILE, SPLIT_FREQ_FILE, SUMMARY_FILE)


def round9(value: Any) -> Any:
    """Recursively trim floats to 9 significant digits for stable JSON."""
    if isinstance(value, (float, np.floating)):
        return float(fmt_float(float(value)))
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, dict):
        return {k: round9(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [round9(v) for v in value]
    return value


def dumps_json(obj: Any) -> str:
    return json.dumps(round9(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv_text(header: Iterable[str], rows: Iterable[Iterable[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def rounds_csv(records: Iterable[RoundRecord]) -> str:
    return _csv_text(CSV_HEADER, (r.csv_row() for r in records))


def split_freq_csv(split_freq: np.ndarray, mean_val_acc: list[float]) -> str:
    K = split_freq.shape[1]
    header = ["episode", *(f"k{k}" for k in range(1, K + 1)), "mean_val_acc"]
    rows = ([str(e), *(str(int(c)) for c in counts), fmt_float(acc)]
            for e, (counts, acc) in enumerate(zip(split_freq, mean_val_acc)))
    return _csv_text(header, rows)


def summarize(art: RunArtifacts) -> dict[str, Any]:
    """Run-level scalars and series shared by ``summary.json`` and sweep rows."""
    avail = [r for r in art.records if r.available]
    return {
        "seed": art.seed,
        "config_hash": art.config.config_hash(),
        "episodes": art.config.episodes,
        "n_splits": art.config.n_splits,
        "test_metrics": art.test_metrics.as_dict(),
        "final_accuracy": art.test_metrics.accuracy,
        "mean_reward": float(np.mean([r.reward for r in avail])) if avail else 0.0,
        "straggler_rate": sum(r.straggler for r in avail) / len(avail) if avail else 0.0,
        "straggler_series": list(art.straggler_rate),
        "mean_val_acc": list(art.mean_val_acc),
        "available_steps": len(avail),
        "device_steps": len(art.records),
        "optimizer_steps": art.optimizer_steps,
        "transitions": art.transitions,
    }


def write_run_directory(art: RunArtifacts, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        CONFIG_FILE: dump_config(art.config),
        ROUNDS_FILE: rounds_csv(art.records),
        SPLIT_FREQ_FILE: split_freq_csv(art.split_freq, art.mean_val_acc),
        SUMMARY_FILE: dumps_json(summarize(art)),
    }
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    return out


def read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
