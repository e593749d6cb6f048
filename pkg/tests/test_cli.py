from __future__ import annotations

import json

import pytest
import yaml

from dynsplit.cli import rundir, sweep
from dynsplit.cli.main import EXIT_CONFIG, EXIT_FAILED, EXIT_IO, EXIT_OK, main
from dynsplit.core.config import ConfigError

SMALL = {
    "episodes": 3, "steps_per_episode": 6, "hidden": [16, 16, 16, 16, 16],
    "data": {"samples": 600}, "batch_size": 32, "val_subsample": 64,
}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    return path


def _train(tmp_path, small_config, name, *extra):
    out = tmp_path / name
    assert main(["train", "--config", str(small_config), "--out", str(out), *extra]) == EXIT_OK
    return out


def test_train_writes_reproducible_run_directory(tmp_path, small_config):
    a = _train(tmp_path, small_config, "a", "--seed", "7")
    b = _train(tmp_path, small_config, "b", "--seed", "7")
    for name in rundir.RUN_FILES:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    c = _train(tmp_path, small_config, "c", "--seed", "8")
    assert (a / rundir.ROUNDS_FILE).read_bytes() != (c / rundir.ROUNDS_FILE).read_bytes()


def test_rounds_csv_accounting(tmp_path, small_config):
    out = _train(tmp_path, small_config, "run")
    rows = rundir.read_csv(out / rundir.ROUNDS_FILE)
    summary = json.loads((out / rundir.SUMMARY_FILE).read_text())
    assert len(rows) == 3 * 6 * 5 == summary["device_steps"]
    available = [r for r in rows if r["available"] == "1"]
    assert len(available) == summary["available_steps"] == summary["transitions"]
    assert all(r["action"] == "" for r in rows if r["available"] == "0")
    freq = rundir.read_csv(out / rundir.SPLIT_FREQ_FILE)
    for row in freq:
        counts = sum(int(row[f"k{k}"]) for k in range(1, 6))
        assert counts == sum(r["episode"] == row["episode"] for r in available)


def test_default_output_root(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("REINDSPLIT_OUT", str(tmp_path / "root"))
    assert main(["train", "--config", str(small_config)]) == EXIT_OK
    (run,) = (tmp_path / "root").iterdir()
    assert run.name.startswith("run-")


def test_train_error_codes(tmp_path, small_config, capsys):
    missing = tmp_path / "nope.yaml"
    assert main(["train", "--config", str(missing)]) == EXIT_IO
    assert str(missing) in capsys.readouterr().err
    assert main(["train", "--config", str(small_config), "--override", "lr=-1"]) == EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("n_devices: [1, 2\n")
    assert main(["train", "--config", str(bad)]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["train", "--seed", "-3"])


def test_oracle_passes_and_detects_mutation(capsys):
    assert main(["oracle"]) == EXIT_OK
    table = capsys.readouterr().out
    assert "FAIL" not in table
    assert main(["oracle", "--mutate-backward"]) == EXIT_FAILED
    err = capsys.readouterr().err
    assert "split path == monolithic path" in err


def test_sweep_rows_and_dedup(tmp_path, small_config):
    grid = tmp_path / "grid.yaml"
    grid.write_text(yaml.safe_dump({"base": SMALL, "grid": {"discount": [0.95, 0.99, 0.999, 0.99]}}))
    assert main(["sweep", str(grid), "--out", str(tmp_path / "sw")]) == EXIT_OK
    rows = rundir.read_csv(tmp_path / "sw" / "sweep.csv")
    assert len(rows) == 3
    assert sorted(float(r["discount"]) for r in rows) == [0.95, 0.99, 0.999]
    accs = [float(r["final_accuracy"]) for r in rows]
    assert accs == sorted(accs, reverse=True)


def test_sweep_single_point_matches_train(tmp_path, small_config):
    grid = tmp_path / "grid.yaml"
    grid.write_text(yaml.safe_dump({"base": SMALL, "grid": {"lr": [1e-3]}}))
    assert main(["sweep", str(grid), "--out", str(tmp_path / "sw")]) == EXIT_OK
    (row,) = rundir.read_csv(tmp_path / "sw" / "sweep.csv")
    summary = json.loads((_train(tmp_path, small_config, "t") / rundir.SUMMARY_FILE).read_text())
    assert row["config_hash"] == summary["config_hash"]
    for key in ("final_accuracy", "mean_reward", "straggler_rate"):
        assert float(row[key]) == pytest.approx(summary[key], rel=1e-8)


def test_sweep_grid_errors(tmp_path):
    with pytest.raises(ConfigError):
        sweep.expand_grid({}, {})
    with pytest.raises(ConfigError):
        sweep.expand_grid({}, {"lr": [1.0]})
    with pytest.raises(ConfigError):
        sweep.expand_grid({}, {"n_devices": [3]})
    with pytest.raises(ConfigError):
        sweep.expand_grid({}, {"batch_size": [48]})
    grid = tmp_path / "grid.yaml"
    grid.write_text("grid: {}\n")
    assert main(["sweep", str(grid), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_report(tmp_path, small_config):
    out = _train(tmp_path, small_config, "run")
    assert main(["report", str(out)]) == EXIT_OK
    first = (out / rundir.REPORT_FILE).read_bytes()
    assert main(["report", str(out)]) == EXIT_OK
    assert (out / rundir.REPORT_FILE).read_bytes() == first
    rep = json.loads(first)
    assert all(0.01 - 1e-12 <= v <= 1.0 + 1e-12 for v in rep["normalized_metrics"].values())
    st = rep["straggler"]
    assert st["window"] == 3
    if st["first"] > 0:
        assert st["ratio"] == pytest.approx(st["last"] / st["first"], rel=1e-8)
    summary = json.loads((out / rundir.SUMMARY_FILE).read_text())
    assert rep["split_frequency"]["available_device_steps"] == summary["available_steps"]
    for ep in rep["split_frequency"]["per_episode"]:
        assert sum(ep["counts"]) == ep["available_device_steps"]


def test_report_missing_files(tmp_path, small_config, capsys):
    assert main(["report", str(tmp_path / "empty")]) == EXIT_IO
    out = _train(tmp_path, small_config, "run")
    (out / rundir.ROUNDS_FILE).unlink()
    assert main(["report", str(out)]) == EXIT_IO
    assert rundir.ROUNDS_FILE in capsys.readouterr().err
