"""Centralized reference: the same network trained monolithically on the pooled training set."""

from __future__ import annotations

from ..core.config import ExperimentConfig
from ..core.data import TEST, TRAIN, Dataset
from ..core.metrics import Metrics
from ..core.rng import stream
from ..splitnet.network import ParamStore, adamw_step, full_gradients
from .runner import evaluate_global, init_store, prepare_data


def train_centralized(cfg: ExperimentConfig, n_steps: int, ds: Dataset | None = None) -> tuple[ParamStore, Metrics]:
    """``n_steps`` AdamW minibatch steps from the run's initial weights; returns the store and test metrics."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    ds = prepare_data(cfg) if ds is None else ds
    store = init_store(cfg)
    train = ds.indices(TRAIN)
    rng = stream(cfg.seed, "central-batch")
    layers = range(store.n_layers)
    for _ in range(n_steps):
        idx = rng.choice(train, size=min(cfg.batch_size, train.size), replace=False)
        _, grads, _ = full_gradients(store, ds.features[idx], ds.labels[idx])
        adamw_step(store, layers, grads, cfg.lr, cfg.weight_decay)
    return store, evaluate_global(store, ds, TEST)
