"""Central-difference verification of the split network's analytic gradients."""

from __future__ import annotations

import numpy as np

from .network import (
    ParamStore,
    _forward,
    backward_client,
    forward_client,
    forward_full,
    server_gradients,
    softmax_xent,
)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / (||a|| + ||n||)``, 0 when both vanish."""
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def _loss(store: ParamStore, x: np.ndarray, y: np.ndarray) -> float:
    return softmax_xent(forward_full(store, x), y)[0]


def numeric_gradient(f, arr: np.ndarray, step: float) -> np.ndarray:
    out = np.zeros_like(arr)
    flat, grad = arr.reshape(-1), out.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + step
        up = f()
        flat[j] = orig - step
        down = f()
        flat[j] = orig
        grad[j] = (up - down) / (2.0 * step)
    return out


def min_preactivation_gap(store: ParamStore, x: np.ndarray) -> float:
    """Smallest |pre-activation| feeding a ReLU, over the whole batch."""
    _, caches = _forward(store, np.asarray(x, dtype=np.float64), 0, store.n_layers)
    gaps = [np.abs(z).min() for (_, z), act in zip(caches, store.activations) if act == "relu"]
    return float(min(gaps)) if gaps else float("inf")


def nudge_off_kinks(store: ParamStore, x: np.ndarray, rng: np.random.Generator,
                    margin: float = 1e-3, scale: float = 1e-2, tries: int = 200) -> np.ndarray:
    """Jitter inputs until every ReLU pre-activation sits at least ``margin`` from 0."""
    x = np.array(x, dtype=np.float64)
    for _ in range(tries):
        if min_preactivation_gap(store, x) >= margin:
            return x
        x = x + scale * rng.standard_normal(x.shape)
    raise RuntimeError("could not move inputs away from ReLU kinks")


def finite_diff_check(store: ParamStore, batch: np.ndarray, labels: np.ndarray, cut: int | None = None,
                      step: float = 1e-5) -> float:
    """Worst relative error between analytic and numeric gradients.

    Analytic gradients come from the split path (client forward, server
    backward to the cut, client backward) at ``cut``, which defaults to the
    middle layer. Every parameter array and the cut-activation gradient are
    compared; the store is left unchanged.
    """
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    L = store.n_layers
    if cut is None:
        cut = max(1, L // 2)
    work = store.copy()

    smashed = forward_client(work, cut, x, y, round_id=-1, device_id=-1)
    at_cut, server_grads = server_gradients(work, smashed)
    client_grads = backward_client(work, at_cut)
    analytic = client_grads + server_grads

    worst = 0.0
    for i, (gw, gb) in enumerate(analytic):
        nw = numeric_gradient(lambda: _loss(work, x, y), work.weights[i], step)
        nb = numeric_gradient(lambda: _loss(work, x, y), work.biases[i], step)
        worst = max(worst, relative_error(gw, nw), relative_error(gb, nb))

    acts = smashed.activations.copy()

    def loss_from_cut() -> float:
        logits, _ = _forward(work, acts, cut, L)
        return softmax_xent(logits, y)[0]

    worst = max(worst, relative_error(at_cut.grad, numeric_gradient(loss_from_cut, acts, step)))
    return worst
