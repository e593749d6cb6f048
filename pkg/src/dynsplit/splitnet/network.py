"""Dense feed-forward network with execution split at an arbitrary layer.

Weights are stored ``(in_dim, out_dim)`` so a layer computes ``x @ W + b``.
The client half and the server half call the same per-layer kernels as the
monolithic pass, so split and unsplit execution agree bit for bit.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

ACTIVATIONS = ("relu", "none")

Grads = list[tuple[np.ndarray, np.ndarray]]


class SplitNetError(Exception):
    pass


class ShapeError(SplitNetError, ValueError):
    pass


class NonFiniteError(SplitNetError, ValueError):
    def __init__(self, message: str, round_id: int | None = None, device_id: int | None = None):
        where = "" if round_id is None else f" (round {round_id}, device {device_id})"
        super().__init__(message + where)
        self.round_id = round_id
        self.device_id = device_id


class ProtocolOrderError(SplitNetError, RuntimeError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]

    @classmethod
    def mlp(cls, dims: Sequence[int]) -> "NetworkSpec":
        """ReLU after every affine layer except the last (which feeds softmax)."""
        n = len(dims) - 1
        return cls(tuple(
            LayerSpec(int(dims[i]), int(dims[i + 1]), "relu" if i < n - 1 else "none")
            for i in range(n)
        ))

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def n_classes(self) -> int:
        return self.layers[-1].out_dim

    def macs(self) -> list[int]:
        """Multiply-accumulate count per sample, per layer."""
        return [layer.in_dim * layer.out_dim for layer in self.layers]

    def validate(self) -> None:
        if not self.layers:
            raise ShapeError("network needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.in_dim < 1 or layer.out_dim < 1:
                raise ShapeError(f"layer {i} has a non-positive dimension")
            if layer.activation not in ACTIVATIONS:
                raise ShapeError(f"layer {i}: unknown activation {layer.activation!r}")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"dimension chain breaks between layer {i} ({a.out_dim}) and {i + 1} ({b.in_dim})")


@dataclass(eq=False)
class ParamStore:
    """Per-layer weights, biases and AdamW state.

    A store may hold a prefix of the network only (a device's client segment);
    layer ``i`` of such a store is layer ``i`` of the full model.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    steps: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def layer_arrays(self, i: int) -> tuple[np.ndarray, ...]:
        return (self.weights[i], self.biases[i], self.m_w[i], self.v_w[i], self.m_b[i], self.v_b[i])

    def segment(self, lo: int, hi: int) -> "ParamStore":
        """Deep copy of layers ``[lo, hi)``; caches are not copied."""
        sl = slice(lo, hi)
        return ParamStore(
            weights=[w.copy() for w in self.weights[sl]],
            biases=[b.copy() for b in self.biases[sl]],
            activations=list(self.activations[sl]),
            m_w=[a.copy() for a in self.m_w[sl]],
            v_w=[a.copy() for a in self.v_w[sl]],
            m_b=[a.copy() for a in self.m_b[sl]],
            v_b=[a.copy() for a in self.v_b[sl]],
            steps=self.steps[sl].copy(),
        )

    def copy(self) -> "ParamStore":
        return self.segment(0, self.n_layers)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for i in range(self.n_layers) for a in self.layer_arrays(i))

    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class SmashedBatch:
    round_id: int
    device_id: int
    cut: int
    activations: np.ndarray
    labels: np.ndarray


@dataclass
class GradAtCut:
    round_id: int
    device_id: int
    cut: int
    grad: np.ndarray
    loss: float
    accuracy: float


def build_network(spec: NetworkSpec, seed: int) -> ParamStore:
    """Fan-in scaled Gaussian weights (variance 2/fan_in), zero biases and moments."""
    spec.validate()
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((l.in_dim, l.out_dim)) * np.sqrt(2.0 / l.in_dim) for l in spec.layers]
    biases = [np.zeros(l.out_dim) for l in spec.layers]
    return ParamStore(
        weights=weights,
        biases=biases,
        activations=[l.activation for l in spec.layers],
        m_w=[np.zeros_like(w) for w in weights],
        v_w=[np.zeros_like(w) for w in weights],
        m_b=[np.zeros_like(b) for b in biases],
        v_b=[np.zeros_like(b) for b in biases],
        steps=np.zeros(len(weights), dtype=np.int64),
    )


# -- per-layer kernels -------------------------------------------------------

_client_grad_sign = 1.0


@contextlib.contextmanager
def corrupted_backward() -> Iterator[None]:
    """Test hook: flip the sign of every client-side gradient."""
    global _client_grad_sign
    _client_grad_sign = -1.0
    try:
        yield
    finally:
        _client_grad_sign = 1.0


def _forward(store: ParamStore, x: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, list]:
    caches = []
    for i in range(lo, hi):
        z = x @ store.weights[i] + store.biases[i]
        caches.append((x, z))
        x = np.maximum(z, 0.0) if store.activations[i] == "relu" else z
    return x, caches


def _backward(store: ParamStore, caches: list, grad: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, Grads]:
    grads: Grads = []
    for i in range(hi - 1, lo - 1, -1):
        x_in, z = caches[i - lo]
        if store.activations[i] == "relu":
            grad = grad * (z > 0.0)
        grads.append((x_in.T @ grad, grad.sum(axis=0)))
        grad = grad @ store.weights[i].T
    grads.reverse()
    return grad, grads


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy, its gradient w.r.t. logits, and batch accuracy."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    rows = np.arange(n)
    loss = float(-log_p[rows, labels].mean())
    dlogits = np.exp(log_p)
    dlogits[rows, labels] -= 1.0
    dlogits /= n
    acc = float(np.mean(logits.argmax(axis=1) == labels))
    return loss, dlogits, acc


def _check_input(store: ParamStore, x: np.ndarray, layer: int) -> None:
    expected = store.weights[layer].shape[0]
    if x.ndim != 2 or x.shape[1] != expected:
        raise ShapeError(f"layer {layer} expects width {expected}, got shape {x.shape}")
    if x.shape[0] < 1:
        raise ShapeError("batch must hold at least one row")


# -- monolithic path (reference) -----------------------------------------------

def forward_full(store: ParamStore, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    _check_input(store, batch, 0)
    logits, _ = _forward(store, batch, 0, store.n_layers)
    return logits


def full_gradients(store: ParamStore, batch: np.ndarray, labels: np.ndarray) -> tuple[float, Grads, np.ndarray]:
    """Loss, per-layer ``(dW, db)`` and logits of the unsplit network."""
    batch = np.asarray(batch, dtype=np.float64)
    _check_input(store, batch, 0)
    logits, caches = _forward(store, batch, 0, store.n_layers)
    loss, dlogits, _ = softmax_xent(logits, labels)
    _, grads = _backward(store, caches, dlogits, 0, store.n_layers)
    return loss, grads, logits


# -- split path ------------------------------------------------------------------

def forward_client(store: ParamStore, cut: int, batch: np.ndarray, labels: np.ndarray,
                   round_id: int = 0, device_id: int = 0) -> SmashedBatch:
    """Run layers ``[0, cut)`` and keep the cache for :func:`backward_client`."""
    if not 1 <= cut <= store.n_layers:
        raise ShapeError(f"cut {cut} outside [1, {store.n_layers}]")
    batch = np.asarray(batch, dtype=np.float64)
    _check_input(store, batch, 0)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (batch.shape[0],):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {batch.shape}")
    out, caches = _forward(store, batch, 0, cut)
    store._cache[(round_id, device_id)] = (cut, caches)
    return SmashedBatch(round_id, device_id, cut, out, labels)


def forward_server(store: ParamStore, smashed: SmashedBatch) -> np.ndarray:
    """Logits from the server layers, starting at the cut."""
    acts = np.asarray(smashed.activations, dtype=np.float64)
    if not 1 <= smashed.cut < store.n_layers:
        raise ShapeError(f"cut {smashed.cut} leaves no server layers (network has {store.n_layers})")
    _check_input(store, acts, smashed.cut)
    logits, _ = _forward(store, acts, smashed.cut, store.n_layers)
    return logits


def server_gradients(store: ParamStore, smashed: SmashedBatch) -> tuple[GradAtCut, Grads]:
    """Finish the forward pass from the cut, return the cut gradient and server-layer gradients."""
    acts = np.asarray(smashed.activations, dtype=np.float64)
    if not 1 <= smashed.cut < store.n_layers:
        raise ShapeError(f"cut {smashed.cut} leaves no server layers (network has {store.n_layers})")
    _check_input(store, acts, smashed.cut)
    if not np.all(np.isfinite(acts)):
        raise NonFiniteError("non-finite smashed activations", smashed.round_id, smashed.device_id)
    labels = np.asarray(smashed.labels, dtype=np.int64)
    if labels.shape != (acts.shape[0],):
        raise ShapeError(f"labels shape {labels.shape} does not match activations {acts.shape}")
    logits, caches = _forward(store, acts, smashed.cut, store.n_layers)
    loss, dlogits, acc = softmax_xent(logits, labels)
    grad_cut, grads = _backward(store, caches, dlogits, smashed.cut, store.n_layers)
    return GradAtCut(smashed.round_id, smashed.device_id, smashed.cut, grad_cut, loss, acc), grads


def forward_server_and_loss(store: ParamStore, smashed: SmashedBatch, lr: float,
                            weight_decay: float) -> GradAtCut:
    """Server half of one split step; updates the server layers with AdamW."""
    result, grads = server_gradients(store, smashed)
    adamw_step(store, range(smashed.cut, store.n_layers), grads, lr, weight_decay)
    return result


def backward_client(store: ParamStore, grad: GradAtCut) -> Grads:
    """Gradients for layers ``[0, cut)``; consumes the cached forward pass."""
    key = (grad.round_id, grad.device_id)
    entry = store._cache.pop(key, None)
    if entry is None:
        raise ProtocolOrderError(f"no cached forward pass for round {grad.round_id}, device {grad.device_id}")
    cut, caches = entry
    g = np.asarray(grad.grad, dtype=np.float64)
    if cut != grad.cut:
        raise ProtocolOrderError(f"gradient for cut {grad.cut} but forward ran to cut {cut}")
    if g.shape != caches[-1][1].shape:
        raise ShapeError(f"cut gradient shape {g.shape} does not match activations {caches[-1][1].shape}")
    _, grads = _backward(store, caches, g * _client_grad_sign, 0, cut)
    return grads


# -- optimizer ---------------------------------------------------------------------

def adamw_update(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray, t: int,
                 lr: float, weight_decay: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8) -> None:
    """In-place AdamW; ``t`` is the 1-based step used for bias correction."""
    if weight_decay:
        param *= 1.0 - lr * weight_decay
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def adamw_step(store: ParamStore, segment: Sequence[int] | range, grads: Grads, lr: float,
               weight_decay: float, beta1: float = 0.9, beta2: float = 0.999,
               eps: float = 1e-8) -> ParamStore:
    layers = list(segment)
    if len(layers) != len(grads):
        raise ShapeError(f"{len(grads)} gradient pairs for {len(layers)} layers")
    for i, (gw, gb) in zip(layers, grads):
        if gw.shape != store.weights[i].shape or gb.shape != store.biases[i].shape:
            raise ShapeError(f"layer {i}: gradient shapes {gw.shape}/{gb.shape} do not match parameters")
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NonFiniteError(f"non-finite gradient for layer {i}")
    for i, (gw, gb) in zip(layers, grads):
        store.steps[i] += 1
        t = int(store.steps[i])
        adamw_update(store.weights[i], gw, store.m_w[i], store.v_w[i], t, lr, weight_decay, beta1, beta2, eps)
        adamw_update(store.biases[i], gb, store.m_b[i], store.v_b[i], t, lr, weight_decay, beta1, beta2, eps)
    return store


def grad_norm(grads: Grads) -> float:
    return float(np.sqrt(sum(float(np.sum(gw * gw)) + float(np.sum(gb * gb)) for gw, gb in grads)))
