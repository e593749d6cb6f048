"""Synthetic Gaussian-blob classification data and stratified splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TRAIN, VAL, TEST = 0, 1, 2
SPLIT_FRACTIONS = (0.75, 0.15, 0.10)
CENTER_SEPARATION = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, dim) float64
    labels: np.ndarray  # (n,) int64
    n_classes: int
    tags: np.ndarray | None = None  # (n,) of TRAIN/VAL/TEST

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValueError("features must be (n, dim) and labels (n,)")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def indices(self, tag: int) -> np.ndarray:
        if self.tags is None:
            raise ValueError("dataset has not been split")
        return np.flatnonzero(self.tags == tag)

    def part(self, tag: int) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices(tag)
        return self.features[idx], self.labels[idx]


def class_centers(n_classes: int, dim: int) -> np.ndarray:
    """Deterministic, pairwise-equidistant-ish class means.

    With ``dim >= n_classes`` the centers are scaled unit vectors (a regular
    simplex); otherwise they sit evenly on a circle in the first two axes.
    Adjacent centers are ``CENTER_SEPARATION`` apart in both layouts.
    """
    centers = np.zeros((n_classes, dim))
    if dim >= n_classes:
        centers[np.arange(n_classes), np.arange(n_classes)] = CENTER_SEPARATION / math.sqrt(2.0)
    else:
        radius = CENTER_SEPARATION / (2.0 * math.sin(math.pi / n_classes))
        angles = 2.0 * math.pi * np.arange(n_classes) / n_classes
        centers[:, 0] = radius * np.cos(angles)
        centers[:, 1] = radius * np.sin(angles)
    return centers


def make_blobs(n_samples: int, n_classes: int, dim: int, spread: float, seed: int) -> Dataset:
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if n_samples < n_classes:
        raise ValueError(f"need at least one sample per class ({n_samples} < {n_classes})")
    if spread < 0:
        raise ValueError("spread must be >= 0")
    rng = np.random.default_rng(seed)
    counts = np.full(n_classes, n_samples // n_classes)
    counts[: n_samples % n_classes] += 1
    labels = np.repeat(np.arange(n_classes), counts)
    labels = labels[rng.permutation(n_samples)]
    noise = rng.standard_normal((n_samples, dim))
    features = class_centers(n_classes, dim)[labels] + spread * noise
    return Dataset(features=features, labels=labels.astype(np.int64), n_classes=n_classes)


def split_train_val_test(ds: Dataset, seed: int) -> Dataset:
    """Stratified 75/15/10 split.

    Samples are ordered so that every class is spread evenly along the
    sequence, then cut into consecutive train/val/test blocks. Each class's
    share of every block is therefore within one sample of proportional.
    """
    n = len(ds)
    if n < ds.n_classes:
        raise ValueError(f"fewer samples ({n}) than classes ({ds.n_classes})")
    if n < 20:
        raise ValueError("need at least 20 samples to split")
    rng = np.random.default_rng(seed)
    keys = np.empty(n)
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        order = rng.permutation(members)
        keys[order] = (np.arange(order.size) + 0.5) / order.size + c * 1e-9
    ordering = np.argsort(keys, kind="stable")
    n_train = int(round(SPLIT_FRACTIONS[0] * n))
    n_val = int(round(SPLIT_FRACTIONS[1] * n))
    tags = np.empty(n, dtype=np.int64)
    tags[ordering[:n_train]] = TRAIN
    tags[ordering[n_train:n_train + n_val]] = VAL
    tags[ordering[n_train + n_val:]] = TEST
    return Dataset(features=ds.features, labels=ds.labels, n_classes=ds.n_classes, tags=tags)
