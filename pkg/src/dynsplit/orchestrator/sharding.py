from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.data import TRAIN, VAL, Dataset
from ..core.rng import stream


@dataclass(frozen=True)
class ShardAssignment:
    train: tuple[np.ndarray, ...]  # per-device sample indices into the dataset
    val: tuple[np.ndarray, ...]

    @property
    def n_devices(self) -> int:
        return len(self.train)


def _train_indices(ds: Dataset) -> np.ndarray:
    return ds.indices(TRAIN) if ds.tags is not None else np.arange(len(ds))


def shard_iid(ds: Dataset, n_devices: int, seed: int) -> list[np.ndarray]:
    """Uniformly random partition of the training indices, sizes within one."""
    idx = _train_indices(ds)
    if not 1 <= n_devices <= idx.size:
        raise ValueError(f"cannot deal {idx.size} samples to {n_devices} devices")
    perm = np.random.default_rng(seed).permutation(idx)
    return [np.sort(part) for part in np.array_split(perm, n_devices)]


def shard_noniid(ds: Dataset, n_devices: int, shards_per_client: int, seed: int) -> list[np.ndarray]:
    """Sort by label, cut into contiguous class shards, deal them out at random."""
    idx = _train_indices(ds)
    n_shards = n_devices * shards_per_client
    if n_shards < 1 or idx.size < n_shards:
        raise ValueError(f"{idx.size} samples cannot fill {n_shards} shards")
    rng = np.random.default_rng(seed)
    # shuffle first so ties inside a class are broken at random, then stable-sort by label
    idx = rng.permutation(idx)
    by_label = idx[np.argsort(ds.labels[idx], kind="stable")]
    shards = np.array_split(by_label, n_shards)
    order = rng.permutation(n_shards)
    return [
        np.sort(np.concatenate([shards[j] for j in order[d * shards_per_client:(d + 1) * shards_per_client]]))
        for d in range(n_devices)
    ]


def validation_subsets(ds: Dataset, n_devices: int, size: int, seed: int) -> list[np.ndarray]:
    val = ds.indices(VAL)
    take = min(size, val.size)
    return [np.sort(stream(seed, "val-subset", d).choice(val, size=take, replace=False)) for d in range(n_devices)]


def make_shards(ds: Dataset, n_devices: int, kind: str, shards_per_client: int, val_size: int,
                seed: int) -> ShardAssignment:
    if kind == "iid":
        train = shard_iid(ds, n_devices, seed)
    elif kind == "noniid":
        train = shard_noniid(ds, n_devices, shards_per_client, seed)
    else:
        raise ValueError(f"unknown distribution {kind!r}")
    return ShardAssignment(tuple(train), tuple(validation_subsets(ds, n_devices, val_size, seed)))
