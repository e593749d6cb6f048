from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynsplit.core.data import TEST, TRAIN, VAL, class_centers, make_blobs, split_train_val_test
from dynsplit.splitnet.network import NetworkSpec, adamw_step, build_network, forward_full, full_gradients


def test_blobs_deterministic():
    a = make_blobs(1000, 5, 8, 0.5, 3)
    b = make_blobs(1000, 5, 8, 0.5, 3)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()


def test_blobs_class_counts_within_one():
    ds = make_blobs(1003, 5, 8, 0.5, 0)
    counts = np.bincount(ds.labels, minlength=5)
    assert counts.max() - counts.min() <= 1
    assert set(np.unique(ds.labels)) == set(range(5))


def test_zero_spread_hits_centers():
    ds = make_blobs(50, 5, 8, 0.0, 1)
    centers = class_centers(5, 8)
    assert np.array_equal(ds.features, centers[ds.labels])
    # nearest-center classifier is perfect
    d = ((ds.features[:, None, :] - centers[None]) ** 2).sum(axis=2)
    assert np.all(d.argmin(axis=1) == ds.labels)


def test_centers_low_dim_layout_is_distinct():
    c = class_centers(5, 2)
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    assert d[~np.eye(5, dtype=bool)].min() > 1.0


def test_blobs_errors():
    with pytest.raises(ValueError):
        make_blobs(10, 0, 8, 0.5, 0)
    with pytest.raises(ValueError):
        make_blobs(3, 5, 8, 0.5, 0)
    with pytest.raises(ValueError):
        make_blobs(10, 2, 1, 0.5, 0)


def test_centralized_net_learns_blobs():
    # 3-layer network, 10 epochs of minibatch AdamW on (1000, 5, 8, 0.5)
    ds = split_train_val_test(make_blobs(1000, 5, 8, 0.5, 0), 0)
    store = build_network(NetworkSpec.mlp([8, 32, 32, 5]), 0)
    x, y = ds.part(TRAIN)
    rng = np.random.default_rng(0)
    for _ in range(10):
        order = rng.permutation(len(y))
        for start in range(0, len(y), 32):
            idx = order[start:start + 32]
            _, grads, _ = full_gradients(store, x[idx], y[idx])
            adamw_step(store, range(store.n_layers), grads, 1e-2, 1e-4)
    xt, yt = ds.part(TEST)
    acc = float(np.mean(forward_full(store, xt).argmax(axis=1) == yt))
    assert acc >= 0.95  # observed 1.0


def test_split_sizes_1000():
    ds = split_train_val_test(make_blobs(1000, 5, 8, 0.5, 0), 0)
    assert [ds.indices(t).size for t in (TRAIN, VAL, TEST)] == [750, 150, 100]


def test_split_twenty_two_classes():
    ds = split_train_val_test(make_blobs(20, 2, 4, 0.5, 0), 0)
    assert [ds.indices(t).size for t in (TRAIN, VAL, TEST)] == [15, 3, 2]
    assert set(ds.labels[ds.indices(TRAIN)]) == {0, 1}


def test_split_deterministic_and_seed_sensitive():
    base = make_blobs(200, 4, 4, 0.5, 0)
    a = split_train_val_test(base, 5).tags
    b = split_train_val_test(base, 5).tags
    c = split_train_val_test(base, 6).tags
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_split_errors():
    with pytest.raises(ValueError):
        split_train_val_test(make_blobs(19, 2, 4, 0.5, 0), 0)


@given(st.integers(20, 400), st.integers(2, 6), st.integers(0, 2**32))
def test_split_is_stratified_cover(n, c, seed):
    if n < c:
        return
    ds = split_train_val_test(make_blobs(n, c, 4, 0.5, seed), seed)
    sizes = [ds.indices(t).size for t in (TRAIN, VAL, TEST)]
    assert sum(sizes) == n
    assert abs(sizes[0] - 0.75 * n) <= 1 and abs(sizes[1] - 0.15 * n) <= 1
    for cls in range(c):
        members = np.flatnonzero(ds.labels == cls)
        train_share = np.sum(ds.tags[members] == TRAIN)
        assert abs(train_share - 0.75 * members.size) <= 1.5
