from __future__ import annotations

import numpy as np
import pytest

from dynsplit.splitnet.gradcheck import finite_diff_check, min_preactivation_gap, nudge_off_kinks, relative_error
from dynsplit.splitnet.network import LayerSpec, NetworkSpec, build_network, corrupted_backward


def _fixture(dims, seed=0, n=4):
    store = build_network(NetworkSpec.mlp(dims), seed)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, dims[0]))
    y = rng.integers(0, dims[-1], size=n)
    return store, nudge_off_kinks(store, x, rng), y


@pytest.mark.parametrize("cut", [1, 2])
def test_three_layer_relu(cut):
    store, x, y = _fixture([6, 10, 10, 4])
    assert min_preactivation_gap(store, x) >= 1e-3
    assert finite_diff_check(store, x, y, cut=cut) < 1e-6


def test_linear_net_near_exact():
    spec = NetworkSpec((LayerSpec(5, 7, "none"), LayerSpec(7, 6, "none"), LayerSpec(6, 3, "none")))
    store = build_network(spec, 2)
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(4, 5)), rng.integers(0, 3, size=4)
    assert finite_diff_check(store, x, y, cut=1) < 1e-9


def test_corrupted_backward_is_caught():
    store, x, y = _fixture([6, 10, 10, 4])
    with corrupted_backward():
        assert finite_diff_check(store, x, y, cut=2) > 0.1
    assert finite_diff_check(store, x, y, cut=2) < 1e-6


def test_check_leaves_store_untouched():
    store, x, y = _fixture([6, 10, 10, 4])
    before = store.copy()
    finite_diff_check(store, x, y)
    for a, b in zip(before.weights, store.weights):
        assert np.array_equal(a, b)


def test_relative_error_conventions():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_error(np.ones(3), -np.ones(3)) == 1.0
