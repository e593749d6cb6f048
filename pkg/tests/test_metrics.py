from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynsplit.core.metrics import classification_metrics, confusion_matrix, mcc_from_confusion, minmax_normalize


def test_perfect_prediction():
    y = np.array([0, 1, 2, 3, 2, 1])
    m = classification_metrics(y, y, 4)
    assert m.accuracy == 1.0 and m.macro_f1 == 1.0 and m.mcc == 1.0


def test_constant_predictor_binary():
    labels = np.array([0] * 5 + [1] * 5)
    m = classification_metrics(np.zeros(10, dtype=int), labels, 2)
    assert m.accuracy == 0.5
    assert m.mcc == 0.0


def test_two_by_two_hand_value():
    # confusion [[2, 1], [1, 2]]
    labels = np.array([0, 0, 0, 1, 1, 1])
    preds = np.array([0, 0, 1, 0, 1, 1])
    cm = confusion_matrix(preds, labels, 2)
    assert cm.tolist() == [[2, 1], [1, 2]]
    m = classification_metrics(preds, labels, 2)
    assert m.accuracy == pytest.approx(4 / 6, abs=1e-15)
    assert m.mcc == pytest.approx(1 / 3, abs=1e-12)


def test_absent_classes_excluded_from_macro():
    # class 2 never appears in preds or labels
    preds = np.array([0, 1, 1, 0])
    labels = np.array([0, 1, 0, 0])
    m3 = classification_metrics(preds, labels, 3)
    m2 = classification_metrics(preds, labels, 2)
    assert m3 == m2


def test_hand_macro_values():
    preds = np.array([0, 1, 1, 0])
    labels = np.array([0, 1, 0, 0])
    m = classification_metrics(preds, labels, 2)
    # class 0: P = 2/2, R = 2/3; class 1: P = 1/2, R = 1/1
    assert m.macro_precision == pytest.approx((1 + 0.5) / 2)
    assert m.macro_recall == pytest.approx((2 / 3 + 1) / 2)
    f0 = 2 * 1 * (2 / 3) / (1 + 2 / 3)
    f1 = 2 * 0.5 * 1 / 1.5
    assert m.macro_f1 == pytest.approx((f0 + f1) / 2)


def test_errors():
    with pytest.raises(ValueError):
        classification_metrics([0, 1], [0], 2)
    with pytest.raises(ValueError):
        classification_metrics([], [], 2)
    with pytest.raises(ValueError):
        classification_metrics([0, 3], [0, 1], 2)


def test_mcc_zero_denominator():
    assert mcc_from_confusion(np.array([[4, 0], [0, 0]])) == 0.0


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60), st.randoms())
def test_metric_bounds_and_permutation_invariance(pairs, rnd):
    preds = np.array([p for p, _ in pairs])
    labels = np.array([l for _, l in pairs])
    m = classification_metrics(preds, labels, 4)
    assert 0.0 <= m.accuracy <= 1.0
    assert -1.0 - 1e-12 <= m.mcc <= 1.0 + 1e-12
    for v in (m.macro_precision, m.macro_recall, m.macro_f1):
        assert 0.0 <= v <= 1.0 and math.isfinite(v)
    assert m.accuracy == np.sum(preds == labels) / preds.size
    perm = list(range(len(pairs)))
    rnd.shuffle(perm)
    mp = classification_metrics(preds[perm], labels[perm], 4)
    for a, b in zip(m.as_dict().values(), mp.as_dict().values()):
        assert a == pytest.approx(b, abs=1e-12)


def test_minmax_examples():
    assert minmax_normalize([0, 5, 10]) == pytest.approx([0.01, 0.505, 1.0])
    assert minmax_normalize([7, 7, 7]) == [1.0, 1.0, 1.0]
    assert minmax_normalize([0.2, 0.8]) == pytest.approx([0.01, 1.0])


def test_minmax_errors():
    with pytest.raises(ValueError):
        minmax_normalize([])
    with pytest.raises(ValueError):
        minmax_normalize([1.0, float("nan")])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_minmax_bounds_and_idempotence(values):
    out = minmax_normalize(values)
    assert all(0.01 <= v <= 1.0 for v in out)
    # output already spans [lo, hi] (or is constant hi), so it maps onto itself
    assert minmax_normalize(out) == pytest.approx(out, abs=1e-9)
