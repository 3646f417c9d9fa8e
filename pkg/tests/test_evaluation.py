import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from danet.dataset import Dataset
from danet.ecg_io import APC, NON_APC
from danet.errors import ShapeError
from danet.evaluation import (ConfusionMatrix, EmptyMatrixError, confusion, evaluate, format_table, metrics,
                              report_json)
from danet.models import build_classifier
from oracles import REPORTED_ROWS, TEST_APC, TEST_NON_APC, counts_from_rates, metrics_by_hand


def test_confusion_basic():
    assert confusion([0.9], [APC]) == ConfusionMatrix(1, 0, 0, 0)
    assert confusion([0.5], [APC]) == ConfusionMatrix(0, 0, 0, 1)
    assert confusion([0.5], [NON_APC]) == ConfusionMatrix(0, 0, 1, 0)
    with pytest.raises(ShapeError):
        confusion([0.1, 0.2], [APC])


def test_confusion_brute_force(rng):
    probs = rng.uniform(size=1000)
    labels = rng.integers(0, 2, size=1000)
    tp = fp = tn = fn = 0
    for p, y in zip(probs, labels):
        pred = p > 0.5
        if pred and y == 1:
            tp += 1
        elif pred:
            fp += 1
        elif y == 1:
            fn += 1
        else:
            tn += 1
    assert confusion(probs, labels) == ConfusionMatrix(tp, fp, tn, fn)
    assert confusion(probs, [APC if y else NON_APC for y in labels]) == ConfusionMatrix(tp, fp, tn, fn)


def test_metrics_reported_cnn_counts():
    rep = metrics(ConfusionMatrix(tp=428, fp=1170, tn=10114, fn=334))
    assert 100 * rep.se == pytest.approx(56.17, abs=0.01)
    assert 100 * rep.sp == pytest.approx(89.63, abs=0.01)
    assert 100 * rep.acc == pytest.approx(87.51, abs=0.01)
    assert 100 * rep.f_apc == pytest.approx(36.27, abs=0.01)
    assert 100 * rep.f_avg == pytest.approx(64.68, abs=0.01)


@pytest.mark.parametrize("row", REPORTED_ROWS)
def test_rows_match_hand_formulas(row):
    cm = counts_from_rates(*REPORTED_ROWS[row][:2])
    got = metrics(ConfusionMatrix(*cm))
    np.testing.assert_allclose([100 * v for v in got.row()], metrics_by_hand(*cm), atol=1e-9)


def test_perfect_and_constant():
    rep = metrics(confusion([1, 0, 1], [1, 0, 1]))
    assert rep.row() == [1.0] * 6 and rep.undefined == []
    const = metrics(confusion([0, 0, 0], [1, 0, 0]))
    assert const.se == 0 and const.sp == 1
    assert "ppv" in const.undefined and const.f_apc == 0.0


def test_empty_matrix():
    with pytest.raises(EmptyMatrixError):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_accuracy_identity_with_reported_cnn():
    se, sp = 0.5617, 0.8963
    acc = (se * TEST_APC + sp * TEST_NON_APC) / (TEST_APC + TEST_NON_APC)
    assert 100 * acc == pytest.approx(87.51, abs=0.01)


@given(tp=st.integers(0, 50), fp=st.integers(0, 50), tn=st.integers(0, 50), fn=st.integers(0, 50))
def test_metric_invariants(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    rep = metrics(ConfusionMatrix(tp, fp, tn, fn))
    assert all(0.0 <= v <= 1.0 for v in rep.row())
    assert rep.f_avg == (rep.f_apc + rep.f_nonapc) / 2
    p, n = tp + fn, tn + fp
    if p and n:
        assert rep.acc == pytest.approx((rep.se * p + rep.sp * n) / (p + n), abs=1e-12)


@given(seed=st.integers(0, 10_000), lo=st.floats(0, 1), hi=st.floats(0, 1))
def test_threshold_monotone(seed, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    r = np.random.default_rng(seed)
    probs, labels = r.uniform(size=60), r.integers(0, 2, size=60)
    labels[:2] = [0, 1]
    a, b = metrics(confusion(probs, labels, lo)), metrics(confusion(probs, labels, hi))
    assert b.se <= a.se and b.sp >= a.sp


def test_table_and_json():
    rows = {"CNN": metrics(ConfusionMatrix(428, 1170, 10114, 334))}
    table = format_table(rows)
    assert table.splitlines()[0].split() == ["Model", "Se", "Sp", "Acc", "F_APC", "F_NonAPC", "F_AVG"]
    assert "56.17%" in table and "64.68%" in table
    doc = json.loads(report_json(rows, {"seed": 1}))
    assert doc["seed"] == 1 and set(doc["CNN"]) >= {"se", "sp", "acc", "f_apc", "f_nonapc", "f_avg"}


def test_evaluate_constant_model_and_repeatability(rng):
    clf = build_classifier(seed=0)
    clf.out.weight.data[...] = 0.0
    clf.out.bias.data[...] = -50.0
    data = Dataset(["a", "b", "c"], rng.normal(size=(3, 1, 1500)), np.array([1.0, 0.0, 0.0]))
    rep, probs = evaluate("baseline", clf, data)
    assert rep.se == 0.0 and rep.sp == 1.0 and probs.shape == (3,)
    rep2, probs2 = evaluate("baseline", clf, data)
    assert rep2 == rep and np.array_equal(probs, probs2)
    with pytest.raises(ValueError):
        evaluate("danet", clf, data)
