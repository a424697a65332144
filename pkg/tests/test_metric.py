import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from sklearn.metrics import average_precision_score, roc_auc_score

from lfurisk.errors import DataError, UndefinedMetricError
from lfurisk.metric import (auc_pr, auc_roc, av_recall, effective_k, get_metric, lift, precision_at_k,
                            recall_at_k, recall_curve, targeted_count)


def brute_recall(scores, labels, k):
    # independent ranking: sort (score desc, index asc) with Python tuples
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    m = max(1, int(k * len(scores) // 100))
    return sum(labels[i] for i in order[:m]) / sum(labels)


cases = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 50).map(lambda v: v / 50), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n)))


def test_hand_case():
    s, y = [0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0]
    assert targeted_count(4, 50) == 2
    assert recall_at_k(s, y, 50) == 0.5
    expected = np.mean([brute_recall(s, y, k) for k in range(10, 41)])
    assert av_recall(s, y) == pytest.approx(expected, abs=1e-15)
    # m = 1 for k <= 25, 2 above: 16 values of 0.5 and 15 of 0.5
    assert av_recall(s, y) == 0.5


def test_perfect_scorer_clips_at_one():
    y = np.zeros(100, dtype=int)
    y[:3] = 1
    s = np.linspace(1, 0, 100)
    assert recall_at_k(s, y, 20) == 1.0
    assert av_recall(s, y) == 1.0


def test_targeted_count_floor_and_min_one():
    assert targeted_count(7, 20) == 1
    assert targeted_count(99, 20) == 19
    assert targeted_count(3, 1) == 1
    assert targeted_count(1000, 12.5) == 125
    with pytest.raises(DataError):
        targeted_count(10, 0)


def test_errors():
    with pytest.raises(UndefinedMetricError):
        recall_at_k([0.1, 0.2], [0, 0])
    with pytest.raises(DataError):
        recall_at_k([0.1], [0, 1])
    with pytest.raises(UndefinedMetricError):
        auc_roc([0.1, 0.2], [1, 1])
    with pytest.raises(DataError):
        lift(0.3, 0.0)


def test_lift_and_effective_k():
    assert lift(0.3, 0.2) == pytest.approx(50.0)
    assert effective_k([0.9, 0.5, 0.4, 0.1], 0.45) == 50.0
    assert precision_at_k([0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0], 50) == 0.5


def test_get_metric_names():
    s, y = [0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0]
    assert get_metric("Recall@50")(s, y) == 0.5
    assert get_metric("recall@20")(s, y) == recall_at_k(s, y, 20)
    with pytest.raises(DataError):
        get_metric("f1")


@given(cases)
@settings(max_examples=200, deadline=None)
def test_recall_matches_brute_force_and_bounds(case):
    s, y = case
    assume(sum(y) > 0)
    curve = recall_curve(s, y, range(1, 101))
    for k in (1, 10, 20, 37, 100):
        assert curve[k - 1] == pytest.approx(brute_recall(s, y, k), abs=1e-12)
    assert np.all(np.diff(curve) >= 0)
    assert curve[-1] == 1.0
    p = 100.0 * sum(y) / len(y)
    ks = np.arange(1, 101)
    # the bound uses the realised m; floor makes m*100/n <= k
    m = np.array([targeted_count(len(y), k) for k in ks])
    assert np.all(curve <= np.minimum(1.0, m / sum(y)) + 1e-12)
    assert np.all(curve[m >= 1] <= np.minimum(1.0, np.maximum(ks, 100 / len(y)) / p) + 1e-12)
    assert av_recall(s, y) == pytest.approx(np.mean(recall_curve(s, y, range(10, 41))), abs=0)


@given(cases)
@settings(max_examples=150, deadline=None)
def test_invariant_to_increasing_transform(case):
    s, y = case
    assume(0 < sum(y) < len(y))
    s = np.asarray(s)
    t = np.exp(3 * s) - 7
    assert recall_at_k(s, y) == recall_at_k(t, y)
    assert av_recall(s, y) == av_recall(t, y)
    assert auc_roc(s, y) == pytest.approx(auc_roc(t, y), abs=1e-12)
    assert auc_pr(s, y) == pytest.approx(auc_pr(t, y), abs=1e-12)


@given(cases)
@settings(max_examples=150, deadline=None)
def test_auc_against_sklearn(case):
    s, y = case
    assume(0 < sum(y) < len(y))
    assert auc_roc(s, y) == pytest.approx(roc_auc_score(y, s), abs=1e-12)
    assert auc_pr(s, y) == pytest.approx(average_precision_score(y, s), abs=1e-12)


@given(st.integers(2, 80).flatmap(lambda n: st.tuples(st.permutations(list(range(n))),
                                                        st.lists(st.integers(0, 1), min_size=n, max_size=n))))
@settings(max_examples=100, deadline=None)
def test_auc_complement(case):
    s, y = case
    assume(0 < sum(y) < len(y))
    s = np.asarray(s, dtype=float)
    assert auc_roc(s, y) + auc_roc(1 - s, y) == pytest.approx(1.0, abs=1e-12)


def test_random_scores_expected_values():
    rng = np.random.default_rng(0)
    y = (rng.random(200000) < 0.1).astype(int)
    s = rng.random(200000)
    assert recall_at_k(s, y) == pytest.approx(0.2, abs=0.01)
    assert av_recall(s, y) == pytest.approx(0.25, abs=0.01)
