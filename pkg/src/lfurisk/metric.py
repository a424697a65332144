"""Rank metrics for top-k targeting plus AUCs.

Rankings are descending by score with ties broken by ascending original
index, so every metric here is deterministic even on discrete scores.
The number of targeted patients for ``k`` percent of ``n`` is
``max(1, floor(k * n / 100))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, UndefinedMetricError


@dataclass(frozen=True)
class RankedSet:
    scores: np.ndarray
    labels: np.ndarray
    index: np.ndarray

    @property
    def n(self) -> int:
        return len(self.scores)


def _arrays(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be 1-D and of equal length")
    if scores.size == 0:
        raise DataError("empty score vector")
    return scores, labels.astype(np.int64)


def rank_order(scores) -> np.ndarray:
    """Indices sorting ``scores`` descending; ties by ascending index."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def rank(scores, labels) -> RankedSet:
    scores, labels = _arrays(scores, labels)
    order = rank_order(scores)
    return RankedSet(scores[order], labels[order], order)


def targeted_count(n: int, k: float) -> int:
    if not 0 < k <= 100:
        raise DataError(f"k must lie in (0, 100], got {k}")
    if float(k).is_integer():
        m = (int(k) * n) // 100
    else:
        m = math.floor(k * n / 100)
    return max(1, m)


def _captured(labels_sorted_cum, n, ks):
    return np.array([labels_sorted_cum[targeted_count(n, k) - 1] for k in ks], dtype=np.float64)


def recall_curve(scores, labels, ks) -> np.ndarray:
    """Recall@k for each k in ``ks`` from a single sort."""
    scores, labels = _arrays(scores, labels)
    total = labels.sum()
    if total == 0:
        raise UndefinedMetricError("recall is undefined without positive labels")
    cum = np.cumsum(labels[rank_order(scores)])
    return _captured(cum, len(scores), ks) / total


def recall_at_k(scores, labels, k: float = 20) -> float:
    return float(recall_curve(scores, labels, [k])[0])


AV_RECALL_KS = tuple(range(10, 41))


def av_recall(scores, labels, k_lo: int = 10, k_hi: int = 40) -> float:
    """Mean of Recall@k over the integers k_lo..k_hi inclusive."""
    if k_lo > k_hi:
        raise DataError("k_lo must not exceed k_hi")
    ks = range(int(k_lo), int(k_hi) + 1)
    return float(np.mean(recall_curve(scores, labels, ks)))


def precision_at_k(scores, labels, k: float = 20) -> float:
    scores, labels = _arrays(scores, labels)
    m = targeted_count(len(scores), k)
    return float(labels[rank_order(scores)[:m]].sum() / m)


def _both_classes(labels):
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise UndefinedMetricError("AUC needs both classes present")
    return n_pos


def auc_roc(scores, labels) -> float:
    """Mann-Whitney U statistic with average ranks for ties."""
    scores, labels = _arrays(scores, labels)
    n_pos = _both_classes(labels)
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auc_pr(scores, labels) -> float:
    """Step-wise average precision over distinct score thresholds."""
    scores, labels = _arrays(scores, labels)
    n_pos = _both_classes(labels)
    order = rank_order(scores)
    s, y = scores[order], labels[order]
    # last position of every run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[ends]
    precision = tp / (ends + 1)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def lift(value: float, reference: float) -> float:
    """Percentage improvement of ``value`` over ``reference``."""
    if reference <= 0:
        raise DataError("lift reference must be positive")
    return 100.0 * (value - reference) / reference


def effective_k(cohort_scores, threshold: float) -> float:
    """Percentage of a cohort at or above a (global) score threshold."""
    cohort_scores = np.asarray(cohort_scores, dtype=np.float64)
    if cohort_scores.size == 0:
        raise DataError("effective k of an empty cohort")
    return float(100.0 * np.count_nonzero(cohort_scores >= threshold) / cohort_scores.size)


def recall_above(scores, labels, threshold: float) -> float:
    """Recall when everyone scoring at or above ``threshold`` is targeted."""
    scores, labels = _arrays(scores, labels)
    total = labels.sum()
    if total == 0:
        raise UndefinedMetricError("recall is undefined without positive labels")
    return float(labels[scores >= threshold].sum() / total)


METRICS = {
    "recall@20": lambda s, y: recall_at_k(s, y, 20),
    "avrecall(10,40)": av_recall,
    "precision@20": lambda s, y: precision_at_k(s, y, 20),
    "auc_roc": auc_roc,
    "auc_pr": auc_pr,
}


def get_metric(name: str):
    key = name.lower().replace(" ", "")
    if key in METRICS:
        return METRICS[key]
    if key.startswith("recall@"):
        k = float(key[len("recall@"):])
        return lambda s, y: recall_at_k(s, y, k)
    raise DataError(f"unknown metric {name!r}")
