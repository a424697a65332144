"""Paired bootstrap of evaluation metrics over fixed model scores."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..errors import DataError, UndefinedMetricError
from ..metric import AV_RECALL_KS, av_recall, rank_order, recall_at_k, targeted_count


@dataclass
class BootstrapSet:
    methods: list[str]
    replicates: np.ndarray      # (n_methods, B); NaN where the metric is undefined
    seed: int
    checksums: list[str]        # digest of resample b's row indices

    @property
    def B(self) -> int:
        return self.replicates.shape[1]

    def of(self, method: str) -> np.ndarray:
        return self.replicates[self.methods.index(method)]


def resample_indices(n: int, seed: int, b: int) -> np.ndarray:
    """Row indices of resample ``b``: n draws with replacement seeded by ``seed ^ b``."""
    return np.random.default_rng(seed ^ b).integers(0, n, n)


def _safe(metric, s, y):
    try:
        return metric(s, y)
    except UndefinedMetricError:
        return np.nan


def _recall_from_counts(order, labels, counts, ks) -> float:
    # distinct scores: a resample ranks as the original order with each row repeated counts times,
    # and copies of one row share a label, so recall needs no re-sort
    c = counts[order]
    pos = c * labels[order]
    cum_c, cum_p = np.cumsum(c), np.cumsum(pos)
    total = cum_p[-1]
    if total == 0:
        return np.nan
    n = int(cum_c[-1])
    ms = np.array([targeted_count(n, k) for k in ks])
    j = np.searchsorted(cum_c, ms)          # row holding the m-th targeted copy
    before_c = np.where(j > 0, cum_c[j - 1], 0)
    before_p = np.where(j > 0, cum_p[j - 1], 0)
    captured = (before_p + (ms - before_c) * labels[order][j]).astype(np.float64)
    return float(np.mean(captured / total)) if len(ks) > 1 else float(captured[0] / total)


_FAST = {recall_at_k: (20,), av_recall: AV_RECALL_KS}


def bootstrap_metric(scores: Mapping[str, np.ndarray], labels, B: int = 1000, seed: int = 0,
                     metric: Callable = recall_at_k) -> BootstrapSet:
    if B < 2:
        raise DataError("bootstrap needs B >= 2")
    if not scores:
        raise DataError("no methods to bootstrap")
    labels = np.asarray(labels)
    methods = list(scores)
    arrays = [np.asarray(scores[m], dtype=np.float64) for m in methods]
    if any(a.shape != labels.shape for a in arrays):
        raise DataError("all methods must be scored on the same evaluation rows")
    n = len(labels)
    ks = _FAST.get(metric)
    orders = [rank_order(a) if ks and np.unique(a).size == n else None for a in arrays]
    y_int = labels.astype(np.int64)
    reps = np.empty((len(methods), B))
    checksums = []
    for b in range(B):
        idx = resample_indices(n, seed, b)
        checksums.append(hashlib.blake2b(idx.tobytes(), digest_size=8).hexdigest())
        y = labels[idx]
        counts = np.bincount(idx, minlength=n) if any(o is not None for o in orders) else None
        for i, a in enumerate(arrays):
            if orders[i] is not None:
                reps[i, b] = _recall_from_counts(orders[i], y_int, counts, ks)
            else:
                reps[i, b] = _safe(metric, a[idx], y)
    return BootstrapSet(methods, reps, seed, checksums)


def confidence_interval(replicates, level: float = 0.95) -> tuple[float, float]:
    """Empirical percentile interval of the finite replicates."""
    r = np.asarray(replicates, dtype=np.float64)
    r = r[np.isfinite(r)]
    if r.size < 30:
        raise DataError("confidence interval needs at least 30 finite replicates")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(r, [tail, 1.0 - tail])
    return float(lo), float(hi)
