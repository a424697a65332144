"""Predictive multiplicity over a band of near-best models.

Each model's scores are binarized at its own top-k% threshold; ambiguity and
discrepancy then count disagreements with the best model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DataError
from .metric import rank_order, recall_at_k, targeted_count


def binarize_top_k(scores, k: float = 20) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    out = np.zeros(scores.size, dtype=np.int8)
    out[rank_order(scores)[: targeted_count(scores.size, k)]] = 1
    return out


@dataclass
class EpsilonSet:
    epsilon: float
    baseline: str
    baseline_metric: float
    members: list[str]              # excludes the baseline
    metrics: dict[str, float]
    baseline_pred: np.ndarray
    member_preds: np.ndarray        # (len(members), n) in {0, 1}

    @property
    def n(self) -> int:
        return self.baseline_pred.size

    def disagreement(self) -> np.ndarray:
        """Per-member fraction of patients predicted differently from the baseline."""
        if not self.members:
            return np.zeros(0)
        return (self.member_preds != self.baseline_pred).mean(axis=1)


def from_predictions(baseline_pred, member_preds, epsilon: float = 0.2) -> EpsilonSet:
    """Set built straight from binary predictions (metrics not tracked)."""
    base = np.asarray(baseline_pred, dtype=np.int8)
    mem = np.asarray(member_preds, dtype=np.int8).reshape(-1, base.size)
    names = [f"m{i}" for i in range(mem.shape[0])]
    return EpsilonSet(epsilon, "h0", float("nan"), names, {}, base, mem)


def build_epsilon_set(scores: Mapping[str, np.ndarray], labels, metric: Callable = recall_at_k,
                      epsilon: float = 0.2, k: float = 20) -> EpsilonSet:
    if not scores:
        raise DataError("no candidate models")
    if not 0 <= epsilon < 1:
        raise DataError("epsilon must lie in [0, 1)")
    names = list(scores)
    metrics = {m: float(metric(scores[m], labels)) for m in names}
    baseline = max(names, key=lambda m: (metrics[m], -names.index(m)))
    p = metrics[baseline]
    lo = (1.0 - epsilon) * p
    members = [m for m in names if m != baseline and lo <= metrics[m] <= p]
    base_pred = binarize_top_k(scores[baseline], k)
    preds = np.array([binarize_top_k(scores[m], k) for m in members], dtype=np.int8).reshape(len(members), base_pred.size)
    return EpsilonSet(epsilon, baseline, p, members, metrics, base_pred, preds)


def ambiguity(s: EpsilonSet) -> float:
    """Fraction of patients on whom at least one member disagrees with the baseline."""
    if not s.members:
        return 0.0
    return float(np.any(s.member_preds != s.baseline_pred, axis=0).mean())


def discrepancy(s: EpsilonSet) -> float:
    """Largest single-member disagreement fraction."""
    if not s.members:
        return 0.0
    return float(s.disagreement().max())


def report(s: EpsilonSet) -> dict:
    return {"epsilon": s.epsilon, "baseline": s.baseline, "baseline_metric": s.baseline_metric,
            "n_members": len(s.members), "ambiguity": ambiguity(s), "discrepancy": discrepancy(s),
            "members": {m: float(d) for m, d in zip(s.members, s.disagreement())}}


def report_json(s: EpsilonSet) -> str:
    return json.dumps(report(s), sort_keys=True)
