"""Friedman rank test with Wilcoxon/Holm post-hoc and clique grouping."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, rankdata, wilcoxon

from ..errors import DataError
from .bootstrap import BootstrapSet


@dataclass
class CDResult:
    methods: list[str]
    avg_rank: dict[str, float]
    statistic: float
    p_value: float
    rejected: bool
    pairwise: dict[tuple[str, str], float] = field(default_factory=dict)  # Holm-adjusted
    cliques: list[list[str]] = field(default_factory=list)

    def clique_of(self, method: str) -> list[int]:
        return [i for i, c in enumerate(self.cliques) if method in c]

    def to_rows(self) -> list[dict]:
        order = sorted(self.methods, key=lambda m: (self.avg_rank[m], self.methods.index(m)))
        return [{"method": m, "avg_rank": self.avg_rank[m],
                 "clique_id": ";".join(str(i) for i in self.clique_of(m))} for m in order]

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "rejected": self.rejected,
                "avg_rank": self.avg_rank, "cliques": self.cliques,
                "pairwise": [{"a": a, "b": b, "p_holm": p} for (a, b), p in self.pairwise.items()]}


def block_ranks(values: np.ndarray) -> np.ndarray:
    """Rank methods within each replicate (column); best metric gets rank 1, ties averaged."""
    return np.apply_along_axis(lambda col: rankdata(-col, method="average"), 0, values)


def friedman_statistic(values: np.ndarray) -> float:
    """Tie-corrected Friedman chi-square for a (methods, blocks) array."""
    k, n = values.shape
    ranks = block_ranks(values)
    r_sum = ranks.sum(axis=1)
    ssr = float(np.sum((r_sum - n * (k + 1) / 2.0) ** 2))
    ties = 0.0
    for col in values.T:
        _, counts = np.unique(col, return_counts=True)
        ties += float(np.sum(counts ** 3 - counts))
    denom = n * k * (k + 1) / 12.0 - ties / (12.0 * (k - 1))
    if denom <= 0:
        return 0.0
    return ssr / denom


def holm(p_values) -> np.ndarray:
    p = np.asarray(p_values, dtype=np.float64)
    m = len(p)
    order = np.argsort(p, kind="stable")
    adj = np.empty(m)
    running = 0.0
    for i, j in enumerate(order):
        running = max(running, min(1.0, (m - i) * p[j]))
        adj[j] = running
    return adj


def _wilcoxon_p(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    if not np.any(d != 0):
        return 1.0
    return float(wilcoxon(d, zero_method="wilcox", alternative="two-sided").pvalue)


def cliques_from(order: list[str], significant: set[frozenset]) -> list[list[str]]:
    """Maximal runs of the rank-ordered list with no significant pair inside."""
    out: list[list[str]] = []
    for i in range(len(order)):
        j = i
        while j + 1 < len(order) and all(frozenset((order[t], order[j + 1])) not in significant
                                         for t in range(i, j + 1)):
            j += 1
        run = order[i: j + 1]
        if not out or not set(run) <= set(out[-1]):
            out.append(run)
    return out


def friedman_cd(bs: BootstrapSet | np.ndarray, methods=None, alpha: float = 0.05) -> CDResult:
    values = bs.replicates if isinstance(bs, BootstrapSet) else np.asarray(bs, dtype=np.float64)
    names = list(bs.methods) if isinstance(bs, BootstrapSet) else list(methods or range(values.shape[0]))
    keep = np.all(np.isfinite(values), axis=0)
    values = values[:, keep]
    k, n = values.shape
    if k < 2 or n < 10:
        raise DataError("critical-difference analysis needs >= 2 methods and >= 10 replicates")
    avg = block_ranks(values).mean(axis=1)
    avg_rank = {m: float(r) for m, r in zip(names, avg)}
    stat = friedman_statistic(values)
    p = float(chi2.sf(stat, k - 1)) if stat > 0 else 1.0
    rejected = p < alpha
    pairwise = {}
    significant: set[frozenset] = set()
    if rejected:
        pairs = list(itertools.combinations(range(k), 2))
        raw = [_wilcoxon_p(values[i], values[j]) for i, j in pairs]
        for (i, j), adj in zip(pairs, holm(raw)):
            pairwise[(names[i], names[j])] = float(adj)
            if adj < alpha:
                significant.add(frozenset((names[i], names[j])))
    order = sorted(names, key=lambda m: (avg_rank[m], names.index(m)))
    return CDResult(names, avg_rank, stat, p, rejected, pairwise, cliques_from(order, significant))
