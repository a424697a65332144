"""Global and per-cohort (local) top-k thresholds and cohort-level evaluation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import DataError
from ..metric import rank_order, targeted_count
from .bootstrap import confidence_interval

MODES = ("global", "local")


def global_threshold(scores, k: float = 20) -> float:
    """The m-th largest score, m = max(1, floor(k n / 100))."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise DataError("threshold of an empty score vector")
    m = targeted_count(scores.size, k)
    return float(scores[rank_order(scores)[m - 1]])


def local_thresholds(scores, cohorts, k: float = 20) -> dict:
    scores = np.asarray(scores, dtype=np.float64)
    cohorts = pd.Series(np.asarray(cohorts, dtype=object))
    if len(cohorts) != len(scores):
        raise DataError("scores and cohort ids differ in length")
    out = {}
    for cid, idx in cohorts.groupby(cohorts, sort=True).indices.items():
        out[cid] = global_threshold(scores[idx], k)
    return out


def _top_mask(scores: np.ndarray, k: float) -> np.ndarray:
    mask = np.zeros(scores.size, dtype=bool)
    mask[rank_order(scores)[: targeted_count(scores.size, k)]] = True
    return mask


def _within_bootstrap(y, hit, B, rng, cells=4_000_000):
    n = y.size
    reps = np.empty(B)
    step = max(1, cells // n)
    for start in range(0, B, step):
        size = min(step, B - start)
        draws = rng.integers(0, n, (size, n))
        yy = y[draws]
        tot = yy.sum(axis=1)
        caught = (yy * hit[draws]).sum(axis=1)
        reps[start: start + size] = np.where(tot > 0, caught / np.maximum(tot, 1), np.nan)
    return reps


@dataclass
class CohortReport:
    column: str
    mode: str
    k: float
    rows: list[dict]

    def row(self, cohort) -> dict:
        for r in self.rows:
            if r["cohort"] == cohort:
                return r
        raise KeyError(cohort)

    def recalls(self) -> dict:
        return {r["cohort"]: r["recall"] for r in self.rows if r["defined"]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["cohort", "n", "positives", "recall", "effective_k", "ci_lo", "ci_hi", "defined"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({f: r[f] for f in fields})
        return buf.getvalue()


def cohort_eval(frame, scores, column: str, mode: str = "global", k: float = 20, B: int = 1000,
                seed: int = 0) -> CohortReport:
    """Per-cohort recall under a global threshold or per-cohort top-k targeting.

    In global mode a cohort's targeted rows are its members among the
    population top-k% (ties broken by row order), so its effective k can
    drift from ``k``. Bootstrap
    intervals resample rows within the cohort with the targeting held fixed.
    """
    if mode not in MODES:
        raise DataError(f"mode must be one of {MODES}")
    if column not in frame.schema.names:
        raise DataError(f"no cohort column {column!r}")
    scores = np.asarray(scores, dtype=np.float64)
    labels = frame.labels
    if scores.shape != labels.shape:
        raise DataError("scores do not match frame rows")
    ids = frame.column(column).astype(object).where(frame.column(column).notna(), "__missing__")
    top = _top_mask(scores, k)
    rows = []
    for cid, idx in ids.groupby(ids, sort=True).indices.items():
        s, y = scores[idx], labels[idx]
        hit = top[idx] if mode == "global" else _top_mask(s, k)
        pos = int(y.sum())
        row = {"cohort": cid, "n": int(idx.size), "positives": pos,
               "effective_k": float(100.0 * hit.sum() / idx.size),
               "recall": None, "ci_lo": None, "ci_hi": None, "defined": pos > 0}
        if pos > 0:
            row["recall"] = float((hit & (y == 1)).sum() / pos)
            if B >= 30:
                reps = _within_bootstrap(y, hit, B, np.random.default_rng([seed, len(rows)]))
                if np.isfinite(reps).sum() >= 30:
                    row["ci_lo"], row["ci_hi"] = confidence_interval(reps)
        rows.append(row)
    return CohortReport(column, mode, k, rows)
