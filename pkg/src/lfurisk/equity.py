"""Cohort equity tools: training-set duplication, log-inverse reweighting,
per-cohort additive score shifts and the Gini coefficient.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError
from .frame import Frame
from .metric import rank_order, targeted_count


def augment_duplicate(train: Frame, column: str, category, copies: int = 10) -> Frame:
    """Append ``copies`` extra copies of every row whose ``column`` equals ``category``."""
    if copies < 0:
        raise DataError("copies must be >= 0")
    values = train.column(column)
    match = np.flatnonzero((values == category).to_numpy())
    if match.size == 0:
        raise DataError(f"category {category!r} not present in {column!r}")
    if copies == 0:
        return train
    rows = np.concatenate([np.arange(train.n), np.tile(match, copies)])
    return train.take(rows)


def duplication_weights(train: Frame, column: str, category, copies: int = 10) -> np.ndarray:
    """Per-row weights equivalent to :func:`augment_duplicate`: copies + 1 on matching rows."""
    match = (train.column(column) == category).to_numpy()
    if not match.any():
        raise DataError(f"category {category!r} not present in {column!r}")
    return np.where(match, float(copies + 1), 1.0)


def reweigh_log_inverse(train: Frame, column: str) -> np.ndarray:
    """weight_i = ln(N / N_d(i)), N_d the size of row i's cohort."""
    ids = train.column(column).astype(object).where(train.column(column).notna(), "__missing__")
    sizes = ids.map(ids.value_counts()).to_numpy(dtype=np.float64)
    n = float(train.n)
    if np.all(sizes == n):
        raise DataError("log-inverse weights are all zero for a single cohort")
    return np.log(n / sizes)


@dataclass
class ShiftTable:
    shifts: dict
    k: float = 20.0
    tolerance: float = 0.02
    holdout: str | None = None
    gap_before: float | None = None
    gap_after: float | None = None
    sweeps: int = 0
    excluded: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"shifts": {str(c): v for c, v in self.shifts.items()}, "k": self.k, "tolerance": self.tolerance,
                "holdout": self.holdout, "gap_before": self.gap_before, "gap_after": self.gap_after,
                "sweeps": self.sweeps, "excluded": [str(c) for c in self.excluded]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ShiftTable":
        return cls({c: float(v) for c, v in d["shifts"].items()}, d["k"], d["tolerance"], d.get("holdout"),
                   d.get("gap_before"), d.get("gap_after"), d.get("sweeps", 0), d.get("excluded", []))


def _ids(cohorts) -> np.ndarray:
    s = pd.Series(np.asarray(cohorts, dtype=object))
    return s.where(s.notna(), "__missing__").astype(str).to_numpy(dtype=object)


def apply_shifts(scores, cohorts, table: ShiftTable) -> np.ndarray:
    """score + shift(cohort), clipped to [0, 1]; cohorts absent from the table get 0."""
    scores = np.asarray(scores, dtype=np.float64)
    ids = _ids(cohorts)
    offset = pd.Series(ids).map({str(c): v for c, v in table.shifts.items()}).fillna(0.0).to_numpy()
    return np.clip(scores + offset, 0.0, 1.0)


def _targeted(scores: np.ndarray, k: float) -> np.ndarray:
    # exactly m rows, ties broken by index, so clipped scores cannot widen the target set
    hit = np.zeros(scores.size, dtype=bool)
    hit[rank_order(scores)[: targeted_count(scores.size, k)]] = True
    return hit


def cohort_recalls(scores, labels, cohorts, k: float = 20) -> dict:
    """Recall of each cohort when the population top-k% (global threshold) is targeted."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    ids = _ids(cohorts)
    hit = _targeted(scores, k)
    out = {}
    for c in sorted(set(ids)):
        m = ids == c
        pos = labels[m].sum()
        if pos > 0:
            out[c] = float((hit[m] & (labels[m] == 1)).sum() / pos)
    return out


def max_gap(recalls: dict) -> float:
    v = list(recalls.values())
    return float(max(v) - min(v)) if len(v) > 1 else 0.0


def fit_shifts(scores, labels, cohorts, k: float = 20, tolerance: float = 0.02, max_sweeps: int = 100,
               step: float = 0.1, min_step: float = 1e-4, bound: float = 0.5, holdout: str | None = None) -> ShiftTable:
    """Coordinate search over per-cohort shifts minimising the max pairwise recall gap.

    Cohorts are visited round-robin; a trial move of +-step is kept only if it
    strictly lowers the gap. When a sweep changes nothing the step is halved,
    down to ``min_step``. The gap on the fitting data therefore never rises.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    ids = _ids(cohorts)
    cohort_list = sorted(set(ids))
    excluded = [c for c in cohort_list if labels[ids == c].sum() == 0]
    if excluded:
        warnings.warn(f"cohorts without positives excluded from shift fitting: {excluded}", RuntimeWarning)
    active = [c for c in cohort_list if c not in excluded]
    shifts = {c: 0.0 for c in cohort_list}

    codes = np.searchsorted(np.array(cohort_list, dtype=object), ids)
    act = np.array([c in active for c in cohort_list])
    pos = labels == 1
    n_pos = np.bincount(codes, weights=pos, minlength=len(cohort_list))

    def gap(table):
        shifted = np.clip(scores + np.array([table[c] for c in cohort_list])[codes], 0.0, 1.0)
        hit = _targeted(shifted, k)
        caught = np.bincount(codes, weights=hit & pos, minlength=len(cohort_list))
        rec = caught[act] / n_pos[act]
        return float(rec.max() - rec.min()) if rec.size > 1 else 0.0

    current = gap(shifts)
    before = current
    sweeps = 0
    while len(active) > 1 and current > tolerance and sweeps < max_sweeps and step >= min_step:
        sweeps += 1
        improved = False
        for c in active:
            for direction in (1.0, -1.0):
                trial = dict(shifts)
                trial[c] = float(np.clip(shifts[c] + direction * step, -bound, bound))
                if trial[c] == shifts[c]:
                    continue
                value = gap(trial)
                if value < current:
                    shifts, current, improved = trial, value, True
                    break
            if current <= tolerance:
                break
        if not improved:
            step /= 2.0
    return ShiftTable(shifts, k, tolerance, holdout, before, current, sweeps, excluded)


def gini(values) -> float:
    """sum_i sum_j |v_i - v_j| / (2 n^2 mean)."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0 or np.any(v < 0):
        raise DataError("Gini needs non-negative values")
    if not np.any(v > 0):
        raise DataError("Gini is undefined for all-zero values")
    n = v.size
    return float(np.abs(v[:, None] - v[None, :]).sum() / (2.0 * n * n * v.mean()))
