"""Model explanations: permutation importance, accumulated local effects and a
kernel-weighted linear surrogate around one record.

Every function takes anything with ``predict(frame)`` (a fitted scorer) or a
plain callable mapping a frame to scores.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError
from .frame import Frame
from .metric import recall_at_k


def _predictor(model):
    return model.predict if hasattr(model, "predict") else model


@dataclass
class ImportanceReport:
    importances: dict[str, tuple[float, float]]  # feature -> (mean, std over repeats)
    metric: str
    repeats: int
    seed: int
    baseline: float

    def ranking(self) -> list[str]:
        names = list(self.importances)
        return sorted(names, key=lambda f: (-self.importances[f][0], names.index(f)))

    def to_rows(self) -> list[dict]:
        return [{"feature": f, "importance": self.importances[f][0], "std": self.importances[f][1]}
                for f in self.ranking()]


def pfi(model, frame: Frame, metric=None, repeats: int = 10, seed: int = 0, features=None,
        metric_name: str = "recall@20") -> ImportanceReport:
    """Drop in ``metric`` when one raw column is shuffled, averaged over seeded repeats.

    A feature entry may be a tuple of columns, which are then shuffled with the
    same permutation.
    """
    if repeats < 1:
        raise DataError("repeats must be >= 1")
    predict = _predictor(model)
    metric = metric or (lambda s, y: recall_at_k(s, y, 20))
    labels = frame.labels
    base = float(metric(predict(frame), labels))
    features = list(features) if features is not None else frame.schema.features
    out = {}
    for j, feat in enumerate(features):
        cols = feat if isinstance(feat, tuple) else (feat,)
        drops = np.empty(repeats)
        for r in range(repeats):
            perm = np.random.default_rng([seed, j, r]).permutation(frame.n)
            data = frame.data.copy()
            for c in cols:
                data[c] = frame.column(c).to_numpy()[perm]
            shuffled = Frame._trusted(frame.schema, data, frame.role)
            drops[r] = base - float(metric(predict(shuffled), labels))
        key = "+".join(cols)
        out[key] = (float(drops.mean()) if np.any(drops) else 0.0, float(drops.std()))
    return ImportanceReport(out, metric_name, repeats, seed, base)


@dataclass
class ALECurve:
    feature: str
    edges: np.ndarray       # bin boundaries, len = bins + 1
    values: np.ndarray      # centred accumulated effect at each bin's upper edge
    counts: np.ndarray
    center: float

    def value_at(self, x) -> np.ndarray:
        """Piecewise-linear curve through (lowest edge, -center) and the upper edges."""
        ys = np.concatenate([[-self.center], self.values])
        return np.interp(x, self.edges, ys)

    def to_rows(self) -> list[dict]:
        return [{"feature": self.feature, "lower": float(self.edges[b]), "upper": float(self.edges[b + 1]),
                 "count": int(self.counts[b]), "ale": float(self.values[b])} for b in range(len(self.values))]


def ale(model, frame: Frame, feature: str, bins: int = 20) -> ALECurve:
    if frame.schema.kind_of(feature) != "numeric":
        raise DataError(f"ALE needs a numeric feature, {feature!r} is not")
    predict = _predictor(model)
    x = frame.column(feature).to_numpy(dtype=np.float64)
    keep = np.flatnonzero(~np.isnan(x))
    x = x[keep]
    if keep.size == 0 or np.unique(x).size < 2:
        raise DataError(f"ALE undefined for constant feature {feature!r}")
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, bins + 1)))
    nb = len(edges) - 1
    b = np.clip(np.searchsorted(edges, x, side="left") - 1, 0, nb - 1)
    rows = frame.take(keep)
    hi = predict(rows.with_column(feature, edges[b + 1]))
    lo = predict(rows.with_column(feature, edges[b]))
    counts = np.bincount(b, minlength=nb)
    local = np.bincount(b, weights=hi - lo, minlength=nb) / np.maximum(counts, 1)
    acc = np.cumsum(local)
    center = float(np.sum(counts * acc) / counts.sum())
    return ALECurve(feature, edges, acc - center, counts, center)


@dataclass
class SurrogateResult:
    weights: dict[str, float]
    intercept: float
    r2: float
    ridge: bool
    kernel_width: float
    n_samples: int

    def to_json(self) -> str:
        return json.dumps({"weights": self.weights, "intercept": self.intercept, "r2": self.r2,
                           "ridge_fallback": self.ridge, "kernel_width": self.kernel_width,
                           "n_samples": self.n_samples}, sort_keys=True)


def local_surrogate(model, record: Frame, background: Frame, n_samples: int = 5000, width: float | None = None,
                    seed: int = 0, features=None, ridge: float = 1e-6) -> SurrogateResult:
    """Weighted least-squares linear fit to the model around ``record``.

    Categoricals are resampled from the background rows and enter the fit as
    "same as the record" indicators; numerics get Gaussian jitter at the
    background std and enter as raw differences, so a numeric weight is a
    slope in the column's own units. Samples are weighted by
    exp(-dist^2 / width^2) with dist = Hamming distance over categoricals
    plus the standardized Euclidean distance over numerics.
    """
    if record.n != 1:
        raise DataError("local surrogate explains exactly one record")
    predict = _predictor(model)
    feats = list(features) if features is not None else record.schema.features
    width = width if width is not None else 0.75 * np.sqrt(len(feats))
    rng = np.random.default_rng(seed)
    rec = record.data.iloc[0]
    data = pd.DataFrame({c: np.repeat(record.data[c].to_numpy(), n_samples) for c in record.schema.names})
    design, names = [], []
    hamming = np.zeros(n_samples)
    sq = np.zeros(n_samples)
    for f in feats:
        col = background.column(f).to_numpy()
        if record.schema.kind_of(f) == "categorical":
            drawn = col[rng.integers(0, col.size, n_samples)]
            data[f] = drawn
            same = (pd.Series(drawn).astype(object) == rec[f]).to_numpy(dtype=np.float64)
            hamming += 1.0 - same
            design.append(same)
        else:
            values = col.astype(np.float64)
            std = float(np.nanstd(values)) or 1.0
            delta = rng.normal(0.0, std, n_samples)
            data[f] = float(rec[f]) + delta
            sq += (delta / std) ** 2
            design.append(delta)
        names.append(f)
    samples = Frame._trusted(record.schema, data, record.role)
    target = np.asarray(predict(samples), dtype=np.float64)
    dist = hamming + np.sqrt(sq)
    w = np.exp(-(dist ** 2) / width ** 2)
    A = np.column_stack([np.ones(n_samples)] + design)
    sw = np.sqrt(w)
    Aw, tw = A * sw[:, None], target * sw
    used_ridge = np.linalg.matrix_rank(Aw) < A.shape[1]
    if used_ridge:
        gram = Aw.T @ Aw
        coef = np.linalg.solve(gram + ridge * max(np.trace(gram), 1.0) * np.eye(A.shape[1]), Aw.T @ tw)
    else:
        coef = np.linalg.lstsq(Aw, tw, rcond=None)[0]
    fitted = A @ coef
    mean = np.sum(w * target) / np.sum(w)
    ss_tot = np.sum(w * (target - mean) ** 2)
    r2 = 1.0 - np.sum(w * (target - fitted) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return SurrogateResult({n: float(c) for n, c in zip(names, coef[1:])}, float(coef[0]), float(r2),
                           bool(used_ridge), float(width), n_samples)
