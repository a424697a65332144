"""Categorical naive Bayes with Laplace smoothing, Gaussian likelihood for numerics.

Class statistics are weighted counts, so a row with weight w contributes exactly
like w copies of itself.
"""
from __future__ import annotations

import warnings

import numpy as np
import pandas as pd
from scipy.special import expit

from ..errors import DataError
from ..frame import MISSING_TOKEN, Frame
from .base import ConstantModel, Model

VAR_FLOOR = 1e-9


class NaiveBayesModel(Model):
    variant = "naive_bayes"
    uses_frame = True

    def __init__(self, class_weight, counts, gaussians, alpha=1.0, meta=None):
        # class_weight: [w0, w1]; counts: feature -> {category: [c0, c1]};
        # gaussians: feature -> [[mean0, var0], [mean1, var1]]
        self.class_weight = [float(v) for v in class_weight]
        self.counts = counts
        self.gaussians = gaussians
        self.alpha = float(alpha)
        self.meta = meta or {}

    def log_odds(self, frame: Frame) -> np.ndarray:
        w0, w1 = self.class_weight
        out = np.full(frame.n, np.log(w1) - np.log(w0))
        # sorted order keeps the float sums identical after a JSON round trip
        for name in sorted(self.counts):
            table = self.counts[name]
            tokens = frame.column(name).astype(object).where(frame.column(name).notna(), MISSING_TOKEN)
            k = len(table)
            ratio = {c: np.log((v[1] + self.alpha) / (w1 + self.alpha * k))
                     - np.log((v[0] + self.alpha) / (w0 + self.alpha * k)) for c, v in table.items()}
            # categories never seen in training carry no evidence
            out += tokens.map(ratio).fillna(0.0).to_numpy(dtype=np.float64)
        for name in sorted(self.gaussians):
            (m0, v0), (m1, v1) = self.gaussians[name]
            x = frame.column(name).to_numpy(dtype=np.float64)
            term = (-0.5 * np.log(v1) - (x - m1) ** 2 / (2 * v1)) - (-0.5 * np.log(v0) - (x - m0) ** 2 / (2 * v0))
            out += np.where(np.isnan(x), 0.0, term)
        return out

    def predict(self, frame: Frame) -> np.ndarray:
        return expit(self.log_odds(frame))

    def to_dict(self) -> dict:
        return {"variant": self.variant, "class_weight": self.class_weight, "counts": self.counts,
                "gaussians": self.gaussians, "alpha": self.alpha, "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["class_weight"], d["counts"], d["gaussians"], d["alpha"], d.get("meta"))


def fit_naive_bayes(frame: Frame, weights=None, alpha: float = 1.0, features=None) -> Model:
    y = frame.labels
    w = np.ones(frame.n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != y.shape or np.any(w < 0):
        raise DataError("weights must be non-negative and aligned with rows")
    pos = y == 1
    w1, w0 = float(w[pos].sum()), float(w[~pos].sum())
    if w1 <= 0 or w0 <= 0:
        warnings.warn("degenerate labels: naive Bayes reduces to the base rate", RuntimeWarning)
        return ConstantModel(w1 / (w0 + w1) if w0 + w1 > 0 else 0.0, meta={"degenerate": True})
    names = list(features) if features is not None else frame.schema.features
    counts, gaussians = {}, {}
    for name in names:
        series = frame.column(name)
        if frame.schema.kind_of(name) == "categorical":
            tokens = series.astype(object).where(series.notna(), MISSING_TOKEN)
            table = pd.DataFrame({"c": tokens.to_numpy(), "w0": np.where(pos, 0.0, w), "w1": np.where(pos, w, 0.0)})
            sums = table.groupby("c", sort=True)[["w0", "w1"]].sum()
            counts[name] = {str(c): [float(a), float(b)] for c, a, b in zip(sums.index, sums["w0"], sums["w1"])}
        else:
            x = series.to_numpy(dtype=np.float64)
            params = []
            for mask in (~pos, pos):
                ok = mask & ~np.isnan(x)
                ww = w[ok]
                if ww.sum() <= 0:
                    raise DataError(f"numeric feature {name!r} has no values in one class")
                mean = float(np.average(x[ok], weights=ww))
                var = float(np.average((x[ok] - mean) ** 2, weights=ww))
                params.append([mean, max(var, VAR_FLOOR)])
            gaussians[name] = params
    return NaiveBayesModel([w0, w1], counts, gaussians, alpha, {"n_train": frame.n})
