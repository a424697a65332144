"""Cyclic boosting of a generalized additive model (EBM-style, main effects only).

Features are visited round-robin. Each visit fits one depth-1 stump on that
feature alone to the current logistic gradient and adds its learning-rate
scaled Newton leaf values to the feature's shape function. Categorical
features split on an ordered partition of their categories; numeric features
are pre-binned into at most ``max_bins`` quantile bins.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from ..errors import ConfigError, DataError
from ..frame import MISSING_TOKEN, Frame
from .base import ConstantModel, Model


@dataclass(frozen=True)
class GamHParams:
    learning_rate: float = 0.05
    n_cycles: int = 200
    max_bins: int = 64
    reg_lambda: float = 1.0
    min_child_weight: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1 or self.n_cycles < 1 or not 2 <= self.max_bins <= 64:
            raise ConfigError("invalid GAM hyperparameters")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ShapeFunction:
    """Additive contribution of one feature.

    Categorical: ``categories`` holds the level names and ``values`` their
    contributions. Numeric: ``edges`` are the inner bin edges (bin b covers
    ``edges[b-1] < x <= edges[b]``), ``values`` has one more entry than
    ``edges``, and ``missing`` is used for absent values.
    """

    feature: str
    kind: str
    values: np.ndarray
    categories: list[str] | None = None
    edges: np.ndarray | None = None
    missing: float = 0.0

    def codes(self, series: pd.Series) -> tuple[np.ndarray, np.ndarray]:
        """Bin index per row and a mask of rows falling outside the fitted bins."""
        if self.kind == "categorical":
            tokens = series.astype(object).where(series.notna(), MISSING_TOKEN)
            lookup = {c: i for i, c in enumerate(self.categories)}
            codes = tokens.map(lookup)
            outside = codes.isna().to_numpy()
            return codes.fillna(0).to_numpy(dtype=np.int64), outside
        x = series.to_numpy(dtype=np.float64)
        outside = np.isnan(x)
        codes = np.searchsorted(self.edges, np.where(outside, 0.0, x), side="left")
        return codes.astype(np.int64), outside

    def contribution(self, series: pd.Series) -> np.ndarray:
        codes, outside = self.codes(series)
        out = self.values[codes]
        if not outside.any():
            return out
        if self.kind == "numeric":
            return np.where(outside, self.missing, out)
        # absent values route to the missing level; unseen levels contribute nothing
        is_missing = series.isna().to_numpy() | (series.astype(object) == MISSING_TOKEN).to_numpy()
        return np.where(outside, np.where(is_missing, self.missing, 0.0), out)

    def to_dict(self) -> dict:
        d = {"feature": self.feature, "kind": self.kind, "values": self.values.tolist(), "missing": self.missing}
        if self.kind == "categorical":
            d["categories"] = self.categories
        else:
            d["edges"] = self.edges.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["kind"], np.asarray(d["values"], dtype=np.float64),
                   d.get("categories"), np.asarray(d["edges"]) if "edges" in d else None, d.get("missing", 0.0))


class GamModel(Model):
    variant = "gam"
    uses_frame = True

    def __init__(self, intercept: float, shapes: list[ShapeFunction], hparams: GamHParams, meta=None):
        self.intercept = float(intercept)
        self.shapes = shapes
        self.hparams = hparams
        self.meta = meta or {}

    def contributions(self, frame: Frame) -> np.ndarray:
        """Per-row, per-feature additive terms, shape (n, n_features)."""
        cols = []
        for s in self.shapes:
            if s.feature not in frame.schema.names:
                raise DataError(f"frame lacks GAM feature {s.feature!r}")
            cols.append(s.contribution(frame.column(s.feature)))
        return np.column_stack(cols) if cols else np.zeros((frame.n, 0))

    def margin(self, frame: Frame) -> np.ndarray:
        return self.intercept + self.contributions(frame).sum(axis=1)

    def predict(self, frame: Frame) -> np.ndarray:
        return expit(self.margin(frame))

    def shape(self, feature: str) -> ShapeFunction:
        for s in self.shapes:
            if s.feature == feature:
                return s
        raise KeyError(feature)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "intercept": self.intercept, "hparams": self.hparams.to_dict(),
                "shapes": [s.to_dict() for s in self.shapes], "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["intercept"], [ShapeFunction.from_dict(s) for s in d["shapes"]],
                   GamHParams(**d["hparams"]), d.get("meta"))


def _bin_feature(frame: Frame, name: str, max_bins: int) -> tuple[ShapeFunction, np.ndarray]:
    series = frame.column(name)
    if frame.schema.kind_of(name) == "categorical":
        tokens = series.astype(object).where(series.notna(), MISSING_TOKEN).to_numpy()
        codes, uniques = pd.factorize(tokens, sort=True)
        cats = [str(u) for u in uniques]
        return ShapeFunction(name, "categorical", np.zeros(len(cats)), categories=cats), codes.astype(np.int64)
    x = series.to_numpy(dtype=np.float64)
    present = x[~np.isnan(x)]
    if present.size == 0:
        raise DataError(f"numeric feature {name!r} has no values")
    qs = np.quantile(present, np.linspace(0, 1, max_bins + 1)[1:-1])
    edges = np.unique(qs)
    edges = edges[edges < present.max()]
    nb = len(edges) + 1
    codes = np.where(np.isnan(x), nb, np.searchsorted(edges, np.nan_to_num(x), side="left"))
    return ShapeFunction(name, "numeric", np.zeros(nb), edges=edges), codes.astype(np.int64)


def _best_stump(G, H, order, lam, mcw):
    """Best cut of ``order`` into prefix/suffix; returns (gain, cut) or (0, -1)."""
    Gs, Hs = G[order], H[order]
    GL, HL = np.cumsum(Gs)[:-1], np.cumsum(Hs)[:-1]
    Gt, Ht = Gs.sum(), Hs.sum()
    GR, HR = Gt - GL, Ht - HL
    ok = (HL >= mcw) & (HR >= mcw)
    if not ok.any():
        return 0.0, -1
    gain = GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - Gt ** 2 / (Ht + lam)
    gain = np.where(ok, gain, -np.inf)
    cut = int(np.argmax(gain))
    return float(gain[cut]), cut


def fit_cyclic_gam(frame: Frame, hp: GamHParams | None = None, weights=None, features=None) -> Model:
    hp = hp or GamHParams()
    y = frame.labels.astype(np.float64)
    w = np.ones(frame.n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != y.shape or np.any(w < 0):
        raise DataError("weights must be non-negative and aligned with rows")
    rate = float(np.sum(w * y) / np.sum(w))
    if rate <= 0 or rate >= 1:
        warnings.warn("degenerate labels: GAM reduces to the base rate", RuntimeWarning)
        return ConstantModel(rate, meta={"degenerate": True})
    names = list(features) if features is not None else frame.schema.features
    binned = [_bin_feature(frame, name, hp.max_bins) for name in names]
    intercept = float(logit(rate))
    margin = np.full(frame.n, intercept)
    lam, mcw = hp.reg_lambda, hp.min_child_weight
    for _ in range(hp.n_cycles):
        for shape, codes in binned:
            p = expit(margin)
            g = (p - y) * w
            h = p * (1 - p) * w
            nb = len(shape.values) + (1 if shape.kind == "numeric" else 0)
            G = np.bincount(codes, weights=g, minlength=nb)
            H = np.bincount(codes, weights=h, minlength=nb)
            seen = np.flatnonzero(H > 0)
            if seen.size < 2:
                continue
            if shape.kind == "categorical":
                order = seen[np.argsort(G[seen] / (H[seen] + lam), kind="stable")]
            else:
                order = seen
            gain, cut = _best_stump(G, H, order, lam, mcw)
            if cut < 0 or gain <= 0:
                continue
            left, right = order[: cut + 1], order[cut + 1:]
            delta = np.zeros(nb)
            delta[left] = -hp.learning_rate * G[left].sum() / (H[left].sum() + lam)
            delta[right] = -hp.learning_rate * G[right].sum() / (H[right].sum() + lam)
            if shape.kind == "numeric":
                shape.missing += delta[-1]
                shape.values += delta[:-1]
            else:
                shape.values += delta
            margin += delta[codes]
    total_w = np.sum(w)
    for shape, codes in binned:
        if shape.kind == "numeric":
            table = np.append(shape.values, shape.missing)
        else:
            table = shape.values
        center = float(np.sum(w * table[codes]) / total_w)
        shape.values = shape.values - center
        shape.missing -= center
        intercept += center
        if shape.kind == "categorical" and MISSING_TOKEN in shape.categories:
            shape.missing = float(shape.values[shape.categories.index(MISSING_TOKEN)])
        elif shape.kind == "categorical":
            shape.missing = 0.0
    return GamModel(intercept, [s for s, _ in binned], hp, {"n_train": frame.n})
