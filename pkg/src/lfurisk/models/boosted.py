"""Second-order (Newton) gradient boosting of regression trees on logistic loss."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, logit

from ..errors import ConfigError, DataError
from .base import ConstantModel, Model, as_array
from .trees import BinnedMatrix, Tree, grow_newton_tree, predict_codes, predict_trees, root_histograms

# Search ranges; see random search for the sampling distributions.
N_ESTIMATOR_CHOICES = (50, 100, 200, 400, 600, 800, 1000, 1200, 1500, 2000)
MIN_SPLIT_LOSS_CHOICES = (0.0, 0.3, 0.6, 0.9, 1.2, 2.0, 4.0, 6.0, 8.0)


@dataclass(frozen=True)
class BoostHParams:
    seed: int
    learning_rate: float = 0.1
    n_estimators: int = 100
    max_depth: int = 6
    min_child_weight: float = 1.0
    scale_pos_weight: float = 1.0
    reg_alpha: float = 0.0
    reg_lambda: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    min_split_loss: float = 0.0

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("boosting needs an explicit seed")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.n_estimators < 1 or self.max_depth < 0:
            raise ConfigError("n_estimators >= 1 and max_depth >= 0 required")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample <= 1:
            raise ConfigError("subsample and colsample must lie in (0, 1]")
        if min(self.min_child_weight, self.reg_alpha, self.reg_lambda, self.min_split_loss) < 0:
            raise ConfigError("regularisation terms must be non-negative")
        if self.scale_pos_weight <= 0:
            raise ConfigError("scale_pos_weight must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class BoostedModel(Model):
    variant = "boosted"

    def __init__(self, base_margin: float, trees: list[Tree], feature_names: list[str], hparams: BoostHParams,
                 meta: dict | None = None):
        self.base_margin = float(base_margin)
        self.trees = trees
        self.feature_names = list(feature_names)
        self.hparams = hparams
        self.meta = meta or {}

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def margin(self, X, n_trees: int | None = None) -> np.ndarray:
        X = as_array(X, self.n_features)
        return predict_trees(self.trees, X, self.base_margin, n_trees)

    def predict(self, X) -> np.ndarray:
        return expit(self.margin(X))

    def used_features(self) -> set[int]:
        return {int(f) for t in self.trees for f in t.feature if f >= 0}

    def to_dict(self) -> dict:
        return {"variant": self.variant, "base_margin": self.base_margin,
                "feature_names": self.feature_names, "hparams": self.hparams.to_dict(),
                "trees": [t.to_records(self.feature_names) for t in self.trees], "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        return cls(d["base_margin"], [Tree.from_records(r) for r in d["trees"]], d["feature_names"],
                   BoostHParams(**d["hparams"]), d.get("meta"))


def gradient_pairs(margin: np.ndarray, y: np.ndarray, weights: np.ndarray, scale_pos_weight: float):
    """Logistic-loss gradient and hessian, scaled by row weight (and class weight for positives)."""
    p = expit(margin)
    w = weights * np.where(y == 1, scale_pos_weight, 1.0)
    return (p - y) * w, p * (1.0 - p) * w


def _effective_weights(y, weights, hp):
    return weights * np.where(y == 1, hp.scale_pos_weight, 1.0)


def initial_margin(y, weights, hp: BoostHParams) -> float:
    w = _effective_weights(y, weights, hp)
    return float(logit(np.sum(w * y) / np.sum(w)))


def _prepare(X, y, weights):
    X = as_array(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DataError("X and y lengths differ")
    if not np.all(np.isfinite(X)):
        raise DataError("X must be finite")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("y must be binary")
    weights = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    if weights.shape != y.shape or np.any(weights < 0):
        raise DataError("weights must be non-negative and aligned with y")
    return X, y, weights


def fit_boosted(X, y, weights=None, hp: BoostHParams | None = None, feature_names=None) -> Model:
    """Stagewise Newton boosting with exact greedy splits.

    Each round computes logistic gradients at the current margin, grows one
    tree on a seeded row/column subsample and adds its learning-rate-scaled
    leaf values. The starting margin is the logit of the weighted base rate.
    """
    if hp is None:
        raise ConfigError("fit_boosted needs hyperparameters with a seed")
    X, y, weights = _prepare(X, y, weights)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    w_eff = _effective_weights(y, weights, hp)
    pos_w = float(np.sum(w_eff * y))
    if pos_w <= 0 or pos_w >= np.sum(w_eff):
        warnings.warn("degenerate labels: boosted model reduces to the base rate", RuntimeWarning)
        rate = float(np.sum(weights * y) / np.sum(weights)) if np.sum(weights) > 0 else 0.0
        return ConstantModel(rate, n_features=X.shape[1], meta={"degenerate": True})
    base = initial_margin(y, weights, hp)
    binned = BinnedMatrix.from_array(X)
    n, d = X.shape
    margin = np.full(n, base)
    n_cols = max(1, int(round(hp.colsample * d)))
    n_rows = max(1, int(round(hp.subsample * n)))
    all_rows = np.arange(n, dtype=np.int64)
    trees = []
    for t in range(hp.n_estimators):
        rng = np.random.default_rng([hp.seed, t])
        rows = all_rows if n_rows == n else np.sort(rng.choice(n, n_rows, replace=False)).astype(np.int64)
        cols = np.arange(d, dtype=np.int64) if n_cols == d else np.sort(rng.choice(d, n_cols, replace=False)).astype(np.int64)
        g, h = gradient_pairs(margin, y, weights, hp.scale_pos_weight)
        feat, sbin, left, right, value, gain, cover, _ = grow_newton_tree(
            binned.codes, g, h, rows, cols, binned.offsets, binned.nbins, hp.max_depth,
            hp.reg_lambda, hp.reg_alpha, hp.min_split_loss, hp.min_child_weight, hp.learning_rate)
        predict_codes(binned.codes, feat, sbin, left, right, value, margin)
        threshold = np.array([binned.values[f][b] if f >= 0 else 0.0 for f, b in zip(feat, sbin)])
        trees.append(Tree(feat.copy(), threshold, left.copy(), right.copy(), value.copy(), gain.copy(), cover.copy()))
    return BoostedModel(base, trees, names, hp, {"n_train": n})


def first_round_statistics(X, y, weights=None, hp: BoostHParams | None = None):
    """Gradient/hessian sums the first boosting round splits on.

    Returns the root (G, H) and the per-(column, distinct value) histograms.
    """
    hp = hp or BoostHParams(seed=0)
    X, y, weights = _prepare(X, y, weights)
    base = initial_margin(y, weights, hp)
    g, h = gradient_pairs(np.full(len(y), base), y, weights, hp.scale_pos_weight)
    hg, hh = root_histograms(BinnedMatrix.from_array(X), g, h)
    return {"G": math.fsum(g), "H": math.fsum(h), "hist_g": hg, "hist_h": hh, "base_margin": base}
