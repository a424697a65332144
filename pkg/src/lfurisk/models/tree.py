"""Single CART tree (Gini impurity) whose leaves score the weighted positive fraction."""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from ..errors import DataError
from .base import ConstantModel, Model, as_array
from .trees import Tree, predict_trees


class TreeModel(Model):
    variant = "tree"

    def __init__(self, tree: Tree, feature_names: list[str], params: dict, meta=None):
        self.tree = tree
        self.feature_names = list(feature_names)
        self.params = params
        self.meta = meta or {}

    def predict(self, X) -> np.ndarray:
        # the splitter compares float32 copies of the features; mirror that
        X = as_array(X, len(self.feature_names)).astype(np.float32).astype(np.float64)
        return predict_trees([self.tree], X)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "feature_names": self.feature_names, "params": self.params,
                "tree": self.tree.to_records(self.feature_names), "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(Tree.from_records(d["tree"]), d["feature_names"], d["params"], d.get("meta"))


def fit_tree(X, y, weights=None, max_depth: int | None = 8, min_samples_leaf: int = 50, seed: int = 0,
             feature_names=None) -> Model:
    X = as_array(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DataError("X and y lengths differ")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    rate = float(np.sum(w * y) / np.sum(w))
    if rate <= 0 or rate >= 1:
        warnings.warn("degenerate labels: tree reduces to the base rate", RuntimeWarning)
        return ConstantModel(rate, n_features=X.shape[1], meta={"degenerate": True})
    params = {"max_depth": max_depth, "min_samples_leaf": min_samples_leaf, "seed": seed}
    clf = DecisionTreeClassifier(criterion="gini", max_depth=max_depth, min_samples_leaf=min_samples_leaf,
                                 random_state=seed)
    clf.fit(X, y.astype(int), sample_weight=w)
    t = clf.tree_
    leaf = clf.apply(X)
    pos = np.bincount(leaf, weights=w * y, minlength=t.node_count)
    tot = np.bincount(leaf, weights=w, minlength=t.node_count)
    is_leaf = t.children_left < 0
    value = np.where(is_leaf, pos / np.where(tot > 0, tot, 1.0), 0.0)
    tree = Tree(np.where(is_leaf, -1, t.feature).astype(np.int32), np.where(is_leaf, 0.0, t.threshold),
                t.children_left.astype(np.int32), t.children_right.astype(np.int32), value,
                np.zeros(t.node_count), tot)
    return TreeModel(tree, names, params, {"n_train": len(y)})
