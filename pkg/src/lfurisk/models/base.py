from __future__ import annotations

import json

import numpy as np

from ..encode import Matrix
from ..errors import DataError


def as_array(X, n_features: int | None = None) -> np.ndarray:
    values = X.values if isinstance(X, Matrix) else X
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DataError("feature matrix must be 2-D")
    if n_features is not None and values.shape[1] != n_features:
        raise DataError(f"expected {n_features} features, got {values.shape[1]}")
    return values


class Model:
    """Fitted scorer. ``predict`` returns risk scores in [0, 1]."""

    variant = "abstract"
    # frame-based learners read raw categoricals instead of an encoded matrix
    uses_frame = False

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class ConstantModel(Model):
    variant = "constant"

    def __init__(self, value: float, n_features: int | None = None, meta: dict | None = None):
        self.value = float(value)
        self.n_features = n_features
        self.meta = meta or {}

    def predict(self, X) -> np.ndarray:
        n = X.n if hasattr(X, "schema") else as_array(X, self.n_features).shape[0]
        return np.full(n, self.value)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "value": self.value, "n_features": self.n_features, "meta": self.meta}

    @classmethod
    def from_dict(cls, d):
        return cls(d["value"], d.get("n_features"), d.get("meta"))


class RandomScorer(Model):
    """Uniform random scores, the no-skill reference for Recall@k."""

    variant = "random"
    uses_frame = True

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def predict(self, frame) -> np.ndarray:
        n = frame.n if hasattr(frame, "schema") else len(frame)
        return np.random.default_rng(self.seed).random(n)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(d["seed"])


def ensemble_average(score_vectors) -> np.ndarray:
    """Element-wise arithmetic mean of equally long score vectors."""
    vectors = [np.asarray(v, dtype=np.float64) for v in score_vectors]
    if not vectors:
        raise DataError("ensemble of zero score vectors")
    n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise DataError("score vectors differ in length")
    for v in vectors:
        if np.any((v < 0) | (v > 1)):
            raise DataError("ensemble inputs must lie in [0, 1]")
    return np.sum(vectors, axis=0) / len(vectors)
