"""A fitted scorer: imputation means, an optional encoder and a model.

``Scorer.predict`` takes a raw frame and returns risk scores, so every
downstream step (evaluation, equity, explanation) can treat the whole chain
as one function of the record.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .encode import Encoder, fit_transform, transform
from .errors import ConfigError
from .frame import Frame, column_means, impute
from .models import (BUILTIN_RULES, BoostHParams, GamHParams, Model, RandomScorer, RuleModel, fit_boosted,
                     fit_cyclic_gam, fit_naive_bayes, fit_tree, model_from_dict)

MATRIX_FAMILIES = ("boosted", "tree")
FRAME_FAMILIES = ("gam", "naive_bayes")
FIXED_FAMILIES = ("rule1", "rule2", "rule3", "random")
FAMILIES = MATRIX_FAMILIES + FRAME_FAMILIES + FIXED_FAMILIES


@dataclass
class Scorer:
    family: str
    model: Model
    means: dict[str, float] = field(default_factory=dict)
    encoder: Encoder | None = None
    features: list[str] | None = None

    def predict(self, frame: Frame) -> np.ndarray:
        if self.family in FIXED_FAMILIES:
            # rules read raw values so that missing never qualifies
            return self.model.predict(frame)
        clean = impute(frame, self.means)
        if self.encoder is None:
            return self.model.predict(clean)
        return self.model.predict(transform(self.encoder, clean))

    def to_dict(self) -> dict:
        return {"family": self.family, "model": self.model.to_dict(), "means": self.means,
                "encoder": self.encoder.to_dict() if self.encoder else None, "features": self.features}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Scorer":
        enc = Encoder.from_dict(d["encoder"]) if d.get("encoder") else None
        return cls(d["family"], model_from_dict(d["model"]), d.get("means", {}), enc, d.get("features"))


def fit_scorer(frame: Frame, family: str, hparams: dict | None = None, encoder: str | None = "count",
               encoder_params: dict | None = None, weights=None, seed: int = 0,
               categorical: list[str] | None = None) -> Scorer:
    """Fit one model family on ``frame`` (training rows only).

    ``categorical`` restricts the categorical columns the encoder and the
    frame-based learners see; numeric columns are always used.
    """
    hparams = dict(hparams or {})
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    if family.startswith("rule"):
        return Scorer(family, RuleModel(BUILTIN_RULES[family]))
    if family == "random":
        return Scorer(family, RandomScorer(seed))
    means = column_means(frame)
    clean = impute(frame, means)
    cats = list(categorical) if categorical is not None else frame.schema.categorical
    if family in FRAME_FAMILIES:
        features = cats + frame.schema.numeric
        if family == "gam":
            model = fit_cyclic_gam(clean, GamHParams(**{"seed": seed, **hparams}), weights, features)
        else:
            model = fit_naive_bayes(clean, weights, features=features, **hparams)
        return Scorer(family, model, means, None, features)
    if encoder is None:
        raise ConfigError(f"family {family!r} needs an encoder")
    enc, X = fit_transform(encoder, clean, {"seed": seed, **(encoder_params or {})}, cats)
    y = clean.labels
    if family == "boosted":
        model = fit_boosted(X, y, weights, BoostHParams(**{"seed": seed, **hparams}), X.columns)
    else:
        model = fit_tree(X, y, weights, seed=seed, feature_names=X.columns, **hparams)
    return Scorer(family, model, means, enc)
