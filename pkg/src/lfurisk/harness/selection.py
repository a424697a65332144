"""Two-stage selection: encoder with the boosted reference, then model family.

Hyperparameters are tuned on the validation split, candidates compared on the
test split, and the winner refit on the whole modeling split. Frames tagged
with the passive-evaluation role are refused.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import ConfigError, LeakageError
from ..frame import Frame
from ..metric import av_recall
from ..pipeline import FIXED_FAMILIES, MATRIX_FAMILIES, Scorer, fit_scorer
from .bootstrap import bootstrap_metric
from .cd import CDResult, friedman_cd
from .search import SPACES, random_search

PES_ROLE = "pes"


def guard(*frames: Frame) -> None:
    for f in frames:
        if f.role == PES_ROLE:
            raise LeakageError("passive-evaluation rows must not be used for selection or tuning")


def concat(frames: list[Frame], role: str) -> Frame:
    data = pd.concat([f.data for f in frames], ignore_index=True)
    return Frame._trusted(frames[0].schema, data, role)


@dataclass
class SelectionOutcome:
    encoder: str
    family: str
    hparams: dict
    encoder_scores: dict[str, float]
    family_scores: dict[str, float]
    trials: list[dict]
    cd: CDResult | None
    scorer: Scorer | None = None
    roles_read: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {"encoder": self.encoder, "family": self.family, "hparams": self.hparams,
                "encoder_scores": self.encoder_scores, "family_scores": self.family_scores,
                "cd": self.cd.to_dict() if self.cd else None, "roles_read": sorted(self.roles_read)}


def tune(train: Frame, val: Frame, family: str, encoder: str | None, budget: int, seed: int,
         space: dict | None = None, categorical=None, tag: dict | None = None):
    """Random search of one family on (train -> val AvRecall); returns (params, SearchResult | None)."""
    guard(train, val)
    if family in FIXED_FAMILIES:
        return {}, None
    space = space if space is not None else SPACES[family]

    def objective(params):
        s = fit_scorer(train, family, params, encoder if family in MATRIX_FAMILIES else None,
                       seed=seed, categorical=categorical)
        return av_recall(s.predict(val), val.labels)

    result = random_search(space, objective, budget, seed, tag={"family": family, "encoder": encoder, **(tag or {})})
    return result.best_params, result


def select_encoder_then_model(train: Frame, val: Frame, test: Frame, encoders, families, budget: int = 100,
                              seed: int = 0, spaces: dict | None = None, categorical=None, B: int = 1000,
                              refit: bool = True) -> SelectionOutcome:
    encoders, families = list(encoders), list(families)
    if not encoders or not families:
        raise ConfigError("selection needs at least one encoder and one model family")
    guard(train, val, test)
    spaces = spaces or {}
    roles = {f.role for f in (train, val, test)}
    trials: list[dict] = []

    def score_on_test(family, encoder, params):
        s = fit_scorer(train, family, params, encoder if family in MATRIX_FAMILIES else None,
                       seed=seed, categorical=categorical)
        return s.predict(test)

    # stage 1: encoder choice with the boosted reference model
    enc_scores = {}
    for enc in encoders:
        params, res = tune(train, val, "boosted", enc, budget, seed, spaces.get("boosted"), categorical,
                           {"stage": "encoder"})
        trials += res.trials
        enc_scores[enc] = av_recall(score_on_test("boosted", enc, params), test.labels)
    best_enc = max(encoders, key=lambda e: (enc_scores[e], -encoders.index(e)))

    # stage 2: model family with the chosen encoder fixed
    fam_scores, fam_params, test_scores = {}, {}, {}
    for fam in families:
        params, res = tune(train, val, fam, best_enc, budget, seed, spaces.get(fam), categorical,
                           {"stage": "model"})
        if res is not None:
            trials += res.trials
        fam_params[fam] = params
        test_scores[fam] = score_on_test(fam, best_enc, params)
        fam_scores[fam] = av_recall(test_scores[fam], test.labels)
    best_fam = max(families, key=lambda f: (fam_scores[f], -families.index(f)))
    cd = None
    if len(families) > 1:
        cd = friedman_cd(bootstrap_metric(test_scores, test.labels, B, seed, av_recall))

    # stage 3: refit on the entire modeling split
    scorer = None
    if refit:
        modeling = concat([train, val, test], "modeling")
        scorer = fit_scorer(modeling, best_fam, fam_params[best_fam],
                            best_enc if best_fam in MATRIX_FAMILIES else None, seed=seed, categorical=categorical)
    return SelectionOutcome(best_enc, best_fam, fam_params[best_fam], enc_scores, fam_scores, trials, cd,
                            scorer, roles)
