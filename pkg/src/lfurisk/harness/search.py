"""Seeded random search over per-family hyperparameter distributions."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..models.boosted import MIN_SPLIT_LOSS_CHOICES, N_ESTIMATOR_CHOICES

# name -> (distribution, *arguments); drawn in key order
BOOST_SPACE = {
    "learning_rate": ("loguniform", 1e-7, 1.0),
    "n_estimators": ("choice", N_ESTIMATOR_CHOICES),
    "max_depth": ("randint", 1, 9),
    "min_child_weight": ("randint", 1, 8),
    "scale_pos_weight": ("randint", 1, 90),
    "reg_alpha": ("loguniform", 1e-5, 1.0),
    "reg_lambda": ("uniform", 1e-3, 1.0),
    "subsample": ("uniform", 0.5, 1.0),
    "colsample": ("uniform", 0.5, 1.0),
    "min_split_loss": ("choice", MIN_SPLIT_LOSS_CHOICES),
}
GAM_SPACE = {
    "learning_rate": ("loguniform", 0.005, 0.5),
    "n_cycles": ("choice", (25, 50, 100, 200)),
    "reg_lambda": ("uniform", 1e-3, 10.0),
}
TREE_SPACE = {
    "max_depth": ("randint", 2, 14),
    "min_samples_leaf": ("choice", (5, 10, 25, 50, 100, 250, 500)),
}
NAIVE_BAYES_SPACE = {"alpha": ("loguniform", 0.01, 10.0)}
SPACES = {"boosted": BOOST_SPACE, "gam": GAM_SPACE, "tree": TREE_SPACE, "naive_bayes": NAIVE_BAYES_SPACE}


def _draw(dist: tuple, rng: np.random.Generator):
    kind = dist[0]
    if kind == "loguniform":
        return float(math.exp(rng.uniform(math.log(dist[1]), math.log(dist[2]))))
    if kind == "uniform":
        return float(rng.uniform(dist[1], dist[2]))
    if kind == "randint":
        return int(rng.integers(dist[1], dist[2] + 1))
    if kind == "choice":
        values = dist[1]
        return values[int(rng.integers(len(values)))]
    raise ConfigError(f"unknown distribution {kind!r}")


def sample_params(space: dict, seed: int, trial: int) -> dict:
    rng = np.random.default_rng([seed, trial])
    return {name: _draw(dist, rng) for name, dist in space.items()}


def narrow(space: dict, **overrides) -> dict:
    """Copy of ``space`` with some distributions replaced (e.g. to bound run time)."""
    unknown = set(overrides) - set(space)
    if unknown:
        raise ConfigError(f"not in search space: {sorted(unknown)}")
    return {**space, **overrides}


@dataclass
class SearchResult:
    best_params: dict
    best_value: float
    best_trial: int
    trials: list[dict]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(t, sort_keys=True) + "\n" for t in self.trials)


def random_search(space: dict, objective: Callable[[dict], float], budget: int = 100, seed: int = 0,
                  tag: dict | None = None) -> SearchResult:
    """Evaluate ``budget`` i.i.d. draws and keep the highest objective.

    Ties keep the earliest trial; non-finite objectives never win.
    """
    if budget < 1:
        raise ConfigError("search budget must be >= 1")
    trials = []
    best, best_value = 0, -math.inf
    for t in range(budget):
        params = sample_params(space, seed, t)
        value = float(objective(params))
        trials.append({**(tag or {}), "trial": t, "seed": seed, "params": params, "objective": value})
        if math.isfinite(value) and value > best_value:
            best, best_value = t, value
    return SearchResult(trials[best]["params"], best_value, best, trials)
