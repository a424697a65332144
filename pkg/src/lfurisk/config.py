"""Run configuration: YAML in, validated nested sections out, plus a stable hash."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import yaml

from .encode import CONTROL_KINDS, KINDS, RESERVED_KINDS
from .errors import ConfigError
from .pipeline import FAMILIES

DEFAULTS = {
    "seed": 0,
    "data": {
        "synth": {"n": 50000},
        "csv": [],
        "schema": None,
        "key": "EpisodeID",
    },
    "split": {"pes_months": 6, "fractions": [0.6, 0.2, 0.2]},
    "encoders": ["count", "target", "similarity"],
    "categorical": None,
    "models": {
        "families": ["boosted", "gam", "naive_bayes", "tree", "rule1", "rule2", "rule3"],
        "budget": 100,
        "spaces": {},
    },
    "metrics": {"k": 20, "av_recall": [10, 40], "bootstrap": 1000},
    "cohorts": ["State", "TypeOfCase", "Gender", "Month"],
    "fairness": {"column": "State", "tolerance": 0.02, "augment_column": "District", "copies": 10},
    "multiplicity": {"epsilon": 0.2, "candidates": 10},
    "explain": {"repeats": 10, "ale_feature": "Age", "ale_bins": 20, "surrogate_samples": 5000,
                "features": None},
}


def _merge(base: dict, override: dict, path: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict) and key not in ("synth", "spaces"):
            if not isinstance(value, dict):
                raise ConfigError(f"config field {where!r} must be a mapping")
            out[key] = _merge(base[key], value, where)
        elif key in ("synth", "spaces"):
            if value is not None and not isinstance(value, dict):
                raise ConfigError(f"config field {where!r} must be a mapping")
            out[key] = copy.deepcopy(value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(cond: bool, field: str, message: str):
    if not cond:
        raise ConfigError(f"config field {field!r}: {message}")


class RunConfig:
    """Resolved configuration. ``values`` is a plain nested dict."""

    def __init__(self, values: dict):
        self.values = values
        self.validate()

    @classmethod
    def from_dict(cls, d: dict | None) -> "RunConfig":
        return cls(_merge(DEFAULTS, d or {}, ""))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        return cls.from_dict(raw)

    def __getitem__(self, key):
        return self.values[key]

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        values = copy.deepcopy(self.values)
        values["seed"] = seed
        return RunConfig(values)

    def validate(self):
        v = self.values
        _require(isinstance(v["seed"], int) and 0 <= v["seed"] < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
        data = v["data"]
        # csv input takes precedence over synth settings
        _require(bool(data["csv"]) or data["synth"] is not None, "data", "give csv paths or synth settings")
        if data["csv"]:
            _require(data["schema"] is not None, "data.schema", "csv input needs a schema file")
        fr = v["split"]["fractions"]
        _require(isinstance(fr, list) and len(fr) == 3 and all(x > 0 for x in fr) and abs(sum(fr) - 1) < 1e-9,
                 "split.fractions", "three positive fractions summing to 1")
        _require(isinstance(v["split"]["pes_months"], int) and v["split"]["pes_months"] >= 1,
                 "split.pes_months", "positive integer")
        _require(bool(v["encoders"]), "encoders", "at least one encoder")
        for e in v["encoders"]:
            _require(e in KINDS or e in CONTROL_KINDS, "encoders",
                     f"{e!r} is {'unsupported' if e in RESERVED_KINDS else 'unknown'}")
        fams = v["models"]["families"]
        _require(bool(fams), "models.families", "at least one family")
        for f in fams:
            _require(f in FAMILIES, "models.families", f"unknown family {f!r}")
        _require(isinstance(v["models"]["budget"], int) and v["models"]["budget"] >= 1, "models.budget", ">= 1")
        k = v["metrics"]["k"]
        _require(0 < k <= 100, "metrics.k", "must lie in (0, 100]")
        lo, hi = v["metrics"]["av_recall"]
        _require(0 < lo <= hi <= 100, "metrics.av_recall", "need 0 < lo <= hi <= 100")
        _require(v["metrics"]["bootstrap"] >= 2, "metrics.bootstrap", ">= 2")
        _require(0 < v["multiplicity"]["epsilon"] < 1, "multiplicity.epsilon", "must lie in (0, 1)")
        _require(v["fairness"]["copies"] >= 0, "fairness.copies", ">= 0")
        _require(v["fairness"]["tolerance"] >= 0, "fairness.tolerance", ">= 0")
        _require(v["explain"]["repeats"] >= 1, "explain.repeats", ">= 1")

    def to_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
