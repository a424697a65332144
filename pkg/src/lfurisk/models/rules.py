"""Rule baselines: score = fraction of the rule's conditions a record meets.

Missing values never qualify.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import ConfigError, DataError
from .base import Model


@dataclass(frozen=True)
class Condition:
    feature: str
    categories: frozenset[str] | None = None
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if (self.categories is None) == (self.low is None and self.high is None):
            raise ConfigError(f"condition on {self.feature!r} needs either categories or an interval")

    def qualifies(self, values: pd.Series) -> np.ndarray:
        if self.categories is not None:
            return values.isin(self.categories).to_numpy() & values.notna().to_numpy()
        x = pd.to_numeric(values, errors="coerce").to_numpy(dtype=np.float64)
        ok = ~np.isnan(x)
        if self.low is not None:
            ok &= x >= self.low
        if self.high is not None:
            ok &= x <= self.high
        return ok

    def to_dict(self) -> dict:
        if self.categories is not None:
            return {"feature": self.feature, "categories": sorted(self.categories)}
        return {"feature": self.feature, "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, d: dict) -> "Condition":
        if "categories" in d:
            return cls(d["feature"], frozenset(d["categories"]))
        return cls(d["feature"], low=d.get("low"), high=d.get("high"))


@dataclass(frozen=True)
class Rule:
    name: str
    conditions: tuple[Condition, ...]

    def __post_init__(self):
        if not self.conditions:
            raise ConfigError(f"rule {self.name!r} has no conditions")

    def to_dict(self) -> dict:
        return {"name": self.name, "conditions": [c.to_dict() for c in self.conditions]}

    @classmethod
    def from_dict(cls, d: dict) -> "Rule":
        return cls(d["name"], tuple(Condition.from_dict(c) for c in d["conditions"]))


def _cats(*values):
    return frozenset(values)


HIV = Condition("HIVStatus", _cats("positive"))
DIABETES = Condition("DiabetesStatus", _cats("positive"))
ALCOHOL = Condition("AlcoholIntake", _cats("present"))
CASE = Condition("TypeOfCase", _cats("DRTB", "retreatment"))
NO_CONTACTS = Condition("HouseholdContacts", _cats("absent"))

BUILTIN_RULES = {
    "rule1": Rule("rule1", (ALCOHOL, HIV, DIABETES)),
    "rule2": Rule("rule2", (CASE, HIV, DIABETES, Condition("Age", low=60.0), NO_CONTACTS)),
    "rule3": Rule("rule3", (
        Condition("Age", low=18.0, high=45.0), CASE, HIV, DIABETES,
        Condition("Gender", _cats("M", "T")), Condition("Migrant", _cats("yes")), ALCOHOL, NO_CONTACTS,
        Condition("MicrobiologicallyConfirmed", _cats("yes")), Condition("DiseaseSite", _cats("pulmonary")),
        Condition("UDSTDone", _cats("yes")), Condition("BankDetailsAdded", _cats("no")),
    )),
}


def rule_scores(rule: Rule, frame) -> np.ndarray:
    data = frame.data if hasattr(frame, "schema") else frame
    absent = [c.feature for c in rule.conditions if c.feature not in data.columns]
    if absent:
        raise DataError(f"rule {rule.name!r} needs columns {absent}")
    hits = np.zeros(len(data))
    for cond in rule.conditions:
        hits += cond.qualifies(data[cond.feature])
    return hits / len(rule.conditions)


def rule_score(rule: Rule, record: dict) -> float:
    """Score of a single record given as a column -> value mapping."""
    row = pd.DataFrame({k: [v] for k, v in record.items()})
    for cond in rule.conditions:
        if cond.feature not in row:
            row[cond.feature] = [None]
    return float(rule_scores(rule, row)[0])


class RuleModel(Model):
    variant = "rule"
    uses_frame = True

    def __init__(self, rule: Rule):
        self.rule = rule

    def predict(self, frame) -> np.ndarray:
        return rule_scores(self.rule, frame)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "rule": self.rule.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Rule.from_dict(d["rule"]))
