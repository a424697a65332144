"""Forward (temporal) splitting.

The trailing months form the passive-evaluation split; everything earlier is
the modeling split, which is cut chronologically into train/val/test.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .frame import Frame


@dataclass(frozen=True)
class SplitPlan:
    pes_months: int = 6
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.pes_months < 1:
            raise ConfigError("pes_months must be >= 1")
        _check_fractions(self.fractions)


def _check_fractions(fractions):
    if len(fractions) != 3:
        raise ConfigError("need three fractions (train, val, test)")
    if any(f <= 0 for f in fractions):
        raise ConfigError(f"every fraction must be positive, got {tuple(fractions)}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)}")


def chronological_order(frame: Frame) -> np.ndarray:
    """Row indices sorted by month, ties kept in original row order."""
    return np.argsort(frame.months, kind="stable")


def forward_split_indices(frame: Frame, plan: SplitPlan) -> tuple[np.ndarray, np.ndarray]:
    months = frame.months
    distinct = np.unique(months)
    if len(distinct) <= plan.pes_months:
        raise DataError(
            f"frame spans {len(distinct)} distinct months; need more than pes_months={plan.pes_months}")
    cutoff = distinct[-plan.pes_months]
    order = chronological_order(frame)
    modeling = order[months[order] < cutoff]
    pes = order[months[order] >= cutoff]
    return modeling, pes


def forward_split(frame: Frame, plan: SplitPlan) -> tuple[Frame, Frame]:
    modeling, pes = forward_split_indices(frame, plan)
    return frame.take(modeling, role="modeling"), frame.take(pes, role="pes")


def partition_sizes(n: int, fractions) -> tuple[int, int, int]:
    """Ceiling for train and val, remainder for test."""
    _check_fractions(fractions)
    n_train = min(n, math.ceil(round(fractions[0] * n, 9)))
    n_val = min(n - n_train, math.ceil(round(fractions[1] * n, 9)))
    return n_train, n_val, n - n_train - n_val


def chronological_partition_indices(frame: Frame, fractions=(0.6, 0.2, 0.2)):
    order = chronological_order(frame)
    n_train, n_val, _ = partition_sizes(frame.n, fractions)
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]


def chronological_partition(frame: Frame, fractions=(0.6, 0.2, 0.2)) -> tuple[Frame, Frame, Frame]:
    train, val, test = chronological_partition_indices(frame, fractions)
    for name, rows in (("train", train), ("val", val), ("test", test)):
        if len(rows) == 0:
            raise DataError(f"{name} partition is empty for n={frame.n}")
    return (frame.take(train, role="train"), frame.take(val, role="val"), frame.take(test, role="test"))


@dataclass
class SplitManifest:
    """Row indices (into the full frame) of every split."""

    train: list[int]
    val: list[int]
    test: list[int]
    pes: list[int]
    plan: SplitPlan

    @property
    def modeling(self) -> list[int]:
        return self.train + self.val + self.test

    @classmethod
    def build(cls, frame: Frame, plan: SplitPlan) -> "SplitManifest":
        modeling_rows, pes_rows = forward_split_indices(frame, plan)
        modeling = frame.take(modeling_rows)
        tr, va, te = chronological_partition_indices(modeling, plan.fractions)
        for name, rows in (("train", tr), ("val", va), ("test", te)):
            if len(rows) == 0:
                raise DataError(f"{name} partition is empty")
        return cls(modeling_rows[tr].tolist(), modeling_rows[va].tolist(),
                   modeling_rows[te].tolist(), pes_rows.tolist(), plan)

    def frames(self, frame: Frame) -> dict[str, Frame]:
        return {name: frame.take(getattr(self, name), role=name)
                for name in ("train", "val", "test", "pes")}

    def to_dict(self) -> dict:
        return {"plan": {"pes_months": self.plan.pes_months, "fractions": list(self.plan.fractions)},
                "train": self.train, "val": self.val, "test": self.test, "pes": self.pes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SplitManifest":
        plan = SplitPlan(d["plan"]["pes_months"], tuple(d["plan"]["fractions"]))
        return cls(list(d["train"]), list(d["val"]), list(d["test"]), list(d["pes"]), plan)
