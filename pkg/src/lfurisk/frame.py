"""Patient-record tables: schema, CSV ingestion, register merging, imputation.

A :class:`Frame` wraps a :class:`pandas.DataFrame` together with the
:class:`Schema` describing it. Missing cells are stored as pandas missing
values (``None`` for categoricals, ``NaN`` for numerics), which can never
collide with a real category token. After :func:`impute` categorical gaps
carry :data:`MISSING_TOKEN` instead.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, SchemaError

MISSING_TOKEN = "__missing__"
KINDS = ("categorical", "numeric", "label", "timestamp", "id")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    allow_missing: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Schema:
    """Ordered column declarations.

    ``strict`` schemas (the default) must declare exactly one label and one
    timestamp column. Secondary registers that only contribute features are
    declared with ``strict=False``.
    """

    columns: tuple[Column, ...]
    label_positive: str = "1"
    label_negative: str = "0"
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if self.strict:
            for kind in ("label", "timestamp"):
                count = sum(c.kind == kind for c in self.columns)
                if count != 1:
                    raise SchemaError(f"schema needs exactly one {kind} column, found {count}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def _of_kind(self, kind):
        return [c.name for c in self.columns if c.kind == kind]

    @property
    def categorical(self) -> list[str]:
        return self._of_kind("categorical")

    @property
    def numeric(self) -> list[str]:
        return self._of_kind("numeric")

    @property
    def features(self) -> list[str]:
        return [c.name for c in self.columns if c.kind in ("categorical", "numeric")]

    @property
    def label(self) -> str | None:
        found = self._of_kind("label")
        return found[0] if found else None

    @property
    def timestamp(self) -> str | None:
        found = self._of_kind("timestamp")
        return found[0] if found else None

    @property
    def id(self) -> str | None:
        found = self._of_kind("id")
        return found[0] if found else None

    def kind_of(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise SchemaError(f"no column {name!r} in schema")

    def to_text(self) -> str:
        lines = [f"@label_positive = {self.label_positive}",
                 f"@label_negative = {self.label_negative}"]
        if not self.strict:
            lines.append("@strict = false")
        for c in self.columns:
            suffix = "" if c.allow_missing else ", required"
            lines.append(f"{c.name} = {c.kind}{suffix}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Schema":
        columns, opts = [], {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SchemaError(f"schema line {lineno}: expected 'name = kind'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("@"):
                opts[key[1:]] = value
                continue
            parts = [p.strip() for p in value.split(",")]
            columns.append(Column(key, parts[0], allow_missing="required" not in parts[1:]))
        return cls(
            tuple(columns),
            label_positive=opts.get("label_positive", "1"),
            label_negative=opts.get("label_negative", "0"),
            strict=opts.get("strict", "true").lower() != "false",
        )


def read_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return Schema.from_text(fh.read())


def write_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(schema.to_text())


class Frame:
    """Schema-checked table of patient records.

    Treat as immutable: every operation in this package returns a new frame.
    ``role`` tags where the rows came from (``"pes"`` marks passive-evaluation
    rows, which selection code refuses to read).
    """

    def __init__(self, schema: Schema, data: pd.DataFrame, role: str | None = None):
        missing = [n for n in schema.names if n not in data.columns]
        if missing:
            raise SchemaError(f"data lacks schema columns {missing}")
        data = data.loc[:, schema.names].reset_index(drop=True)
        if len(data) < 1:
            raise DataError("frame needs at least one row")
        self.schema = schema
        self._data = _coerce(schema, data)
        self.role = role

    @property
    def data(self) -> pd.DataFrame:
        return self._data

    @property
    def n(self) -> int:
        return len(self._data)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Frame(n={self.n}, columns={len(self.schema.columns)}, role={self.role!r})"

    @property
    def labels(self) -> np.ndarray:
        if self.schema.label is None:
            raise DataError("frame has no label column")
        return self._data[self.schema.label].to_numpy(dtype=np.int64)

    @property
    def months(self) -> np.ndarray:
        if self.schema.timestamp is None:
            raise DataError("frame has no timestamp column")
        return self._data[self.schema.timestamp].to_numpy(dtype=np.int64)

    def column(self, name: str) -> pd.Series:
        return self._data[name]

    @classmethod
    def _trusted(cls, schema: Schema, data: pd.DataFrame, role: str | None) -> "Frame":
        # data already coerced by a previous Frame; skip re-validation
        obj = cls.__new__(cls)
        obj.schema, obj._data, obj.role = schema, data.reset_index(drop=True), role
        return obj

    def take(self, rows, role: str | None = None) -> "Frame":
        rows = np.asarray(rows, dtype=np.int64)
        if len(rows) == 0:
            raise DataError("frame needs at least one row")
        return Frame._trusted(self.schema, self._data.iloc[rows], role if role is not None else self.role)

    def with_column(self, name: str, values) -> "Frame":
        """Copy with one column's values replaced (same kind, already clean)."""
        data = self._data.copy()
        data[name] = values
        return Frame._trusted(self.schema, data, self.role)

    def replace(self, data: pd.DataFrame, role: str | None = None) -> "Frame":
        return Frame(self.schema, data, role=self.role if role is None else role)

    def equals(self, other: "Frame") -> bool:
        return self.schema == other.schema and self._data.equals(other._data)


def _coerce(schema: Schema, data: pd.DataFrame) -> pd.DataFrame:
    out = {}
    for col in schema.columns:
        s = data[col.name]
        if col.kind == "numeric":
            out[col.name] = pd.to_numeric(s, errors="raise").astype(np.float64)
        elif col.kind in ("label", "timestamp"):
            if s.isna().any():
                raise DataError(f"column {col.name!r} ({col.kind}) cannot be missing")
            values = s.astype(np.int64)
            if col.kind == "label" and not values.isin([0, 1]).all():
                raise DataError(f"label column {col.name!r} must be 0/1")
            out[col.name] = values
        else:
            out[col.name] = s.astype(str).astype(object).where(s.notna(), None)
        if not col.allow_missing and pd.isna(out[col.name]).any():
            raise DataError(f"column {col.name!r} is declared required but has missing cells")
    return pd.DataFrame(out)


def load_csv(path, schema: Schema, role: str | None = None) -> Frame:
    """Read a comma-separated file; blank or unparseable cells become missing.

    Only columns named in ``schema`` are ingested, so extra columns in the
    file are ignored. Every schema column must be present in the header.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    absent = [n for n in schema.names if n not in raw.columns]
    if absent:
        raise SchemaError(f"{path}: header lacks columns {absent}")
    if raw.empty:
        raise DataError(f"{path}: no data rows")
    parsed = {}
    for col in schema.columns:
        s = raw[col.name].str.strip()
        blank = s == ""
        if col.kind == "numeric":
            parsed[col.name] = pd.to_numeric(s.where(~blank), errors="coerce")
        elif col.kind == "label":
            mapping = {schema.label_positive: 1, schema.label_negative: 0}
            bad = ~s.isin(list(mapping))
            if bad.any():
                raise DataError(f"{path}: label token {s[bad].iloc[0]!r} not in {sorted(mapping)}")
            parsed[col.name] = s.map(mapping)
        elif col.kind == "timestamp":
            months = pd.to_numeric(s, errors="coerce")
            if months.isna().any() or (months % 1 != 0).any():
                raise DataError(f"{path}: timestamp column {col.name!r} must hold integer month indices")
            parsed[col.name] = months.astype(np.int64)
        else:
            parsed[col.name] = s.where(~blank, None)
    return Frame(schema, pd.DataFrame(parsed), role=role)


def write_csv(frame: Frame, path) -> None:
    schema = frame.schema
    out = frame.data.copy()
    if schema.label is not None:
        out[schema.label] = out[schema.label].map({1: schema.label_positive, 0: schema.label_negative})
    out.to_csv(path, index=False, na_rep="", lineterminator="\n")


def merge_registers(frames: Sequence[Frame], key: str) -> Frame:
    """Left-join every register onto the first (notification) frame by ``key``.

    Row order and count of the first frame are preserved; rows without a
    match in a later register get missing cells for that register's columns.
    """
    if not frames:
        raise DataError("no registers to merge")
    spine = frames[0]
    for i, f in enumerate(frames):
        if key not in f.schema.names:
            raise DataError(f"register {i} lacks key column {key!r}")
        if f.data[key].isna().any():
            raise DataError(f"register {i} has missing keys")
        if f.data[key].duplicated().any():
            dup = f.data[key][f.data[key].duplicated()].iloc[0]
            raise DataError(f"register {i} has duplicate key {dup!r}")
    merged = spine.data.copy()
    columns = list(spine.schema.columns)
    for i, f in enumerate(frames[1:], 1):
        extra = [c for c in f.schema.columns if c.name != key]
        clash = [c.name for c in extra if c.name in merged.columns]
        if clash:
            raise SchemaError(f"register {i} repeats columns {clash}")
        for c in extra:
            if c.kind in ("label", "timestamp"):
                raise SchemaError(f"register {i} may only contribute feature columns")
        right = f.data.loc[:, [key] + [c.name for c in extra]]
        merged = merged.merge(right, on=key, how="left", sort=False, validate="one_to_one")
        columns += [Column(c.name, c.kind, True) for c in extra]
    schema = Schema(tuple(columns), spine.schema.label_positive, spine.schema.label_negative,
                    strict=spine.schema.strict)
    return Frame(schema, merged, role=spine.role)


def column_means(frame: Frame) -> dict[str, float]:
    means = {}
    for name in frame.schema.numeric:
        values = frame.data[name]
        if values.notna().sum() == 0:
            raise DataError(f"numeric column {name!r} is entirely missing; mean undefined")
        means[name] = float(values.mean())
    return means


def impute(frame: Frame, means: Mapping[str, float] | None = None) -> Frame:
    """Fill numeric gaps with column means and categorical gaps with
    :data:`MISSING_TOKEN`.

    ``means`` should come from :func:`column_means` on the training rows; when
    omitted the frame's own means are used.
    """
    if means is None:
        means = column_means(frame)
    data = frame.data.copy()
    for name in frame.schema.numeric:
        if data[name].isna().any():
            if name not in means:
                raise DataError(f"no imputation mean for {name!r}")
            data[name] = data[name].fillna(means[name])
    for name in frame.schema.categorical:
        col = data[name]
        if col.isna().any():
            data[name] = col.where(col.notna(), MISSING_TOKEN)
    return frame.replace(data)


@dataclass
class SummaryStats:
    n: int
    positives: int
    prevalence: float
    missingness: dict[str, float]
    overall_missingness: float
    cohorts: dict[str, dict[str, dict]] = field(default_factory=dict)
    splits: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "positives": self.positives,
            "prevalence": self.prevalence,
            "missingness": self.missingness,
            "overall_missingness": self.overall_missingness,
            "cohorts": self.cohorts,
            "splits": self.splits,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _prevalence_table(labels: np.ndarray, groups: pd.Series) -> dict[str, dict]:
    keys = groups.astype(object).where(groups.notna(), MISSING_TOKEN).astype(str).to_numpy()
    table = {}
    for value in sorted(set(keys)):
        mask = keys == value
        n = int(mask.sum())
        pos = int(labels[mask].sum())
        table[value] = {"n": n, "positives": pos, "prevalence": pos / n}
    return table


def summarize(frame: Frame, cohort_columns: Iterable[str] = (),
              splits: Mapping[str, Sequence[int]] | None = None) -> SummaryStats:
    """Exact counts, prevalences and missingness fractions."""
    labels = frame.labels
    features = frame.schema.features
    miss = {name: float(frame.data[name].isna().mean()) for name in features}
    total_cells = len(features) * frame.n
    overall = float(sum(frame.data[name].isna().sum() for name in features) / total_cells) if total_cells else 0.0
    cohorts = {}
    for name in cohort_columns:
        if name not in frame.schema.names:
            raise DataError(f"cohort column {name!r} not in frame")
        cohorts[name] = _prevalence_table(labels, frame.data[name])
    split_stats = {}
    for name, rows in (splits or {}).items():
        rows = np.asarray(rows, dtype=np.int64)
        pos = int(labels[rows].sum())
        split_stats[name] = {"n": int(len(rows)), "positives": pos,
                             "prevalence": pos / len(rows) if len(rows) else 0.0}
    pos = int(labels.sum())
    return SummaryStats(frame.n, pos, pos / frame.n, miss, overall, cohorts, split_stats)
