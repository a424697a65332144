"""Categorical-to-numeric encoders.

Every encoder is fitted on training rows only and stores plain per-category
statistics, so a fitted encoder can be written to JSON and re-applied
exactly. Numeric columns (age) pass through unchanged; any numeric gap left
at transform time is filled with the training mean.

Label-using kinds (``target``, ``loo``, ``ordered-target`` and the three
ratio kinds) fall back to the training prior, or the neutral ratio, for
categories unseen during fitting. ``loo`` and ``ordered-target`` use
different values on the training rows themselves; call :func:`fit_transform`
to get those.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, SchemaError
from .frame import MISSING_TOKEN, Frame

KINDS = ("count", "target", "loo", "ordered-target", "prob-ratio", "odds-ratio",
         "log-odds", "similarity", "minhash")
# label-free control used to check that encoders carry signal
CONTROL_KINDS = ("random-code",)
RESERVED_KINDS = ("entity-embedding", "gap")
LABEL_KINDS = ("target", "loo", "ordered-target", "prob-ratio", "odds-ratio", "log-odds")

DEFAULT_PARAMS = {
    "smoothing": 20.0,       # m for target / loo
    "prior_weight": 1.0,     # a for ordered-target
    "n_prototypes": 30,
    "n_components": 30,
    "ngram": 3,
    "seed": 0,
}


@dataclass
class Matrix:
    values: np.ndarray
    columns: list[str]

    @property
    def shape(self):
        return self.values.shape


@dataclass
class Encoder:
    kind: str
    columns: list[str]
    numeric: list[str]
    params: dict
    prior: float
    stats: dict[str, dict]
    numeric_means: dict[str, float] = field(default_factory=dict)

    @property
    def output_columns(self) -> list[str]:
        out = []
        for col in self.columns:
            width = _width(self, col)
            if width == 1:
                out.append(col)
            else:
                out += [f"{col}__{j}" for j in range(width)]
        return out + list(self.numeric)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "columns": self.columns, "numeric": self.numeric,
                "params": self.params, "prior": self.prior, "stats": self.stats,
                "numeric_means": self.numeric_means}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Encoder":
        return cls(d["kind"], list(d["columns"]), list(d["numeric"]), dict(d["params"]),
                   float(d["prior"]), d["stats"], dict(d.get("numeric_means", {})))


def _width(enc: Encoder, col: str) -> int:
    if enc.kind == "similarity":
        return len(enc.stats[col]["prototypes"])
    if enc.kind == "minhash":
        return int(enc.params["n_components"])
    return 1


def _tokens(series: pd.Series) -> np.ndarray:
    return series.astype(object).where(series.notna(), MISSING_TOKEN).to_numpy()


# ---------------------------------------------------------------- string kernels

def ngrams(value: str, n: int = 3) -> frozenset[str]:
    """Character n-grams of ``value`` padded with boundary markers.

    The text gets ``n-1`` leading and one trailing ``#``, so even an empty
    string yields one gram.
    """
    padded = "#" * (n - 1) + value + "#"
    return frozenset(padded[i:i + n] for i in range(len(padded) - n + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 1.0


def similarity_profile(value: str, prototypes, n: int = 3) -> np.ndarray:
    if len(prototypes) == 0:
        raise DataError("similarity needs at least one prototype")
    grams = ngrams(value, n)
    return np.array([jaccard(grams, ngrams(p, n)) for p in prototypes], dtype=np.float64)


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def gram_key(gram: str) -> int:
    return int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little")


def hasher_seeds(seed: int, count: int) -> np.ndarray:
    return _splitmix64(np.arange(count, dtype=np.uint64) + np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def hash_grams(grams, seeds: np.ndarray) -> np.ndarray:
    """64-bit hashes, one row per gram and one column per hasher seed."""
    keys = np.array([gram_key(g) for g in sorted(grams)], dtype=np.uint64)
    return _splitmix64(keys[:, None] ^ seeds[None, :])


def minhash_signature(value: str, seeds, n: int = 3) -> np.ndarray:
    """Per-hasher minimum of the n-gram hashes, scaled into [0, 1)."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if seeds.size == 0:
        raise DataError("minhash needs at least one hasher")
    mins = hash_grams(ngrams(value, n), seeds).min(axis=0)
    return mins.astype(np.float64) * 2.0 ** -64


# ---------------------------------------------------------------- fitting

def _check_kind(kind: str):
    if kind in RESERVED_KINDS:
        raise ConfigError(f"encoder kind {kind!r} is unsupported")
    if kind not in KINDS and kind not in CONTROL_KINDS:
        raise ConfigError(f"unknown encoder kind {kind!r}")


def _smoothed(pos, n, total_pos, total_n):
    pc = (pos + 1.0) / (n + 2.0)
    p = (total_pos + 1.0) / (total_n + 2.0)
    return pc, p


def ratio_encode(kind: str, pos: float, n: float, total_pos: float, total_n: float) -> float:
    """Probability ratio, odds ratio or log-odds ratio with Laplace smoothing.

    One positive and one negative pseudo-count are added per category and
    globally, so every value is finite.
    """
    pc, p = _smoothed(pos, n, total_pos, total_n)
    if kind == "prob-ratio":
        return float(pc / p)
    odds = (pc / (1.0 - pc)) / (p / (1.0 - p))
    if kind == "odds-ratio":
        return float(odds)
    if kind == "log-odds":
        return float(np.log(odds))
    raise ConfigError(f"not a ratio kind: {kind!r}")


def fit_encoder(kind: str, frame: Frame, params: dict | None = None, columns=None) -> Encoder:
    _check_kind(kind)
    params = {**DEFAULT_PARAMS, **(params or {})}
    cat_cols = list(columns) if columns is not None else frame.schema.categorical
    if not cat_cols:
        raise DataError("encoder needs at least one categorical column")
    numeric = frame.schema.numeric
    labels = None
    prior = 0.0
    if kind in LABEL_KINDS:
        if frame.schema.label is None:
            raise DataError(f"encoder kind {kind!r} needs labels")
        labels = frame.labels
        prior = float(labels.sum()) / len(labels)
    rng = np.random.default_rng(int(params["seed"]))
    stats = {}
    for col in cat_cols:
        tokens = _tokens(frame.column(col))
        codes, uniques = pd.factorize(tokens, sort=True)
        counts = np.bincount(codes, minlength=len(uniques)).astype(np.float64)
        keys = [str(u) for u in uniques]
        if kind == "count":
            stats[col] = {"value": dict(zip(keys, (counts / len(tokens)).tolist()))}
        elif kind in LABEL_KINDS:
            sums = np.bincount(codes, weights=labels, minlength=len(uniques))
            stats[col] = {"sum": dict(zip(keys, sums.tolist())), "count": dict(zip(keys, counts.tolist()))}
        elif kind == "similarity":
            order = sorted(range(len(keys)), key=lambda i: (-counts[i], keys[i]))
            stats[col] = {"prototypes": [keys[i] for i in order[: int(params["n_prototypes"])]]}
        elif kind == "minhash":
            stats[col] = {}
        elif kind == "random-code":
            stats[col] = {"value": dict(zip(keys, rng.random(len(keys)).tolist()))}
    if kind in LABEL_KINDS:
        stats["__totals__"] = {"pos": float(labels.sum()), "n": float(len(labels))}
    means = {}
    for name in numeric:
        values = frame.column(name)
        means[name] = float(values.mean()) if values.notna().any() else 0.0
    return Encoder(kind, cat_cols, numeric, params, prior, stats, means)


def _category_values(enc: Encoder, col: str, uniques: list[str]) -> np.ndarray:
    """Encoded vector for each distinct token, shape (len(uniques), width)."""
    kind, st = enc.kind, enc.stats[col]
    if kind in ("count", "random-code"):
        fallback = 0.0 if kind == "count" else 0.5
        return np.array([[st["value"].get(u, fallback)] for u in uniques], dtype=np.float64)
    if kind in ("target", "loo", "ordered-target"):
        weight = float(enc.params["smoothing"] if kind != "ordered-target" else enc.params["prior_weight"])
        out = np.empty((len(uniques), 1))
        for i, u in enumerate(uniques):
            if u in st["count"]:
                out[i, 0] = (st["sum"][u] + weight * enc.prior) / (st["count"][u] + weight)
            else:
                out[i, 0] = enc.prior
        return out
    if kind in ("prob-ratio", "odds-ratio", "log-odds"):
        tot = enc.stats["__totals__"]
        neutral = 0.0 if kind == "log-odds" else 1.0
        return np.array([[ratio_encode(kind, st["sum"][u], st["count"][u], tot["pos"], tot["n"])
                          if u in st["count"] else neutral] for u in uniques], dtype=np.float64)
    n = int(enc.params["ngram"])
    if kind == "similarity":
        protos = [ngrams(p, n) for p in st["prototypes"]]
        return np.array([[jaccard(ngrams(u, n), p) for p in protos] for u in uniques], dtype=np.float64)
    if kind == "minhash":
        seeds = hasher_seeds(int(enc.params["seed"]), int(enc.params["n_components"]))
        return np.vstack([minhash_signature(u, seeds, n) for u in uniques])
    raise ConfigError(f"unknown encoder kind {kind!r}")


def _check_schema(enc: Encoder, frame: Frame):
    absent = [c for c in enc.columns + enc.numeric if c not in frame.schema.names]
    if absent:
        raise SchemaError(f"frame lacks encoder columns {absent}")


def _numeric_block(enc: Encoder, frame: Frame) -> list[np.ndarray]:
    return [frame.column(name).fillna(enc.numeric_means.get(name, 0.0)).to_numpy(dtype=np.float64)[:, None]
            for name in enc.numeric]


def transform(enc: Encoder, frame: Frame) -> Matrix:
    """Inference-time encoding using the fitted statistics only."""
    _check_schema(enc, frame)
    blocks = []
    for col in enc.columns:
        codes, uniques = pd.factorize(_tokens(frame.column(col)))
        table = _category_values(enc, col, [str(u) for u in uniques])
        blocks.append(table[codes])
    blocks += _numeric_block(enc, frame)
    values = np.hstack(blocks) if blocks else np.empty((frame.n, 0))
    if not np.all(np.isfinite(values)):
        raise DataError("encoding produced non-finite values")
    return Matrix(values, enc.output_columns)


def _training_column(enc: Encoder, col: str, frame: Frame) -> np.ndarray:
    tokens = _tokens(frame.column(col))
    labels = frame.labels.astype(np.float64)
    st = enc.stats[col]
    codes, uniques = pd.factorize(tokens)
    keys = [str(u) for u in uniques]
    sums = np.array([st["sum"][u] for u in keys])[codes]
    counts = np.array([st["count"][u] for u in keys])[codes]
    if enc.kind == "loo":
        m = float(enc.params["smoothing"])
        total_pos, total_n = enc.stats["__totals__"]["pos"], enc.stats["__totals__"]["n"]
        # statistics recomputed as if row i were absent from the training set
        prior_wo = (total_pos - labels) / (total_n - 1.0)
        rest_n = counts - 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (sums - labels + m * prior_wo) / (rest_n + m)
        return np.where(rest_n == 0, prior_wo, out)
    # ordered-target: only rows earlier in a seeded permutation contribute
    a = float(enc.params["prior_weight"])
    perm = np.random.default_rng(int(enc.params["seed"])).permutation(frame.n)
    permuted_codes = codes[perm]
    permuted_labels = labels[perm]
    grouped = pd.Series(permuted_labels).groupby(permuted_codes)
    prev_sum = (grouped.cumsum() - permuted_labels).to_numpy()
    prev_count = grouped.cumcount().to_numpy().astype(np.float64)
    values = (prev_sum + a * enc.prior) / (prev_count + a) if a > 0 else np.where(
        prev_count > 0, prev_sum / np.maximum(prev_count, 1), enc.prior)
    out = np.empty(frame.n)
    out[perm] = values
    return out


def fit_transform(kind: str, frame: Frame, params: dict | None = None, columns=None) -> tuple[Encoder, Matrix]:
    """Fit on ``frame`` and encode the same rows with training-time semantics."""
    enc = fit_encoder(kind, frame, params, columns)
    if kind not in ("loo", "ordered-target"):
        return enc, transform(enc, frame)
    blocks = [_training_column(enc, col, frame)[:, None] for col in enc.columns]
    blocks += _numeric_block(enc, frame)
    return enc, Matrix(np.hstack(blocks), enc.output_columns)


def ordered_target_encode(frame: Frame, seed: int = 0, prior_weight: float = 1.0, columns=None) -> tuple[Encoder, Matrix]:
    return fit_transform("ordered-target", frame, {"seed": seed, "prior_weight": prior_weight}, columns)
