"""Synthetic patient register with a known risk model.

The generator plants a logistic ground truth over a Nikshay-like feature set:
a location hierarchy (state > district > TB unit > health institution),
patient and clinical categoricals, integer age, and pure-noise columns.
Labels are Bernoulli draws from the true probability; missing cells are
injected afterwards so the truth is always defined on the clean values.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import expit

from .errors import ConfigError
from .frame import Column, Frame, Schema

STATES = ("Karnataka", "Uttar Pradesh", "West Bengal", "Maharashtra")
# relative state sizes and per-state logit offsets
STATE_WEIGHTS = (65120, 376028, 79807, 157997)
STATE_EFFECTS = (-0.10, 0.20, -0.35, -0.10)

# (column, categories, probabilities, logit effect per category)
CLINICAL = [
    ("PHIType", ("public", "private"), None, (0.0, 0.30)),
    ("Gender", ("F", "M", "T"), (0.415, 0.58, 0.005), (-0.15, 0.0, 0.30)),
    ("TypeOfCase", ("DSTB", "DRTB"), (0.967, 0.033), (0.0, 1.20)),
    ("BankDetailsAdded", ("yes", "no"), (0.65, 0.35), (-1.60, 0.0)),
    ("ReasonForTesting", ("diagnosis", "follow-up"), (0.80, 0.20), (0.0, 0.90)),
    ("HIVStatus", ("negative", "positive", "unknown"), (0.90, 0.03, 0.07), (0.0, 0.40, 0.10)),
    ("DiabetesStatus", ("negative", "positive", "unknown"), (0.85, 0.08, 0.07), (0.0, 0.20, 0.05)),
    ("AlcoholIntake", ("absent", "present"), (0.90, 0.10), (0.0, 0.50)),
    ("HouseholdContacts", ("present", "absent"), (0.70, 0.30), (0.0, 0.30)),
    ("Migrant", ("no", "yes"), (0.95, 0.05), (0.0, 0.60)),
    ("MicrobiologicallyConfirmed", ("no", "yes"), (0.45, 0.55), (0.0, -0.10)),
    ("DiseaseSite", ("extrapulmonary", "pulmonary"), (0.15, 0.85), (0.0, 0.10)),
    ("UDSTDone", ("no", "yes"), (0.60, 0.40), (0.0, -0.10)),
]

# spoken-name prefixes of the optional risk-named referral column
REFERRAL_KINDS = (
    ("chemist shop", 1.4), ("private clinic", 0.9), ("traditional healer", 1.8),
    ("ngo camp", 0.4), ("district hospital", -0.6), ("medical college", -1.0),
    ("primary health centre", -0.2), ("community volunteer", 0.1),
)
PLACES = ("rampur", "sitapur", "nagpur", "howrah", "mysuru", "kanpur", "pune",
          "bareilly", "hubli", "asansol", "nashik", "agra", "siliguri", "latur")


def age_effect(age):
    """Planted age logit: steep rise 18->30, plateau to 60, slow rise after."""
    age = np.asarray(age, dtype=np.float64)
    out = np.where(age < 18, -0.6, 0.0)
    rising = (age >= 18) & (age < 30)
    out = np.where(rising, -0.6 + 0.9 * (age - 18) / 12, out)
    out = np.where((age >= 30) & (age <= 60), 0.3, out)
    out = np.where(age > 60, 0.3 + 0.015 * (age - 60), out)
    return out


@dataclass
class GeneratorConfig:
    n: int = 100_000
    months: int = 12
    n_districts: int = 40
    n_tbu: int = 150
    n_phi: int = 500
    prevalence_first_half: float = 0.0342
    prevalence_second_half: float = 0.0278
    missing_rate: float = 0.0917
    n_noise: int = 3
    noise_cardinality: int = 12
    district_sd: float = 0.45
    tbu_sd: float = 0.30
    phi_sd: float = 0.50
    # districts carrying a local interaction the global model tends to miss
    n_interaction_districts: int = 0
    interaction_strength: float = 2.5
    interaction_position: float = 0.25  # quantile of the district size order
    # optional high-cardinality free-text column whose names carry risk
    referral_cardinality: int = 0

    def validate(self):
        for name in ("prevalence_first_half", "prevalence_second_half"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0,1), got {v}")
        if self.n < 100:
            raise ConfigError(f"n must be at least 100, got {self.n}")
        if self.months < 2:
            raise ConfigError("months must be at least 2")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError("missing_rate must lie in [0,1)")
        if not len(STATES) <= self.n_districts <= self.n_tbu <= self.n_phi:
            raise ConfigError("need 4 <= n_districts <= n_tbu <= n_phi")
        if not 0 <= self.interaction_position < 1:
            raise ConfigError("interaction_position must lie in [0, 1)")
        if self.n_interaction_districts > self.n_districts - int(self.interaction_position * self.n_districts):
            raise ConfigError("n_interaction_districts exceeds the districts available for interactions")


@dataclass
class GroundTruth:
    """Planted risk model. ``row_logits`` is aligned with the frame rows."""

    coefficients: dict[str, dict[str, float]]
    base_logit: list[float]
    seed: int
    interaction_districts: list[str] = field(default_factory=list)
    interaction_strength: float = 0.0
    row_logits: np.ndarray | None = None

    @property
    def probabilities(self) -> np.ndarray:
        return expit(self.row_logits)

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients,
            "base_logit": self.base_logit,
            "seed": self.seed,
            "interaction_districts": self.interaction_districts,
            "interaction_strength": self.interaction_strength,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def lfu_schema(config: GeneratorConfig) -> Schema:
    cols = [Column("EpisodeID", "id", False), Column("Month", "timestamp", False),
            Column("LFU", "label", False),
            Column("State", "categorical"), Column("District", "categorical"),
            Column("TBU", "categorical"), Column("PHI", "categorical")]
    cols += [Column(name, "categorical") for name, *_ in CLINICAL]
    cols.append(Column("Age", "numeric"))
    if config.referral_cardinality:
        cols.append(Column("ReferredFrom", "categorical"))
    cols += [Column(f"Noise{i + 1}", "categorical") for i in range(config.n_noise)]
    return Schema(tuple(cols))


def _split_counts(total, weights):
    weights = np.asarray(weights, dtype=np.float64)
    raw = weights / weights.sum() * (total - len(weights))
    counts = np.floor(raw).astype(int) + 1
    for i in np.argsort(-(raw - np.floor(raw)), kind="stable")[: total - counts.sum()]:
        counts[i] += 1
    return counts


def synthesize(config: GeneratorConfig | None = None, seed: int = 0) -> tuple[Frame, GroundTruth]:
    """Generate a register and its ground truth; deterministic in ``seed``."""
    config = config or GeneratorConfig()
    config.validate()
    rng = np.random.default_rng(seed)
    n = config.n
    coef: dict[str, dict[str, float]] = {}

    # location hierarchy: every district in one state, TBU in one district, PHI in one TBU
    district_state = np.repeat(np.arange(len(STATES)), _split_counts(config.n_districts, STATE_WEIGHTS))
    tbu_district = np.concatenate([np.arange(config.n_districts),
                                   rng.integers(0, config.n_districts, config.n_tbu - config.n_districts)])
    phi_tbu = np.concatenate([np.arange(config.n_tbu), rng.integers(0, config.n_tbu, config.n_phi - config.n_tbu)])
    phi_district = tbu_district[phi_tbu]
    district_names = [f"D{i:03d}" for i in range(config.n_districts)]
    tbu_names = [f"TBU-{i:04d}" for i in range(config.n_tbu)]
    phi_names = [f"PHI-{i:04d}" for i in range(config.n_phi)]
    district_w = rng.gamma(2.0, 1.0, config.n_districts)
    phi_w = rng.gamma(1.5, 1.0, config.n_phi)
    phi_private = rng.random(config.n_phi) < 0.3

    state_p = np.asarray(STATE_WEIGHTS, dtype=np.float64) / sum(STATE_WEIGHTS)
    state = rng.choice(len(STATES), size=n, p=state_p)
    district = np.empty(n, dtype=np.int64)
    for s in range(len(STATES)):
        rows = np.flatnonzero(state == s)
        cands = np.flatnonzero(district_state == s)
        district[rows] = rng.choice(cands, size=len(rows), p=district_w[cands] / district_w[cands].sum())
    phi = np.empty(n, dtype=np.int64)
    for d in range(config.n_districts):
        rows = np.flatnonzero(district == d)
        cands = np.flatnonzero(phi_district == d)
        phi[rows] = rng.choice(cands, size=len(rows), p=phi_w[cands] / phi_w[cands].sum())
    tbu = phi_tbu[phi]

    district_eff = rng.normal(0.0, config.district_sd, config.n_districts)
    tbu_eff = rng.normal(0.0, config.tbu_sd, config.n_tbu)
    phi_eff = rng.normal(0.0, config.phi_sd, config.n_phi)
    coef["State"] = dict(zip(STATES, STATE_EFFECTS))
    coef["District"] = dict(zip(district_names, district_eff.tolist()))
    coef["TBU"] = dict(zip(tbu_names, tbu_eff.tolist()))
    coef["PHI"] = dict(zip(phi_names, phi_eff.tolist()))
    logit = (np.asarray(STATE_EFFECTS)[state] + district_eff[district] + tbu_eff[tbu] + phi_eff[phi])

    columns = {
        "State": np.asarray(STATES, dtype=object)[state],
        "District": np.asarray(district_names, dtype=object)[district],
        "TBU": np.asarray(tbu_names, dtype=object)[tbu],
        "PHI": np.asarray(phi_names, dtype=object)[phi],
    }
    for name, cats, probs, effects in CLINICAL:
        if name == "PHIType":
            idx = phi_private[phi].astype(np.int64)
        else:
            idx = rng.choice(len(cats), size=n, p=probs)
        columns[name] = np.asarray(cats, dtype=object)[idx]
        logit += np.asarray(effects)[idx]
        coef[name] = dict(zip(cats, effects))

    age = np.clip(np.round(rng.gamma(6.0, 6.5, n) + 5), 5, 90)
    columns["Age"] = age.astype(np.float64)
    logit += age_effect(age)
    coef["Age"] = {str(a): float(age_effect(a)) for a in range(5, 91)}

    interaction = []
    if config.n_interaction_districts:
        # districts where the bank-details effect is reversed: +strength for "yes",
        # -strength for "no", centred so the district's mean logit is unchanged
        sizes = np.bincount(district, minlength=config.n_districts)
        order = np.argsort(sizes, kind="stable")
        start = int(config.interaction_position * config.n_districts)
        picked = np.sort(order[start: start + config.n_interaction_districts])
        interaction = [district_names[d] for d in picked]
        in_d = np.isin(district, picked)
        sign = np.where(columns["BankDetailsAdded"] == "yes", 1.0, -1.0)
        term = config.interaction_strength * sign
        logit += np.where(in_d, term - term[in_d].mean(), 0.0)

    if config.referral_cardinality:
        kinds = rng.integers(0, len(REFERRAL_KINDS), config.referral_cardinality)
        places = rng.integers(0, len(PLACES), config.referral_cardinality)
        names = [f"{REFERRAL_KINDS[k][0]} {PLACES[p]} {i:04d}" for i, (k, p) in enumerate(zip(kinds, places))]
        effects = np.asarray([REFERRAL_KINDS[k][1] for k in kinds])
        ref = rng.integers(0, config.referral_cardinality, n)
        columns["ReferredFrom"] = np.asarray(names, dtype=object)[ref]
        logit += effects[ref]
        coef["ReferredFrom"] = dict(zip(names, effects.tolist()))

    for i in range(config.n_noise):
        columns[f"Noise{i + 1}"] = np.asarray(
            [f"n{i + 1}_{v:02d}" for v in rng.integers(0, config.noise_cardinality, n)], dtype=object)
        coef[f"Noise{i + 1}"] = {}

    month = np.sort(rng.integers(0, config.months, n))
    half = config.months // 2
    first = month < half
    base = []
    for mask, target in ((first, config.prevalence_first_half), (~first, config.prevalence_second_half)):
        part = logit[mask]
        if part.size == 0:
            base.append(0.0)
            continue
        base.append(brentq(lambda b: expit(part + b).mean() - target, -30.0, 30.0, xtol=1e-12))
    base_schedule = [base[0] if m < half else base[1] for m in range(config.months)]
    logit = logit + np.asarray(base_schedule)[month]
    labels = (rng.random(n) < expit(logit)).astype(np.int64)

    data = pd.DataFrame({"EpisodeID": [f"E{i:07d}" for i in range(n)], "Month": month, "LFU": labels, **columns})
    schema = lfu_schema(config)
    features = schema.features
    if config.missing_rate > 0:
        mask = rng.random((n, len(features))) < config.missing_rate
        for j, name in enumerate(features):
            if mask[:, j].any():
                col = data[name].astype(object) if name != "Age" else data[name]
                col = col.where(~mask[:, j], None if name != "Age" else np.nan)
                data[name] = col
    truth = GroundTruth(coef, [float(b) for b in base_schedule], seed,
                        interaction, config.interaction_strength if interaction else 0.0, logit)
    return Frame(schema, data[schema.names]), truth


def config_from_dict(values: dict) -> GeneratorConfig:
    known = set(asdict(GeneratorConfig()))
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown generator settings {sorted(unknown)}")
    return GeneratorConfig(**values)
