"""Command-line driver.

Each subcommand reads the outputs of earlier ones from ``--out`` and writes
its own files as ``<command>.<name>.<ext>``. Every file carries the config
hash and seed. Exit codes: 0 ok, 2 config error, 3 data error, 4 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import equity, explain, multiplicity, plotting
from .config import RunConfig
from .errors import ConfigError, DataError, InvariantError
from .frame import Frame, Schema, load_csv, merge_registers, summarize
from .harness import bootstrap_metric, cohort_eval, confidence_interval, friedman_cd, select_encoder_then_model
from .harness.search import SPACES, narrow
from .harness.selection import concat, guard
from .metric import auc_pr, auc_roc, av_recall, lift, precision_at_k, recall_at_k, recall_curve
from .pipeline import MATRIX_FAMILIES, Scorer, fit_scorer
from .split import SplitManifest, SplitPlan
from .synth import config_from_dict, synthesize

log = logging.getLogger("lfurisk")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
SPLITS = ("train", "val", "test", "pes")


class Run:
    """Output directory plus the resolved config; stamps every file it writes."""

    def __init__(self, cfg: RunConfig, out):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.stamp = {"config_hash": cfg.hash, "seed": cfg["seed"]}

    @property
    def seed(self) -> int:
        return self.cfg["seed"]

    def path(self, command: str, name: str, ext: str) -> Path:
        return self.out / f"{command}.{name}.{ext}"

    def require(self, command: str, name: str, ext: str) -> Path:
        p = self.path(command, name, ext)
        if not p.exists():
            raise DataError(f"missing prerequisite {p.name}; run `{command}` first")
        return p

    def write_json(self, command: str, name: str, obj) -> Path:
        p = self.path(command, name, "json")
        p.write_text(json.dumps({**self.stamp, **obj}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def read_json(self, command: str, name: str) -> dict:
        return json.loads(self.require(command, name, "json").read_text(encoding="utf-8"))

    def write_rows(self, command: str, name: str, rows: list[dict], fields: list[str] | None = None) -> Path:
        p = self.path(command, name, "csv")
        fields = fields or (list(rows[0]) if rows else [])
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields + ["config_hash", "seed"], lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({**{f: _cell(r.get(f)) for f in fields}, **self.stamp})
        return p

    def write_jsonl(self, command: str, name: str, records: list[dict]) -> Path:
        p = self.path(command, name, "jsonl")
        with open(p, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps({**self.stamp, **r}, sort_keys=True) + "\n")
        return p

    def write_frame(self, command: str, name: str, frame: Frame, role: str | None = None) -> Path:
        p = self.path(command, name, "csv")
        schema = frame.schema
        out = frame.data.copy()
        if schema.label is not None:
            out[schema.label] = out[schema.label].map({1: schema.label_positive, 0: schema.label_negative})
        if role is not None:
            out["role"] = role
        out["config_hash"] = self.stamp["config_hash"]
        out["seed"] = self.stamp["seed"]
        out.to_csv(p, index=False, na_rep="", lineterminator="\n")
        return p

    def figure(self, command: str, name: str) -> Path:
        return self.path(command, name, "png")

    # --- shared loaders
    def schema(self) -> Schema:
        return Schema.from_text(self.read_json("ingest", "manifest")["schema"])

    def frame(self) -> Frame:
        return load_csv(self.require("ingest", "data", "csv"), self.schema())

    def split_frame(self, name: str, path=None) -> Frame:
        path = Path(path) if path is not None else self.require("split", name, "csv")
        if not path.exists():
            raise DataError(f"no such file: {path}")
        return load_csv(path, self.schema(), role=_file_role(path))

    def selection(self) -> dict:
        return self.read_json("select", "outcome")


def _cell(v):
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _file_role(path) -> str | None:
    head = pd.read_csv(path, nrows=1, dtype=str, keep_default_na=False)
    return head["role"].iloc[0] if "role" in head.columns and len(head) else None


def _spaces(cfg: RunConfig) -> dict:
    out = {}
    for family, overrides in (cfg["models"]["spaces"] or {}).items():
        if family not in SPACES:
            raise ConfigError(f"config field 'models.spaces.{family}': no search space for this family")
        conv = {}
        for name, dist in overrides.items():
            if not isinstance(dist, list) or not dist:
                raise ConfigError(f"config field 'models.spaces.{family}.{name}': expected [kind, ...]")
            conv[name] = (dist[0], tuple(dist[1])) if dist[0] == "choice" else tuple(dist)
        try:
            out[family] = narrow(SPACES[family], **conv)
        except ConfigError as exc:
            raise ConfigError(f"config field 'models.spaces.{family}': {exc}") from exc
    return out


def _check_scores(scores: np.ndarray, what: str):
    if not np.all(np.isfinite(scores)) or np.any(scores < 0) or np.any(scores > 1):
        raise InvariantError(f"{what}: scores must be finite and within [0, 1]")


def _k(run: Run) -> float:
    return run.cfg["metrics"]["k"]


def _avr(run: Run):
    lo, hi = run.cfg["metrics"]["av_recall"]
    return lambda s, y: av_recall(s, y, lo, hi)


def _rk(run: Run):
    k = _k(run)
    return lambda s, y: recall_at_k(s, y, k)


# ---------------------------------------------------------------- commands

def cmd_synth(run: Run, args) -> None:
    settings = run.cfg["data"]["synth"]
    if settings is None:
        raise ConfigError("config field 'data.synth': synth settings are required for this command")
    gcfg = config_from_dict(settings)
    frame, truth = synthesize(gcfg, run.seed)
    run.write_frame("synth", "data", frame)
    run.write_json("synth", "truth", {**truth.to_dict(), "schema": frame.schema.to_text()})
    ids = frame.column(frame.schema.id)
    run.write_rows("synth", "oracle", [{"id": i, "probability": float(p)}
                                       for i, p in zip(ids, truth.probabilities)], ["id", "probability"])


def cmd_ingest(run: Run, args) -> None:
    data = run.cfg["data"]
    if data["csv"]:
        schemas = data["schema"] if isinstance(data["schema"], list) else [data["schema"]]
        if len(schemas) != len(data["csv"]):
            raise ConfigError("config field 'data.schema': need one schema per csv file")
        frames = []
        for path, spath in zip(data["csv"], schemas):
            try:
                text = Path(spath).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"config field 'data.schema': cannot read {spath}") from exc
            frames.append(load_csv(path, Schema.from_text(text)))
        frame = frames[0] if len(frames) == 1 else merge_registers(frames, data["key"])
        source = {"csv": [Path(p).name for p in data["csv"]]}
    else:
        truth = run.read_json("synth", "truth")
        frame = load_csv(run.require("synth", "data", "csv"), Schema.from_text(truth["schema"]))
        source = {"synth": data["synth"]}
    cohorts = [c for c in run.cfg["cohorts"] if c in frame.schema.names]
    stats = summarize(frame, cohorts)
    run.write_frame("ingest", "data", frame)
    run.write_json("ingest", "manifest", {"schema": frame.schema.to_text(), "n": frame.n, "source": source})
    run.write_json("ingest", "summary", stats.to_dict())
    rows = [{"column": col, "value": value, **t} for col, table in stats.cohorts.items() for value, t in table.items()]
    run.write_rows("ingest", "cohorts", rows, ["column", "value", "n", "positives", "prevalence"])


def cmd_split(run: Run, args) -> None:
    frame = run.frame()
    sp = run.cfg["split"]
    manifest = SplitManifest.build(frame, SplitPlan(sp["pes_months"], tuple(sp["fractions"])))
    run.write_json("split", "manifest", manifest.to_dict())
    rows = []
    for name, part in manifest.frames(frame).items():
        run.write_frame("split", name, part, role=name)
        y, m = part.labels, part.months
        rows.append({"split": name, "n": part.n, "positives": int(y.sum()), "prevalence": float(y.mean()),
                     "first_month": int(m.min()), "last_month": int(m.max())})
    run.write_rows("split", "summary", rows)


def _categorical(run: Run, frame: Frame):
    cats = run.cfg["categorical"]
    if cats is None:
        return None
    absent = [c for c in cats if c not in frame.schema.categorical]
    if absent:
        raise ConfigError(f"config field 'categorical': not categorical columns {absent}")
    return list(cats)


def cmd_select(run: Run, args) -> None:
    train = run.split_frame("train", getattr(args, "train", None))
    val = run.split_frame("val", getattr(args, "val", None))
    test = run.split_frame("test", getattr(args, "test", None))
    guard(train, val, test)
    cfg = run.cfg
    outcome = select_encoder_then_model(
        train, val, test, cfg["encoders"], cfg["models"]["families"], cfg["models"]["budget"], run.seed,
        _spaces(cfg), _categorical(run, train), cfg["metrics"]["bootstrap"], refit=False)
    if "pes" in outcome.roles_read:
        raise InvariantError("selection read passive-evaluation rows")
    run.write_json("select", "outcome", outcome.to_dict())
    run.write_jsonl("select", "trials", outcome.trials)
    run.write_rows("select", "encoders", [{"encoder": e, "avrecall_test": v}
                                          for e, v in outcome.encoder_scores.items()])
    ranks = outcome.cd.avg_rank if outcome.cd else {}
    rows = []
    for fam, v in outcome.family_scores.items():
        rows.append({"family": fam, "avrecall_test": v, "avg_rank": ranks.get(fam),
                     "clique_id": outcome.cd.clique_of(fam) if outcome.cd else None})
    run.write_rows("select", "models", rows)
    if outcome.cd:
        run.write_rows("select", "cd", outcome.cd.to_rows())


def _selected_fit(run: Run, frame: Frame, weights=None) -> Scorer:
    sel = run.selection()
    fam = sel["family"]
    return fit_scorer(frame, fam, sel["hparams"], sel["encoder"] if fam in MATRIX_FAMILIES else None,
                      weights=weights, seed=run.seed, categorical=_categorical(run, frame))


def cmd_train(run: Run, args) -> None:
    parts = [run.split_frame(n) for n in ("train", "val", "test")]
    guard(*parts)
    modeling = concat(parts, "modeling")
    scorer = _selected_fit(run, modeling)
    run.write_json("train", "model", {"scorer": scorer.to_dict(), "n_train": modeling.n})


def _trained(run: Run) -> Scorer:
    return Scorer.from_dict(run.read_json("train", "model")["scorer"])


def _oracle(run: Run, frame: Frame):
    p = run.path("synth", "oracle", "csv")
    if run.cfg["data"]["csv"] or not p.exists():
        return None
    table = pd.read_csv(p, dtype={"id": str})
    lookup = dict(zip(table["id"], table["probability"]))
    ids = frame.column(frame.schema.id).astype(str)
    if not ids.isin(lookup.keys()).all():
        return None
    return ids.map(lookup).to_numpy(dtype=np.float64)


def _method_scores(run: Run, pes: Frame) -> dict:
    sel = run.selection()
    scorer = _trained(run)
    scores = {f"selected:{sel['family']}": scorer.predict(pes)}
    for rule in ("rule1", "rule2", "rule3"):
        scores[rule] = fit_scorer(pes, rule).predict(pes)
    scores["random"] = fit_scorer(pes, "random", seed=run.seed).predict(pes)
    oracle = _oracle(run, pes)
    if oracle is not None:
        scores["oracle"] = oracle
    for name, s in scores.items():
        _check_scores(s, name)
    return scores


def cmd_evaluate(run: Run, args) -> None:
    pes = run.split_frame("pes")
    y = pes.labels
    scores = _method_scores(run, pes)
    B, k = run.cfg["metrics"]["bootstrap"], _k(run)
    lo, hi = run.cfg["metrics"]["av_recall"]
    boot_r = bootstrap_metric(scores, y, B, run.seed, _rk(run))
    boot_a = bootstrap_metric(scores, y, B, run.seed, _avr(run))
    rows = []
    point = {m: (recall_at_k(s, y, k), av_recall(s, y, lo, hi)) for m, s in scores.items()}
    best_rule = max(point[r][0] for r in ("rule1", "rule2", "rule3"))
    for m, s in scores.items():
        r_ci = confidence_interval(boot_r.of(m)) if B >= 30 else (None, None)
        a_ci = confidence_interval(boot_a.of(m)) if B >= 30 else (None, None)
        rows.append({"method": m, "recall_at_k": point[m][0], "recall_ci_lo": r_ci[0], "recall_ci_hi": r_ci[1],
                     "avrecall": point[m][1], "avrecall_ci_lo": a_ci[0], "avrecall_ci_hi": a_ci[1],
                     "precision_at_k": precision_at_k(s, y, k), "auc_roc": auc_roc(s, y), "auc_pr": auc_pr(s, y),
                     "lift_vs_best_rule_pct": lift(point[m][0], best_rule) if best_rule > 0 else None})
    run.write_rows("evaluate", "metrics", rows)
    table = pd.DataFrame({"id": pes.column(pes.schema.id).to_numpy(), **scores})
    run.write_rows("evaluate", "scores", table.to_dict("records"), list(table.columns))
    run.write_json("evaluate", "summary", {"k": k, "av_recall": [lo, hi], "bootstrap": B, "n": pes.n,
                                           "positives": int(y.sum()), "methods": list(scores)})


def cmd_cohorts(run: Run, args) -> None:
    pes = run.split_frame("pes")
    scores = _trained(run).predict(pes)
    B, k = run.cfg["metrics"]["bootstrap"], _k(run)
    for col in run.cfg["cohorts"]:
        if col not in pes.schema.names:
            raise ConfigError(f"config field 'cohorts': no column {col!r}")
        g = cohort_eval(pes, scores, col, "global", k, B, run.seed)
        loc = cohort_eval(pes, scores, col, "local", k, B, run.seed)
        rows = []
        for rg, rl in zip(g.rows, loc.rows):
            rows.append({"cohort": rg["cohort"], "n": rg["n"], "positives": rg["positives"],
                         "recall_global": rg["recall"], "ci_lo_global": rg["ci_lo"], "ci_hi_global": rg["ci_hi"],
                         "effective_k_global": rg["effective_k"], "recall_local": rl["recall"],
                         "ci_lo_local": rl["ci_lo"], "ci_hi_local": rl["ci_hi"],
                         "effective_k_local": rl["effective_k"], "defined": rg["defined"]})
        run.write_rows("cohorts", col, rows)


def _worst_cohort(recalls: dict, positives: dict, min_positives: int = 5):
    eligible = [c for c in recalls if positives.get(c, 0) >= min_positives]
    if not eligible:
        raise DataError("no cohort has enough positives to pick the worst one")
    return min(eligible, key=lambda c: (recalls[c], c))


def cmd_fairness(run: Run, args) -> None:
    fcfg = run.cfg["fairness"]
    k = _k(run)
    train, val, test = (run.split_frame(n) for n in ("train", "val", "test"))
    pes = run.split_frame("pes")
    guard(train, val, test)
    fit_part = concat([train, val], "train+val")
    scorer = _selected_fit(run, fit_part)
    hold_s, pes_s = scorer.predict(test), scorer.predict(pes)
    col = fcfg["column"]
    for frame in (test, pes):
        if col not in frame.schema.names:
            raise ConfigError(f"config field 'fairness.column': no column {col!r}")
    # shifts are fitted on the chronologically earlier holdout and reported on later rows
    table = equity.fit_shifts(hold_s, test.labels, test.column(col), k, fcfg["tolerance"], holdout="test")
    run.write_json("fairness", "shifts", table.to_dict())
    mitigated = equity.apply_shifts(pes_s, pes.column(col), table)
    _check_scores(mitigated, "mitigated")
    before = cohort_eval(pes, pes_s, col, "global", k, 0)
    after = cohort_eval(pes, mitigated, col, "global", k, 0)
    rows = [{"cohort": a["cohort"], "n": a["n"], "positives": a["positives"], "recall_original": a["recall"],
             "effective_k_original": a["effective_k"], "recall_mitigated": b["recall"],
             "effective_k_mitigated": b["effective_k"]} for a, b in zip(before.rows, after.rows)]
    run.write_rows("fairness", "mitigation", rows)
    gb, ga = before.recalls(), after.recalls()
    run.write_json("fairness", "gini", {
        "column": col, "gini_original": equity.gini(gb.values()), "gini_mitigated": equity.gini(ga.values()),
        "gap_original": equity.max_gap(gb), "gap_mitigated": equity.max_gap(ga),
        "overall_recall_original": recall_at_k(pes_s, pes.labels, k),
        "overall_recall_mitigated": recall_at_k(mitigated, pes.labels, k)})

    acol = fcfg["augment_column"]
    hold = cohort_eval(test, hold_s, acol, "global", k, 0)
    worst = _worst_cohort(hold.recalls(), {r["cohort"]: r["positives"] for r in hold.rows})
    variants = {"original": pes_s}
    dup = equity.augment_duplicate(fit_part, acol, worst, fcfg["copies"])
    variants["duplicate"] = _selected_fit(run, dup).predict(pes)
    variants["reweight"] = _selected_fit(run, fit_part, equity.reweigh_log_inverse(fit_part, acol)).predict(pes)
    rows = []
    mask = (pes.column(acol) == worst).to_numpy()
    for name, s in variants.items():
        _check_scores(s, name)
        target = cohort_eval(pes, s, acol, "global", k, 0)
        try:
            cohort_recall = target.row(worst)["recall"]
        except KeyError:
            cohort_recall = None
        rows.append({"variant": name, "cohort": worst, "cohort_rows": int(mask.sum()),
                     "cohort_recall": cohort_recall, "overall_recall": recall_at_k(s, pes.labels, k)})
    run.write_rows("fairness", "augment", rows)


def cmd_multiplicity(run: Run, args) -> None:
    mcfg = run.cfg["multiplicity"]
    sel = run.selection()
    train, test = run.split_frame("train"), run.split_frame("test")
    guard(train, test)
    trials = [json.loads(line) for line in run.require("select", "trials", "jsonl").read_text().splitlines()]
    pool = [t for t in trials if t["family"] == "boosted" and t["encoder"] == sel["encoder"]
            and t["stage"] == "encoder"]
    pool.sort(key=lambda t: (-t["objective"], t["trial"]))
    pool = pool[: mcfg["candidates"]]
    if not pool:
        raise DataError("no candidate models in the selection trial log")
    scores = {}
    for t in pool:
        s = fit_scorer(train, "boosted", t["params"], sel["encoder"], seed=run.seed,
                       categorical=_categorical(run, train))
        scores[f"trial{t['trial']}"] = s.predict(test)
    eps = multiplicity.build_epsilon_set(scores, test.labels, _rk(run), mcfg["epsilon"], _k(run))
    rep = multiplicity.report(eps)
    if not 0 <= rep["discrepancy"] <= rep["ambiguity"] <= 1:
        raise InvariantError("discrepancy must not exceed ambiguity")
    run.write_json("multiplicity", "report", rep)
    run.write_rows("multiplicity", "members", [{"model": m, "recall_at_k": eps.metrics[m],
                                                "member": m in eps.members or m == eps.baseline,
                                                "disagreement": rep["members"].get(m, 0.0)} for m in scores])


def cmd_explain(run: Run, args) -> None:
    ecfg = run.cfg["explain"]
    pes = run.split_frame("pes")
    scorer = _trained(run)
    feats = ecfg["features"] or pes.schema.features
    imp = explain.pfi(scorer, pes, _rk(run), ecfg["repeats"], run.seed, feats, f"recall@{_k(run)}")
    run.write_rows("explain", "pfi", imp.to_rows(), ["feature", "importance", "std"])
    feature = ecfg["ale_feature"]
    if feature in pes.schema.numeric:
        curve = explain.ale(scorer, pes, feature, ecfg["ale_bins"])
        run.write_rows("explain", "ale", curve.to_rows())
        run.write_json("explain", "ale", {"feature": feature, "edges": curve.edges.tolist(),
                                          "values": curve.values.tolist(), "center": curve.center})
    scores = scorer.predict(pes)
    top = int(np.argmax(scores))
    background = concat([run.split_frame(n) for n in ("train", "val", "test")], "modeling")
    sur = explain.local_surrogate(scorer, pes.take([top]), background, ecfg["surrogate_samples"], seed=run.seed,
                                  features=feats)
    run.write_json("explain", "surrogate", {"record": str(pes.column(pes.schema.id).iloc[top]),
                                            "score": float(scores[top]), **json.loads(sur.to_json())})


def cmd_report(run: Run, args) -> None:
    made = []
    summary = run.read_json("ingest", "summary")
    rows = [{"column": col, "value": v, **t} for col, table in summary["cohorts"].items() for v, t in table.items()]
    made.append(run.write_rows("report", "table1", rows, ["column", "value", "n", "positives", "prevalence"]))
    made.append(_copy_csv(run, ("select", "encoders"), "table2"))
    made.append(_copy_csv(run, ("evaluate", "metrics"), "table3"))
    cohort_rows = []
    for col in run.cfg["cohorts"]:
        table = pd.read_csv(run.require("cohorts", col, "csv"), dtype={"cohort": str})
        for r in table.drop(columns=["config_hash", "seed"]).to_dict("records"):
            cohort_rows.append({"column": col, **r})
    if cohort_rows:
        made.append(run.write_rows("report", "cohorts", cohort_rows))
    for src, dst in ((("fairness", "mitigation"), "mitigation"), (("fairness", "augment"), "augment"),
                     (("explain", "pfi"), "importance"), (("multiplicity", "members"), "multiplicity")):
        if run.path(*src, "csv").exists():
            made.append(_copy_csv(run, src, dst))
    if run.path("fairness", "gini", "json").exists():
        g = run.read_json("fairness", "gini")
        made.append(run.write_rows("report", "gini", [
            {"column": g["column"], "stage": "original", "gini": g["gini_original"], "gap": g["gap_original"]},
            {"column": g["column"], "stage": "mitigated", "gini": g["gini_mitigated"], "gap": g["gap_mitigated"]}]))
    made += _figures(run)
    index = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in made}
    run.write_json("report", "index", {"files": index})


def _copy_csv(run: Run, src: tuple, name: str) -> Path:
    table = pd.read_csv(run.require(*src, "csv"), dtype=str, keep_default_na=False)
    rows = table.drop(columns=["config_hash", "seed"]).to_dict("records")
    return run.write_rows("report", name, rows, [c for c in table.columns if c not in ("config_hash", "seed")])


def _figures(run: Run) -> list[Path]:
    made = []
    stamp = run.stamp
    pes = run.split_frame("pes")
    y = pes.labels
    scores = pd.read_csv(run.require("evaluate", "scores", "csv"))
    ks = np.arange(1, 101)
    curves = {m: (ks, recall_curve(scores[m].to_numpy(), y, ks))
              for m in scores.columns if m not in ("id", "config_hash", "seed")}
    p = run.figure("report", "recall_curves")
    plotting.recall_curves(curves, p, stamp)
    made.append(p)
    if run.path("select", "cd", "csv").exists():
        cd = run.read_json("select", "outcome")["cd"]
        rows = sorted(({"method": m, "avg_rank": r} for m, r in cd["avg_rank"].items()),
                      key=lambda r: (r["avg_rank"], r["method"]))
        p = run.figure("report", "cd")
        plotting.cd_diagram(rows, cd["cliques"], p, stamp)
        made.append(p)
    for col in run.cfg["cohorts"]:
        table = pd.read_csv(run.require("cohorts", col, "csv"), dtype={"cohort": str})
        table = table.where(table.notna(), None)
        p = run.figure("report", f"cohorts_{col}")
        plotting.cohort_bars(list(table["cohort"]), list(table["recall_global"]), list(table["recall_local"]),
                             p, stamp, col)
        made.append(p)
    if run.path("explain", "ale", "json").exists():
        a = run.read_json("explain", "ale")
        p = run.figure("report", "ale")
        plotting.ale_plot(np.array(a["edges"]), np.array(a["values"]), a["center"], a["feature"], p, stamp)
        made.append(p)
    if run.path("explain", "pfi", "csv").exists():
        table = pd.read_csv(run.path("explain", "pfi", "csv"))
        p = run.figure("report", "importance")
        plotting.importance_bars(table.to_dict("records"), p, stamp)
        made.append(p)
    return made


PIPELINE = ("synth", "ingest", "split", "select", "train", "evaluate", "cohorts", "fairness", "multiplicity",
            "explain", "report")
COMMANDS = {name: globals()[f"cmd_{name}"] for name in PIPELINE}


def cmd_run(run: Run, args) -> None:
    for name in PIPELINE:
        if name == "synth" and run.cfg["data"]["csv"]:
            continue
        log.info("running %s", name)
        COMMANDS[name](run, args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="lfurisk", description="Loss-to-follow-up risk ranking pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINE + ("run",):
        p = sub.add_parser(name, parents=[common])
        if name == "select":
            for split in ("train", "val", "test"):
                p.add_argument(f"--{split}", help=f"CSV to use as the {split} split instead of the split output")
    return parser


def _set_threads(n):
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
        cfg = cfg.with_seed(args.seed)
        _set_threads(args.threads)
        run = Run(cfg, args.out)
        run.write_json(args.command, "config", {"config": cfg.values})
        (cmd_run if args.command == "run" else COMMANDS[args.command])(run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
