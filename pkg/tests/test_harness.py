import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import friedmanchisquare

from lfurisk.errors import ConfigError, DataError, LeakageError
from lfurisk.harness import (BOOST_SPACE, bootstrap_metric, cohort_eval, confidence_interval, friedman_cd,
                             global_threshold, local_thresholds, narrow, random_search, resample_indices,
                             sample_params, select_encoder_then_model)
from lfurisk.harness.cd import block_ranks, friedman_statistic, holm
from lfurisk.harness.selection import tune
from lfurisk.metric import av_recall, effective_k, recall_at_k
from lfurisk.split import SplitManifest, SplitPlan
from lfurisk.synth import GeneratorConfig, synthesize
from tests.conftest import toy_frame

FAST = narrow(BOOST_SPACE, n_estimators=("choice", (30,)), max_depth=("randint", 2, 4),
              learning_rate=("loguniform", 0.05, 0.3), scale_pos_weight=("randint", 1, 5))


# ------------------------------------------------------------------ bootstrap

def test_bootstrap_identical_methods_and_determinism():
    rng = np.random.default_rng(0)
    y = (rng.random(2000) < 0.1).astype(int)
    s = rng.random(2000)
    a = bootstrap_metric({"a": s, "b": s.copy()}, y, B=50, seed=4)
    assert np.array_equal(a.of("a"), a.of("b"))
    b = bootstrap_metric({"a": s, "b": s.copy()}, y, B=50, seed=4)
    assert np.array_equal(a.replicates, b.replicates) and a.checksums == b.checksums


def test_bootstrap_pairing_by_checksum():
    y = np.array([0, 1] * 50)
    bs = bootstrap_metric({"a": np.linspace(0, 1, 100), "b": np.linspace(1, 0, 100)}, y, B=20, seed=9)
    for b in range(20):
        idx = resample_indices(100, 9, b)
        assert bs.checksums[b] == hashlib.blake2b(idx.tobytes(), digest_size=8).hexdigest()
        assert bs.of("a")[b] == recall_at_k(np.linspace(0, 1, 100)[idx], y[idx])


def test_random_scorer_replicate_mean():
    rng = np.random.default_rng(1)
    y = (rng.random(20000) < 0.05).astype(int)
    bs = bootstrap_metric({"r": rng.random(20000)}, y, B=200, seed=0)
    # sd of Recall@20 with ~1000 positives is about 0.0126
    assert abs(bs.of("r").mean() - 0.2) < 3 * 0.0126


def test_bootstrap_undefined_metric_is_nan():
    y = np.array([0] * 9 + [1])
    bs = bootstrap_metric({"a": np.arange(10.0)}, y, B=40, seed=0)
    assert np.isnan(bs.of("a")).any()
    assert np.isfinite(bs.of("a")).any()


def test_confidence_interval_percentiles():
    r = np.arange(1000.0)
    lo, hi = confidence_interval(r)
    assert (lo, hi) == pytest.approx((np.quantile(r, 0.025), np.quantile(r, 0.975)), abs=1e-9)
    with pytest.raises(DataError):
        confidence_interval(np.arange(10.0))


# ------------------------------------------------------------------ Friedman / CD

HAND = np.array([
    [0.61, 0.58, 0.63, 0.60, 0.59, 0.62, 0.64, 0.57, 0.61, 0.60, 0.62, 0.59],
    [0.55, 0.58, 0.57, 0.54, 0.60, 0.56, 0.58, 0.57, 0.55, 0.59, 0.56, 0.58],
    [0.50, 0.52, 0.49, 0.54, 0.51, 0.50, 0.53, 0.57, 0.48, 0.52, 0.50, 0.51],
])


def test_friedman_hand_dataset_matches_rank_sums():
    # rank within each column by hand-style brute force, best = 1, ties averaged
    k, n = HAND.shape
    ranks = np.zeros_like(HAND)
    for j in range(n):
        col = HAND[:, j]
        for i in range(k):
            better = sum(col[t] > col[i] for t in range(k))
            equal = sum(col[t] == col[i] for t in range(k))
            ranks[i, j] = better + (equal + 1) / 2
    assert np.array_equal(block_ranks(HAND), ranks)
    stat = friedman_statistic(HAND)
    assert stat == pytest.approx(friedmanchisquare(*HAND).statistic, rel=1e-12)


@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(10, 40))
@settings(max_examples=60, deadline=None)
def test_friedman_matches_scipy_and_shift_invariance(seed, k, n):
    rng = np.random.default_rng(seed)
    vals = np.round(rng.random((k, n)), 1)  # coarse grid forces ties
    if k >= 3:
        ref = friedmanchisquare(*vals).statistic
        if np.isfinite(ref):
            assert friedman_statistic(vals) == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert friedman_statistic(vals + 3.0) == pytest.approx(friedman_statistic(vals), abs=1e-12)


def test_identical_methods_single_clique():
    rng = np.random.default_rng(0)
    v = rng.random(100)
    res = friedman_cd(np.vstack([v, v, v]), ["a", "b", "c"])
    assert res.statistic == 0 and res.p_value == 1.0 and not res.rejected
    assert res.cliques == [["a", "b", "c"]]


def test_strictly_dominant_method():
    rng = np.random.default_rng(0)
    b = rng.random(200)
    res = friedman_cd(np.vstack([b + 0.1, b]), ["A", "B"])
    assert res.avg_rank["A"] == 1.0 and res.rejected
    assert res.pairwise[("A", "B")] < 0.05
    assert res.cliques == [["A"], ["B"]]


def brute_holm(p):
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    adj = [0.0] * m
    for rank, i in enumerate(order):
        adj[i] = min(1.0, max((m - r) * p[order[r]] for r in range(rank + 1)))
    return adj


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_holm_matches_brute_force_and_is_monotone(p):
    adj = holm(p)
    assert np.allclose(adj, brute_holm(p))
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(adj[order]) >= 0)
    assert np.all(adj >= np.asarray(p))


def test_cd_needs_enough_blocks():
    with pytest.raises(DataError):
        friedman_cd(np.zeros((2, 5)), ["a", "b"])


# ------------------------------------------------------------------ thresholds and cohorts

def test_threshold_hand_cases():
    s = [0.3, 0.9, 0.1, 0.5, 0.7]
    assert global_threshold(s, 20) == 0.9
    assert global_threshold(s, 40) == 0.7
    assert local_thresholds(s, ["x"] * 5, 20) == {"x": global_threshold(s, 20)}


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=80, deadline=None)
def test_local_effective_k_within_rounding(seed, n_cohorts):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 400))
    scores = rng.random(n)
    cohorts = rng.integers(0, n_cohorts, n).astype(str)
    th = local_thresholds(scores, cohorts, 20)
    for c, t in th.items():
        cs = scores[cohorts == c]
        assert abs(effective_k(cs, t) - 20) <= 100 / cs.size + 1e-9


def test_cohort_eval_partition_and_modes(small):
    frame, truth = small
    scores = truth.probabilities
    g = cohort_eval(frame, scores, "Month", "global", B=0)
    assert sum(r["n"] for r in g.rows) == frame.n
    assert sum(r["positives"] for r in g.rows) == frame.labels.sum()
    loc = cohort_eval(frame, scores, "Month", "local", B=0)
    for r in loc.rows:
        assert abs(r["effective_k"] - 20) <= 100 / r["n"]


def test_cohort_with_all_top_scores_gets_large_effective_k():
    y = np.array([1, 0] * 50)
    cohort = np.array(["top"] * 10 + ["rest"] * 90, dtype=object)
    scores = np.r_[np.ones(10), np.linspace(0, 0.5, 90)]
    f = toy_frame(y, C=cohort)
    rep = cohort_eval(f, scores, "C", "global", B=0)
    assert rep.row("top")["effective_k"] == 100.0
    assert rep.row("rest")["effective_k"] == pytest.approx(100 * 10 / 90)


def test_uniform_cohorts_global_close_to_local():
    rng = np.random.default_rng(2)
    n = 60000
    y = (rng.random(n) < 0.1).astype(int)
    scores = rng.random(n) + 0.3 * y
    f = toy_frame(y, C=rng.choice(np.array(["a", "b", "c"], dtype=object), n))
    g = cohort_eval(f, scores, "C", "global", B=0).recalls()
    loc = cohort_eval(f, scores, "C", "local", B=0).recalls()
    for c in g:
        assert abs(g[c] - loc[c]) < 0.03


def test_cohort_ci_brackets_recall(small):
    frame, truth = small
    rep = cohort_eval(frame, truth.probabilities, "State", "global", B=200, seed=1)
    for r in rep.rows:
        if r["ci_lo"] is not None:
            assert r["ci_lo"] <= r["recall"] <= r["ci_hi"]
    assert rep.to_csv().splitlines()[0].startswith("cohort,n,positives")


# ------------------------------------------------------------------ random search

def test_sample_params_cover_space():
    p = sample_params(BOOST_SPACE, 0, 0)
    assert set(p) == set(BOOST_SPACE)
    assert sample_params(BOOST_SPACE, 0, 0) == p
    for t in range(200):
        q = sample_params(BOOST_SPACE, 3, t)
        assert 1e-7 <= q["learning_rate"] <= 1
        assert 1 <= q["max_depth"] <= 9 and 1 <= q["min_child_weight"] <= 8
        assert 1 <= q["scale_pos_weight"] <= 90
        assert 0.5 <= q["subsample"] <= 1 and 0.5 <= q["colsample"] <= 1
    with pytest.raises(ConfigError):
        narrow(BOOST_SPACE, depth=("randint", 1, 2))


def test_random_search_rules():
    one = random_search(BOOST_SPACE, lambda p: p["learning_rate"], budget=1, seed=5)
    assert one.best_params == sample_params(BOOST_SPACE, 5, 0)
    const = random_search(BOOST_SPACE, lambda p: 1.0, budget=5, seed=5)
    assert const.best_trial == 0
    long = random_search(BOOST_SPACE, lambda p: -abs(p["learning_rate"] - 0.1), budget=100, seed=2)
    short = random_search(BOOST_SPACE, lambda p: -abs(p["learning_rate"] - 0.1), budget=10, seed=2)
    assert long.best_value >= short.best_value
    assert long.trials[:10] == short.trials
    assert len(long.to_jsonl().splitlines()) == 100
    nan = random_search(BOOST_SPACE, lambda p: float("nan") if p["max_depth"] > 0 else 0, budget=3)
    assert nan.best_value == -np.inf


# ------------------------------------------------------------------ selection

@pytest.fixture(scope="module")
def splits():
    frame, _ = synthesize(GeneratorConfig(n=12000), seed=2)
    return SplitManifest.build(frame, SplitPlan()).frames(frame)


def test_pes_frames_are_refused(splits):
    with pytest.raises(LeakageError):
        tune(splits["train"], splits["pes"], "boosted", "count", 1, 0, FAST)
    with pytest.raises(LeakageError):
        select_encoder_then_model(splits["train"], splits["val"], splits["pes"], ["count"], ["boosted"], 1)


def test_selection_single_choice_and_determinism(splits):
    args = (splits["train"], splits["val"], splits["test"], ["count"], ["boosted"])
    a = select_encoder_then_model(*args, budget=2, seed=1, spaces={"boosted": FAST}, refit=False)
    b = select_encoder_then_model(*args, budget=2, seed=1, spaces={"boosted": FAST}, refit=False)
    assert (a.encoder, a.family) == ("count", "boosted")
    assert json.dumps(a.trials, sort_keys=True) == json.dumps(b.trials, sort_keys=True)
    assert a.roles_read == {"train", "val", "test"}
    assert a.cd is None and a.scorer is None


def test_selection_with_families_builds_cd_and_refits(splits):
    out = select_encoder_then_model(splits["train"], splits["val"], splits["test"], ["count", "target"],
                                    ["boosted", "rule3", "random"], budget=1, seed=0,
                                    spaces={"boosted": FAST}, B=50)
    assert out.family in ("boosted", "rule3", "random")
    assert set(out.cd.avg_rank) == {"boosted", "rule3", "random"}
    assert out.scorer is not None
    assert "pes" not in out.roles_read
    assert {t["stage"] for t in out.trials} == {"encoder", "model"}


@pytest.mark.parametrize("metric", [recall_at_k, av_recall])
def test_bootstrap_count_path_matches_resorting(metric, monkeypatch):
    from lfurisk.harness import bootstrap as bm
    rng = np.random.default_rng(4)
    y = (rng.random(700) < 0.1).astype(int)
    s = rng.random(700)
    fast = bootstrap_metric({"a": s}, y, 40, 9, metric).replicates
    monkeypatch.setattr(bm, "_FAST", {})
    slow = bootstrap_metric({"a": s}, y, 40, 9, metric).replicates
    assert np.array_equal(fast, slow, equal_nan=True)
