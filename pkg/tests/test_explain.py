import numpy as np
import pytest
from scipy.special import expit

from lfurisk.errors import DataError
from lfurisk.explain import ale, local_surrogate, pfi
from lfurisk.metric import recall_at_k
from lfurisk.pipeline import fit_scorer
from tests.conftest import toy_frame


def obj(*v):
    return np.array(v, dtype=object)


@pytest.fixture(scope="module")
def planted():
    rng = np.random.default_rng(0)
    n = 8000
    a = rng.choice(obj("lo", "mid", "hi"), n)
    age = rng.uniform(5, 90, n)
    noise = rng.choice(obj("p", "q", "r"), n)
    z = np.select([a == "hi", a == "mid"], [2.0, 0.5], -1.5) + 0.01 * age - 3
    y = (rng.random(n) < expit(z)).astype(int)
    return toy_frame(y, A=a, N=noise, Age=age)


def additive(frame):
    a = frame.column("A").to_numpy()
    return expit(np.select([a == "hi", a == "mid"], [2.0, 0.5], -1.5) + 0.01 * frame.column("Age").to_numpy())


def test_pfi_ranks_dominant_and_zero_for_ignored(planted):
    rep = pfi(additive, planted, repeats=5, seed=1)
    assert rep.ranking()[0] == "A"
    assert rep.importances["N"] == (0.0, 0.0)
    assert rep.to_rows()[0]["feature"] == "A"
    again = pfi(additive, planted, repeats=5, seed=1)
    assert again.importances == rep.importances


def test_pfi_joint_permutation_reaches_random_level(planted):
    rep = pfi(additive, planted, repeats=5, seed=0, features=[("A", "N", "Age")])
    permuted = rep.baseline - rep.importances["A+N+Age"][0]
    assert abs(permuted - 0.2) < 0.05


def test_pfi_on_fitted_boosted_model(small):
    frame, _ = small
    feats = [f for f in frame.schema.categorical if f != "Noise1"]
    s = fit_scorer(frame, "boosted", {"n_estimators": 20, "max_depth": 3}, categorical=feats)
    rep = pfi(s, frame, repeats=2, features=["Noise1", "BankDetailsAdded"])
    assert rep.importances["Noise1"] == (0.0, 0.0)


def test_ale_linear_and_flat(planted):
    lin = ale(lambda f: 0.02 * f.column("Age").to_numpy() + 1.0, planted, "Age", bins=10)
    slopes = np.diff(np.r_[-lin.center, lin.values]) / np.diff(lin.edges)
    assert np.allclose(slopes, 0.02)
    assert lin.counts.sum() == planted.n
    # centred: count-weighted mean of the bin values is zero
    assert np.sum(lin.counts * lin.values) == pytest.approx(0.0, abs=1e-9)
    flat = ale(lambda f: np.full(f.n, 0.3), planted, "Age")
    assert np.all(flat.values == 0.0)
    assert lin.value_at(lin.edges[3]) == pytest.approx(lin.values[2])
    with pytest.raises(DataError):
        ale(additive, planted, "A")


def test_ale_skips_missing_ages():
    f = toy_frame([0, 1, 0, 1, 0], A=obj("a", "a", "b", "b", "a"), Age=np.array([10.0, np.nan, 30.0, 40.0, 50.0]))
    curve = ale(lambda fr: fr.column("Age").to_numpy() / 100, f, "Age", bins=4)
    assert curve.counts.sum() == 4


def test_surrogate_recovers_linear_coefficient(planted):
    rec = planted.take([0])
    res = local_surrogate(lambda f: 0.004 * f.column("Age").to_numpy(), rec, planted, n_samples=4000, seed=3)
    assert res.weights["Age"] == pytest.approx(0.004, rel=0.05)
    assert abs(res.weights["A"]) < 1e-9 and abs(res.weights["N"]) < 1e-9
    assert not res.ridge


def test_surrogate_constant_deterministic_and_homogeneous(planted):
    rec = planted.take([5])
    const = local_surrogate(lambda f: np.full(f.n, 0.2), rec, planted, n_samples=1000)
    assert all(abs(w) < 1e-9 for w in const.weights.values())
    a = local_surrogate(additive, rec, planted, n_samples=1000, seed=4)
    b = local_surrogate(additive, rec, planted, n_samples=1000, seed=4)
    assert a.to_json() == b.to_json()
    c = local_surrogate(lambda f: 3 * additive(f), rec, planted, n_samples=1000, seed=4)
    for k in a.weights:
        assert c.weights[k] == pytest.approx(3 * a.weights[k], rel=1e-8, abs=1e-12)
    with pytest.raises(DataError):
        local_surrogate(additive, planted.take([0, 1]), planted)


def test_surrogate_bank_details_protective(medium):
    frame, _ = medium
    s = fit_scorer(frame, "boosted", {"n_estimators": 60, "max_depth": 3}, encoder="target")
    idx = int(np.flatnonzero((frame.column("BankDetailsAdded") == "yes").to_numpy())[0])
    res = local_surrogate(s, frame.take([idx]), frame, n_samples=3000, seed=0)
    # "same as record" with record = yes: keeping bank details lowers the score
    assert res.weights["BankDetailsAdded"] < 0
