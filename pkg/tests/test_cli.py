import csv
import json
from pathlib import Path

import pytest
import yaml

from lfurisk.cli import main
from lfurisk.config import RunConfig

SMALL = {
    "seed": 1,
    "data": {"synth": {"n": 8000}},
    "encoders": ["count", "similarity"],
    "models": {"families": ["boosted", "gam", "naive_bayes", "tree", "rule1"], "budget": 1,
               "spaces": {"boosted": {"n_estimators": ["choice", [30]], "max_depth": ["randint", 2, 4]},
                          "gam": {"n_cycles": ["choice", [10]]}}},
    "metrics": {"bootstrap": 40},
    "cohorts": ["State", "Gender"],
    "multiplicity": {"candidates": 2},
    "explain": {"repeats": 1, "surrogate_samples": 300},
}


def write_cfg(tmp, values, name="cfg.yaml"):
    p = Path(tmp) / name
    p.write_text(yaml.safe_dump(values))
    return str(p)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_cfg(tmp, SMALL)
    out = tmp / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    return cfg, out


def test_run_writes_every_report(pipeline):
    _, out = pipeline
    names = {p.name for p in out.iterdir()}
    for expected in ("synth.data.csv", "synth.truth.json", "split.manifest.json", "select.outcome.json", "train.model.json",
                     "evaluate.metrics.csv", "cohorts.State.csv", "fairness.shifts.json",
                     "multiplicity.report.json", "explain.pfi.csv", "explain.surrogate.json", "report.table2.csv",
                     "report.index.json"):
        assert expected in names, expected
    assert any(n.endswith(".png") for n in names)


def test_every_file_is_stamped(pipeline):
    cfg, out = pipeline
    h = RunConfig.load(cfg).hash
    for p in out.iterdir():
        if p.suffix == ".csv":
            with p.open() as fh:
                row = next(csv.DictReader(fh))
            assert row["config_hash"] == h and row["seed"] == "1", p.name
        elif p.suffix == ".json":
            d = json.loads(p.read_text())
            assert d["config_hash"] == h and d["seed"] == 1, p.name
        elif p.suffix == ".jsonl":
            first = json.loads(p.read_text().splitlines()[0])
            assert first["config_hash"] == h, p.name


def test_rerun_evaluate_is_byte_identical(pipeline):
    cfg, out = pipeline
    before = (out / "evaluate.metrics.csv").read_bytes()
    assert main(["evaluate", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "evaluate.metrics.csv").read_bytes() == before


def test_select_refuses_passive_rows(pipeline, tmp_path):
    cfg, out = pipeline
    code = main(["select", "--config", cfg, "--out", str(out), "--train", str(out / "split.pes.csv")])
    assert code == 3


def test_config_errors_name_the_field(tmp_path, capsys):
    bad = write_cfg(tmp_path, {"metrics": {"k": 150}})
    assert main(["synth", "--config", bad, "--out", str(tmp_path / "o")]) == 2
    assert "metrics.k" in capsys.readouterr().err
    unknown = write_cfg(tmp_path, {"modles": {}}, "u.yaml")
    assert main(["synth", "--config", unknown, "--out", str(tmp_path / "o")]) == 2
    assert "modles" in capsys.readouterr().err
    reserved = write_cfg(tmp_path, {"encoders": ["gap"]}, "r.yaml")
    assert main(["synth", "--config", reserved, "--out", str(tmp_path / "o")]) == 2
    assert "unsupported" in capsys.readouterr().err


def test_missing_prerequisite_is_a_data_error(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path / "empty")]) == 3
    assert "run `split` first" in capsys.readouterr().err


def test_seed_override_changes_hash():
    a = RunConfig.from_dict({})
    assert a.with_seed(5).hash != a.hash
    assert a.with_seed(None) is a
