import numpy as np
import pandas as pd
import pytest

from lfurisk.frame import Column, Frame, Schema
from lfurisk.synth import GeneratorConfig, synthesize


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request, capsys):
    """Record and print one pass/fail line for an acceptance criterion, then assert it."""
    def check(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        request.config.stash[_VERDICTS].append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert ok, line
    return check


@pytest.fixture(scope="session")
def small():
    """A 4000-row synthetic register and its ground truth."""
    return synthesize(GeneratorConfig(n=4000), seed=3)


@pytest.fixture(scope="session")
def medium():
    return synthesize(GeneratorConfig(n=30000), seed=5)


def toy_schema(features=("A", "B"), numeric=()):
    cols = [Column("id", "id"), Column("month", "timestamp"), Column("y", "label")]
    cols += [Column(f, "categorical") for f in features]
    cols += [Column(f, "numeric") for f in numeric]
    return Schema(tuple(cols))


def toy_frame(y, months=None, **features):
    """Frame from label vector and keyword feature columns (str -> categorical, float -> numeric)."""
    n = len(y)
    cats = [k for k, v in features.items() if not np.issubdtype(np.asarray(v).dtype, np.number)]
    nums = [k for k in features if k not in cats]
    data = pd.DataFrame({"id": [f"r{i}" for i in range(n)],
                         "month": np.zeros(n, dtype=int) if months is None else months,
                         "y": np.asarray(y, dtype=int), **features})
    return Frame(toy_schema(cats, nums), data)
