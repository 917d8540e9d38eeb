from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from tabfp.correlation import correlated_groups
from tabfp.synthetic import make_synthetic
from tabfp.table import Dataset

ROOT = Path(__file__).resolve().parent.parent
ADULT_CSV = ROOT / "data" / "adult.csv"


@pytest.fixture(scope="session")
def synthetic() -> Dataset:
    return make_synthetic(5000, seed=0)


@pytest.fixture(scope="session")
def synthetic_groups(synthetic):
    return correlated_groups(synthetic, 0.4)


@pytest.fixture(scope="session")
def small_synthetic() -> Dataset:
    return make_synthetic(1000, seed=3)


def random_table(n: int, seed: int, numeric: int = 2, categorical: int = 2, levels: int = 4) -> Dataset:
    """Mixed table with integer-valued numeric columns, so exact ties are common."""
    rng = np.random.default_rng(seed)
    cols, kinds = {}, {}
    for j in range(numeric):
        cols[f"x{j}"] = rng.integers(0, 12, size=n).astype(float)
    for j in range(categorical):
        cols[f"c{j}"] = rng.choice(np.array([f"v{i}" for i in range(levels)], dtype=object), size=n)
        kinds[f"c{j}"] = "categorical"
    return Dataset.from_columns("id", [str(i) for i in range(n)], cols, kinds=kinds)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
