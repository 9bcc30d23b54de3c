import itertools
import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from mci.core.config import get_settings  # noqa: E402
from mci.valuation.mutual_information import Dataset, mutual_information_valuation  # noqa: E402
from mci.valuation.table import TableValuation  # noqa: E402


def andor_rows():
    """All 8 fair-coin assignments of (f1, f2, f3) with y = f1 and (f2 or f3)."""
    rows = np.array(list(itertools.product([0, 1], repeat=3)), dtype=np.int64)
    target = rows[:, 0] & (rows[:, 1] | rows[:, 2])
    return rows, target


class TableFactory:
    """Random value tables; every table is normalized and non-negative."""

    def arbitrary(self, rng, n):
        values = rng.random(1 << n)
        values[0] = 0.0
        return TableValuation(values)

    def monotone(self, rng, n, tie_rate=0.3):
        # each subset adds a random (sometimes zero) gain on top of its best child
        values = np.zeros(1 << n)
        for mask in range(1, 1 << n):
            floor = max(values[mask & ~(1 << i)] for i in range(n) if mask >> i & 1)
            gain = 0.0 if rng.random() < tie_rate else rng.random()
            values[mask] = floor + gain
        return TableValuation(values)

    def submodular(self, rng, n, terms=3):
        # sum of concave functions of modular weights
        weights = rng.random((terms, n))
        scale = rng.random(terms) + 0.1
        values = np.zeros(1 << n)
        for mask in range(1 << n):
            members = [i for i in range(n) if mask >> i & 1]
            values[mask] = float(sum(scale[t] * np.sqrt(weights[t, members].sum()) for t in range(terms)))
        return TableValuation(values)

    def perturbed(self, rng, base, eta):
        table = np.array(base.materialize(base.n))
        noise = rng.uniform(-eta, eta, size=table.shape)
        noise[0] = 0.0
        return TableValuation(np.clip(table + noise, 0.0, None))


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, tmp_path):
    monkeypatch.setenv("MCI_CACHE_DIR", str(tmp_path / "cache"))
    get_settings.cache_clear()
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers = handlers
    root.setLevel(level)
    get_settings.cache_clear()


@pytest.fixture
def tables():
    return TableFactory()


@pytest.fixture
def andor_dataset():
    rows, target = andor_rows()
    return Dataset(features=rows, target=target, columns=("f1", "f2", "f3"), target_name="y")


@pytest.fixture
def andor(andor_dataset):
    return mutual_information_valuation(andor_dataset)


@pytest.fixture
def xor():
    # y = f1 xor f2 with fair coins: neither feature alone carries information
    return TableValuation(np.array([0.0, 0.0, 0.0, 1.0]))


@pytest.fixture
def andor_table_path(tmp_path, andor):
    from mci.valuation.table import dump_value_table

    return dump_value_table(andor, tmp_path / "andor.json")
