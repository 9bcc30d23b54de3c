import itertools
import json
import math
import sys
import threading
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from mci.core.errors import (  # noqa: E402
    CapExceeded,
    EmptyDataset,
    InvalidParameter,
    InvalidTable,
    MissingEntry,
    NormalizationError,
    TooManyFeatures,
)
from mci.importance.workers import run_ordered  # noqa: E402
from mci.valuation import (  # noqa: E402
    Dataset,
    FeatureSet,
    TableValuation,
    Valuation,
    delta,
    duplicate_feature,
    dump_value_table,
    eliminate,
    load_csv_dataset,
    load_value_table,
    monotone_closure,
    mutual_information_valuation,
    scale_valuation,
    sum_valuations,
    value,
)


def h(p):
    return 0.0 if p in (0.0, 1.0) else -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def test_andor_mutual_information_matches_closed_form(andor):
    n = 3
    assert math.isclose(value(andor, FeatureSet.empty(n)), 0.0)
    assert math.isclose(value(andor, FeatureSet.of(n, [0])), h(3 / 8) - 0.5 * h(3 / 4), abs_tol=1e-9)
    assert math.isclose(value(andor, FeatureSet.of(n, [0])), 0.5488, abs_tol=1e-3)
    assert math.isclose(value(andor, FeatureSet.of(n, [1])), 0.0488, abs_tol=1e-3)
    assert math.isclose(value(andor, FeatureSet.of(n, [2])), value(andor, FeatureSet.of(n, [1])), abs_tol=1e-12)
    assert math.isclose(value(andor, FeatureSet.of(n, [0, 1])), h(3 / 8) - 0.25, abs_tol=1e-9)
    assert math.isclose(value(andor, FeatureSet.of(n, [1, 2])), h(3 / 8) - 0.75, abs_tol=1e-9)
    assert math.isclose(value(andor, FeatureSet.full(n)), h(3 / 8), abs_tol=1e-9)


def test_constant_target_gives_zero_everywhere():
    rows = np.array(list(itertools.product([0, 1], repeat=2)), dtype=np.int64)
    v = mutual_information_valuation(Dataset(features=rows, target=np.zeros(4, dtype=np.int64)))
    assert all(v.value_mask(mask) == 0.0 for mask in range(4))


def test_delta_is_zero_when_feature_already_present(andor):
    subset = FeatureSet.of(3, [0, 2])
    assert delta(andor, 0, subset) == 0.0
    assert math.isclose(
        delta(andor, 1, subset),
        andor.value(FeatureSet.full(3)) - andor.value(subset),
    )


def test_repeated_queries_are_memoized(andor):
    first = andor.value_mask(0b011)
    calls = andor.evaluations
    assert andor.value_mask(0b011) == first
    assert andor.evaluations == calls


def test_subset_from_other_feature_count_rejected(andor):
    with pytest.raises(InvalidParameter):
        andor.value(FeatureSet.empty(4))


def test_feature_set_keys():
    subset = FeatureSet.of(5, [3, 0, 2])
    assert subset.key() == "0,2,3"
    assert FeatureSet.empty(5).key() == ""
    assert FeatureSet.from_key("0,2,3", 5) == subset
    assert 2 in subset and 1 not in subset
    assert len(subset.with_feature(1)) == 4
    with pytest.raises(InvalidParameter):
        FeatureSet.from_key("0,7", 5)


def test_table_rejects_bad_vectors():
    with pytest.raises(InvalidTable):
        TableValuation(np.array([0.0, 1.0, 2.0]))
    with pytest.raises(NormalizationError):
        TableValuation(np.array([0.5, 1.0]))
    with pytest.raises(InvalidTable):
        TableValuation(np.array([0.0, -1.0]))


def test_missing_entry_raised_on_access():
    v = TableValuation.from_mapping(2, {0: 0.0, 1: 0.3, 3: 1.0})
    assert v.value_mask(1) == 0.3
    with pytest.raises(MissingEntry):
        v.value_mask(2)
    with pytest.raises(MissingEntry):
        v.materialize(2)


def test_value_table_dump_and_load(tmp_path, tables):
    v = tables.arbitrary(np.random.default_rng(3), 4)
    path = dump_value_table(v, tmp_path / "table.json")
    payload = json.loads(path.read_text())
    assert payload["n"] == 4 and payload["values"][""] == 0.0
    loaded = load_value_table(path)
    assert np.array_equal(loaded.materialize(), v.materialize())


@pytest.mark.parametrize(
    "values, error",
    [
        ({"0": 0.5, "1": 0.5, "0,1": 1.0}, NormalizationError),
        ({"": 0.2, "0": 0.5, "1": 0.5, "0,1": 1.0}, NormalizationError),
        ({"": 0.0, "0,5": 1.0}, InvalidTable),
        ({"": 0.0, "x": 1.0}, InvalidTable),
    ],
)
def test_load_value_table_errors(tmp_path, values, error):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "values": values}))
    with pytest.raises(error):
        load_value_table(path)


def test_load_value_table_refuses_above_cap(tmp_path):
    path = tmp_path / "big.json"
    path.write_text(json.dumps({"n": 30, "values": {"": 0.0}}))
    with pytest.raises(CapExceeded):
        load_value_table(path, cap=24)


def test_eliminate_reindexes_kept_features(tables):
    v = tables.arbitrary(np.random.default_rng(4), 4)
    restricted, mapping = eliminate(v, FeatureSet.of(4, [1]))
    assert mapping == {0: 0, 2: 1, 3: 2}
    assert restricted.n == 3
    for mask in range(1 << 3):
        original = 0
        for old, new in mapping.items():
            if mask >> new & 1:
                original |= 1 << old
        assert restricted.value_mask(mask) == v.value_mask(original)


def test_duplicate_collapses_copies(andor):
    dup = duplicate_feature(andor, 0, 2)
    assert dup.n == 5
    assert dup.copy_ids == (3, 4)
    assert dup.original_of(4) == 0 and dup.original_of(2) == 2
    assert dup.value_mask(0b01000) == andor.value_mask(0b001)
    assert dup.value_mask(0b11001) == andor.value_mask(0b001)
    assert dup.value_mask(0b10110) == andor.value_mask(0b111)
    assert duplicate_feature(andor, 0, 0).value_mask(0b101) == andor.value_mask(0b101)


def test_duplicate_respects_cap(andor):
    with pytest.raises(CapExceeded):
        duplicate_feature(andor, 0, 3, cap=5)
    with pytest.raises(InvalidParameter):
        duplicate_feature(andor, 3, 1)


def test_monotone_closure_is_smallest_majorant(tables):
    rng = np.random.default_rng(5)
    v = tables.arbitrary(rng, 5)
    closure = monotone_closure(v, cap=5).materialize(5)
    table = v.materialize(5)
    for mask in range(1 << 5):
        subsets = [s for s in range(1 << 5) if s & ~mask == 0]
        assert closure[mask] == max(table[s] for s in subsets)


def test_monotone_closure_keeps_monotone_table(tables):
    v = tables.monotone(np.random.default_rng(6), 4)
    assert np.array_equal(monotone_closure(v).materialize(), v.materialize())


def test_scale_and_sum(tables):
    rng = np.random.default_rng(7)
    a = tables.arbitrary(rng, 3)
    b = tables.arbitrary(rng, 3)
    assert np.allclose(scale_valuation(a, 2.5).materialize(), 2.5 * a.materialize())
    assert np.allclose(sum_valuations(a, b).materialize(), a.materialize() + b.materialize())
    with pytest.raises(InvalidParameter):
        scale_valuation(a, 0.0)
    with pytest.raises(InvalidParameter):
        sum_valuations(a, tables.arbitrary(rng, 2))


def test_csv_dataset_matches_in_memory_game(tmp_path, andor):
    rows = list(itertools.product([0, 1], repeat=3))
    lines = ["f1,f2,f3,y"] + [f"{a},{b},{c},{a & (b | c)}" for a, b, c in rows]
    path = tmp_path / "andor.csv"
    path.write_text("\n".join(lines) + "\n")
    dataset = load_csv_dataset(path)
    assert dataset.columns == ("f1", "f2", "f3") and dataset.target_name == "y"
    v = mutual_information_valuation(dataset)
    for mask in range(8):
        assert math.isclose(v.value_mask(mask), andor.value_mask(mask), abs_tol=1e-12)


def test_csv_numeric_columns_are_binned(tmp_path):
    rng = np.random.default_rng(8)
    x = rng.normal(size=200)
    y = (x > 0).astype(int)
    path = tmp_path / "numeric.csv"
    path.write_text("x,label\n" + "\n".join(f"{a},{b}" for a, b in zip(x, y)) + "\n")
    quantile = load_csv_dataset(path, target="label", bins=4, binning="quantile")
    width = load_csv_dataset(path, target="label", bins=4, binning="width")
    assert sorted(np.unique(quantile.features[:, 0])) == [0, 1, 2, 3]
    assert np.bincount(quantile.features[:, 0]).tolist() == [50, 50, 50, 50]
    assert width.features.max() <= 3
    v = mutual_information_valuation(quantile)
    assert 0.3 < v.value_mask(1) <= v.target_entropy + 1e-12


def test_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(EmptyDataset):
        load_csv_dataset(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text("a,b\n")
    with pytest.raises(EmptyDataset):
        load_csv_dataset(header_only)
    data = tmp_path / "data.csv"
    data.write_text("a,b\n1,0\n")
    with pytest.raises(InvalidParameter):
        load_csv_dataset(data, target="missing")


def test_too_many_features_for_cap():
    rows = np.zeros((4, 6), dtype=np.int64)
    with pytest.raises(TooManyFeatures):
        mutual_information_valuation(Dataset(features=rows, target=np.array([0, 1, 0, 1])), max_features=5)


def test_quantile_binning_keeps_tied_values_together(tmp_path):
    # 60 rows tied at 0.0 with a balanced label, 9 distinct positive rows all labelled 1
    x = np.concatenate([np.zeros(60), np.arange(1, 10) / 10.0])
    y = np.concatenate([np.tile([0, 1], 30), np.ones(9, dtype=int)])
    expected = h(30 / 69) - 60 / 69

    rng = np.random.default_rng(9)
    for trial in range(5):
        order = np.arange(69) if trial == 0 else rng.permutation(69)
        path = tmp_path / f"ties-{trial}.csv"
        path.write_text("x,label\n" + "\n".join(f"{x[i]},{y[i]}" for i in order) + "\n")
        dataset = load_csv_dataset(path, target="label", bins=8, binning="quantile")
        codes = dataset.features[:, 0]
        assert len(set(codes[x[order] == 0.0].tolist())) == 1
        v = mutual_information_valuation(dataset)
        assert math.isclose(v.value_mask(1), expected, abs_tol=1e-9)


def _submasks(mask):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def test_eliminating_all_copies_restores_the_original(tables):
    rng = np.random.default_rng(10)
    for n in range(1, 11):
        v = tables.arbitrary(rng, n)
        feature = int(rng.integers(0, n))
        copies = int(rng.integers(1, 4))
        dup = duplicate_feature(v, feature, copies)
        restored, mapping = eliminate(dup, FeatureSet.of(dup.n, dup.copy_ids))
        assert mapping == {i: i for i in range(n)}
        assert np.array_equal(restored.materialize(), v.materialize())
        for mask in range(1 << n):
            assert restored.value_mask(mask) == v.value_mask(mask)


def test_eliminate_agrees_on_every_kept_subset(tables):
    rng = np.random.default_rng(11)
    for n in (2, 5, 8, 12):
        v = tables.arbitrary(rng, n)
        removed = [i for i in range(n) if rng.random() < 0.4]
        restricted, mapping = eliminate(v, FeatureSet.of(n, removed))
        assert restricted.n == n - len(removed)
        table = v.materialize(n)
        for mask in range(1 << restricted.n):
            original = 0
            for old, new in mapping.items():
                if mask >> new & 1:
                    original |= 1 << old
            assert restricted.value_mask(mask) == table[original]


def test_monotone_closure_matches_brute_force_and_is_idempotent(tables):
    rng = np.random.default_rng(12)
    for n in range(1, 11):
        v = tables.arbitrary(rng, n)
        table = v.materialize(n)
        closure = monotone_closure(v, cap=n)
        closed = closure.materialize(n)
        for mask in range(1 << n):
            assert closed[mask] == max(table[s] for s in _submasks(mask))
        assert np.array_equal(monotone_closure(closure, cap=n).materialize(n), closed)


class CountingValuation(Valuation):
    """Modular game that records how often each subset reaches `_evaluate`."""

    kind = "counting"

    def __init__(self, n):
        super().__init__(n)
        self.calls = Counter()
        self._calls_lock = threading.Lock()

    def _evaluate(self, mask):
        with self._calls_lock:
            self.calls[mask] += 1
        time.sleep(0.001)
        return float(bin(mask).count("1"))


def test_memo_is_shared_across_worker_threads():
    v = CountingValuation(5)
    masks = [mask for mask in range(1 << 5) for _ in range(4)]
    values = run_ordered(v.value_mask, masks, workers=8)
    assert values == [float(bin(mask).count("1")) for mask in masks]
    assert v.evaluations == 1 << 5
    # later readers replay the memo
    before = sum(v.calls.values())
    assert run_ordered(v.value_mask, masks, workers=8) == values
    assert sum(v.calls.values()) == before
