import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from mci.core.errors import CapExceeded  # noqa: E402
from mci.importance import BoundKind, ablation, bivariate, mci_exact, shapley_exact  # noqa: E402
from mci.valuation import (  # noqa: E402
    FeatureSet,
    TableValuation,
    duplicate_feature,
    eliminate,
    scale_valuation,
    sum_valuations,
)

TOL = 1e-9


def brute_force_mci(table, n):
    """Plain max over every context, smallest context first on ties."""
    scores, contexts = [], []
    for f in range(n):
        best = None
        for mask in range(1 << n):
            if mask >> f & 1:
                continue
            gain = table[mask | (1 << f)] - table[mask]
            key = (-gain, bin(mask).count("1"), mask)
            if best is None or key < best[0]:
                best = (key, gain, mask)
        scores.append(best[1])
        contexts.append(best[2])
    return scores, contexts


def test_andor_scores_and_contexts(andor):
    result = mci_exact(andor)
    assert result.bound_kind is BoundKind.EXACT
    assert result.scores == pytest.approx([0.75, 0.25, 0.25], abs=1e-3)
    assert [ctx.key() for ctx in result.contexts] == ["1,2", "0,2", "0,1"]
    assert result.valuation_calls == 8


def test_xor_scores(xor):
    result = mci_exact(xor)
    assert result.scores == (1.0, 1.0)
    assert [ctx.key() for ctx in result.contexts] == ["1", "0"]


def test_matches_brute_force_on_random_tables(tables):
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(3, 11))
        v = tables.arbitrary(rng, n)
        result = mci_exact(v)
        scores, contexts = brute_force_mci(v.materialize(), n)
        assert list(result.scores) == scores
        assert [ctx.bits for ctx in result.contexts] == contexts


def test_workers_do_not_change_result(tables):
    serial = mci_exact(tables.arbitrary(np.random.default_rng(12), 8), workers=1)
    threaded = mci_exact(tables.arbitrary(np.random.default_rng(12), 8), workers=4)
    assert serial == threaded


def test_cap_is_enforced(tables):
    v = tables.arbitrary(np.random.default_rng(13), 6)
    with pytest.raises(CapExceeded):
        mci_exact(v, cap=5)


def _dummy_extension(v):
    """Add feature n that never changes the value."""
    table = v.materialize()
    full = v.full_mask
    return TableValuation(np.array([table[mask & full] for mask in range(1 << (v.n + 1))]))


def test_axioms_on_monotone_tables(tables):
    rng = np.random.default_rng(14)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        v = tables.monotone(rng, n)
        table = v.materialize()
        scores = mci_exact(v).scores
        full = v.full_mask

        # marginal contribution: at least the ablation gain
        for f in range(n):
            assert scores[f] >= table[full] - table[full & ~(1 << f)] - TOL

        # elimination can only decrease importance
        removed = int(rng.integers(0, 1 << n)) & ~1
        restricted, mapping = eliminate(v, FeatureSet(removed, n))
        if restricted.n:
            reduced = mci_exact(restricted).scores
            for old, new in mapping.items():
                assert reduced[new] <= scores[old] + TOL

        # dummy
        assert mci_exact(_dummy_extension(v)).scores[n] == 0.0

        # super-efficiency for every subset
        for mask in range(1 << n):
            assert table[mask] <= sum(scores[f] for f in range(n) if mask >> f & 1) + TOL

        # self-contribution and dominance
        shap = shapley_exact(v).scores
        abl = ablation(v).scores
        biv = bivariate(v).scores
        for f in range(n):
            assert scores[f] >= biv[f] - TOL
            assert scores[f] >= shap[f] - TOL
            assert scores[f] >= abl[f] - TOL

        # scaling
        factor = float(rng.uniform(0.1, 10.0))
        scaled = mci_exact(scale_valuation(v, factor)).scores
        assert scaled == pytest.approx([factor * s for s in scores], abs=TOL * factor)

        # sub-additivity
        w = tables.monotone(rng, n)
        combined = mci_exact(sum_valuations(v, w)).scores
        other = mci_exact(w).scores
        for f in range(n):
            assert combined[f] <= scores[f] + other[f] + TOL


def test_duplication_invariance_and_symmetry(tables):
    rng = np.random.default_rng(15)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        v = tables.monotone(rng, n)
        scores = mci_exact(v).scores
        feature = int(rng.integers(0, n))
        copies = int(rng.integers(1, 4))
        dup = mci_exact(duplicate_feature(v, feature, copies)).scores
        assert dup[:n] == pytest.approx(scores, abs=1e-12)
        for copy in range(n, n + copies):
            assert math.isclose(dup[copy], scores[feature], abs_tol=1e-12)


def test_symmetric_features_share_a_score():
    rng = np.random.default_rng(16)
    for _ in range(50):
        n = 5
        by_size = np.cumsum(np.concatenate([[0.0], rng.random(n)]))
        weights = rng.random(n)
        weights[3] = weights[1]
        values = [by_size[bin(m).count("1")] + sum(weights[i] for i in range(n) if m >> i & 1) for m in range(1 << n)]
        scores = mci_exact(TableValuation(np.array(values))).scores
        assert math.isclose(scores[1], scores[3], abs_tol=TOL)


def test_dominated_feature_scores_lower():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = 5
        # symmetric concave part plus a modular part: f_i never beats f_j when w_i <= w_j
        by_size = np.concatenate([[0.0], np.cumsum(np.sort(rng.random(n))[::-1])])
        weights = rng.random(n)
        values = [by_size[bin(m).count("1")] + sum(weights[i] for i in range(n) if m >> i & 1) for m in range(1 << n)]
        scores = mci_exact(TableValuation(np.array(values))).scores
        for i in range(n):
            for j in range(n):
                if weights[i] <= weights[j]:
                    assert scores[i] <= scores[j] + TOL
