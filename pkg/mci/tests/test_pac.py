import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from mci.core.errors import CapExceeded, InvalidParameter  # noqa: E402
from mci.pac import PacParameters, mci_stability_check, sample_size, valuation_deviation_bound  # noqa: E402
from mci.valuation import TableValuation  # noqa: E402


def params(epsilon=0.1, delta=0.05, hypothesis_count=1000, feature_count=10):
    return PacParameters.build(
        epsilon=epsilon, delta=delta, hypothesis_count=hypothesis_count, feature_count=feature_count
    )


def test_reference_sample_sizes():
    assert sample_size(params()) == 5058
    assert sample_size(params(hypothesis_count=2000)) == 5258


def test_doubling_hypotheses_adds_one_log_term():
    step = sample_size(params(hypothesis_count=4000)) - sample_size(params(hypothesis_count=2000))
    assert step == 200
    # 2 / 0.3^2 = 22.2...
    wide = sample_size(params(epsilon=0.3, hypothesis_count=4000))
    step = wide - sample_size(params(epsilon=0.3, hypothesis_count=2000))
    assert step in (22, 23)


def test_halving_epsilon_roughly_quadruples():
    base = sample_size(params())
    halved = sample_size(params(epsilon=0.05))
    assert abs(halved - 4 * base) <= 4


def test_sample_size_is_monotone():
    assert sample_size(params(epsilon=0.2)) <= sample_size(params(epsilon=0.1))
    assert sample_size(params(delta=0.1)) <= sample_size(params(delta=0.05))
    assert sample_size(params(hypothesis_count=10)) <= sample_size(params(hypothesis_count=11))
    assert sample_size(params(feature_count=3)) <= sample_size(params(feature_count=4))


@pytest.mark.parametrize(
    "overrides",
    [
        {"epsilon": 0.0},
        {"epsilon": 1.5},
        {"delta": 0.0},
        {"delta": 1.0},
        {"hypothesis_count": 0},
        {"feature_count": 0},
        {"feature_count": 2.5},
    ],
)
def test_invalid_parameters(overrides):
    with pytest.raises(InvalidParameter):
        params(**overrides)


def test_deviation_bound(tables):
    rng = np.random.default_rng(61)
    v = tables.arbitrary(rng, 5)
    assert valuation_deviation_bound(v, v) == 0.0

    shifted = v.materialize().copy()
    shifted[1:] += 0.25
    assert valuation_deviation_bound(TableValuation(shifted), v) == pytest.approx(0.25)

    other = tables.arbitrary(rng, 5)
    brute = max(abs(other.value_mask(m) - v.value_mask(m)) for m in range(32))
    assert valuation_deviation_bound(other, v) == brute


def test_deviation_bound_errors(tables):
    rng = np.random.default_rng(62)
    with pytest.raises(InvalidParameter):
        valuation_deviation_bound(tables.arbitrary(rng, 3), tables.arbitrary(rng, 4))
    with pytest.raises(CapExceeded):
        valuation_deviation_bound(tables.arbitrary(rng, 6), tables.arbitrary(rng, 6), cap=5)


def test_stability_holds_on_random_pairs(tables):
    rng = np.random.default_rng(63)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        v = tables.arbitrary(rng, n)
        estimated = tables.perturbed(rng, v, float(rng.uniform(0.0, 0.3)))
        report = mci_stability_check(estimated, v)
        assert report.holds, report.as_dict()


def test_stability_identical_and_concentrated(tables):
    rng = np.random.default_rng(64)
    v = tables.monotone(rng, 6)
    same = mci_stability_check(v, v)
    assert same.max_score_gap == 0.0 and same.bound == 0.0 and same.holds

    # all the error piled on one subset
    spiked = v.materialize().copy()
    spiked[0b101101] += 2.0
    report = mci_stability_check(TableValuation(spiked), v)
    assert report.deviation == pytest.approx(2.0)
    assert report.max_score_gap <= report.bound
    assert report.holds
