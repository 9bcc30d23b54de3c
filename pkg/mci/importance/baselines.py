from __future__ import annotations

import math
from typing import List, Optional

import numpy as np

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter
from mci.core.logging import get_logger
from mci.importance.scores import BoundKind, ImportanceScores, PermutationPlan, ScoreMethod
from mci.importance.workers import run_ordered
from mci.valuation.base import Valuation
from mci.valuation.feature_set import ensure_within_cap

logger = get_logger(__name__)

SAMPLING_BLOCK = 1024


def shapley_weights(n: int) -> np.ndarray:
    """w(s) = s!(n-1-s)!/n! built by iterative products so large n never overflows."""
    if n == 0:
        return np.zeros(0)
    weights = np.empty(n)
    weights[0] = 1.0 / n
    for s in range(n - 1):
        weights[s + 1] = weights[s] * (s + 1) / (n - 1 - s)
    return weights


def shapley_exact(v: Valuation, *, cap: Optional[int] = None, workers: int = 1) -> ImportanceScores:
    """Exact Shapley value as the size-weighted sum of marginal contributions."""
    limit = get_settings().enumeration_cap if cap is None else cap
    ensure_within_cap(v.n, limit, what="Exact Shapley")
    before = v.evaluations
    table = v.materialize(limit)
    masks = np.arange(1 << v.n, dtype=np.int64)
    sizes = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    weights = shapley_weights(v.n)

    def score(feature: int) -> float:
        bit = 1 << feature
        base = masks[(masks & bit) == 0]
        gains = table[base | bit] - table[base]
        return math.fsum(weights[sizes[base]] * gains)

    scores = tuple(run_ordered(score, list(range(v.n)), workers))
    logger.info("shapley_exact_completed", extra={"event": "shapley_exact_completed", "n": v.n})
    return ImportanceScores(
        method=ScoreMethod.SHAPLEY_EXACT,
        scores=scores,
        bound_kind=BoundKind.EXACT,
        valuation_calls=v.evaluations - before,
    )


def _gain_block(v: Valuation, plan: PermutationPlan) -> List[List[float]]:
    gains: List[List[float]] = [[] for _ in range(v.n)]
    for perm in plan:
        prefix = 0
        for feature in perm:
            feature = int(feature)
            bit = 1 << feature
            gains[feature].append(v.value_mask(prefix | bit) - v.value_mask(prefix))
            prefix |= bit
    return gains


def shapley_sampled(v: Valuation, plan: PermutationPlan, *, workers: int = 1) -> ImportanceScores:
    """Permutation-sampling Shapley estimate; gains are summed with math.fsum in plan order."""
    if plan.n != v.n:
        raise InvalidParameter(f"Plan over {plan.n} features used with a valuation over {v.n}")
    if plan.count == 0 and v.n:
        raise InvalidParameter("Sampling needs at least one permutation")
    before = v.evaluations
    partials = run_ordered(lambda block: _gain_block(v, block), plan.blocks(SAMPLING_BLOCK), workers)
    scores = []
    for feature in range(v.n):
        gains = [gain for partial in partials for gain in partial[feature]]
        scores.append(math.fsum(gains) / plan.count)
    calls = v.evaluations - before
    logger.info(
        "shapley_sampled_completed",
        extra={"event": "shapley_sampled_completed", "n": v.n, "permutations": plan.count, "seed": plan.seed,
               "valuation_calls": calls},
    )
    return ImportanceScores(
        method=ScoreMethod.SHAPLEY_SAMPLED,
        scores=tuple(scores),
        bound_kind=BoundKind.EXACT,
        valuation_calls=calls,
        seed=None if plan.exhaustive else plan.seed,
        sample_count=plan.count,
    )


def ablation(v: Valuation) -> ImportanceScores:
    """v(F) - v(F - {f}); n + 1 evaluations."""
    before = v.evaluations
    full = v.full_mask
    total = v.value_mask(full)
    scores = tuple(total - v.value_mask(full & ~(1 << f)) for f in range(v.n))
    return ImportanceScores(
        method=ScoreMethod.ABLATION,
        scores=scores,
        bound_kind=BoundKind.EXACT,
        valuation_calls=v.evaluations - before,
    )


def bivariate(v: Valuation) -> ImportanceScores:
    """v({f}); n evaluations."""
    before = v.evaluations
    scores = tuple(v.value_mask(1 << f) for f in range(v.n))
    return ImportanceScores(
        method=ScoreMethod.BIVARIATE,
        scores=scores,
        bound_kind=BoundKind.EXACT,
        valuation_calls=v.evaluations - before,
    )
