from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter
from mci.core.logging import get_logger
from mci.importance.scores import (
    BoundKind,
    ImportanceScores,
    PermutationPlan,
    ScoreMethod,
    context_rank,
    contexts_from_masks,
)
from mci.importance.workers import run_ordered
from mci.valuation.base import Valuation
from mci.valuation.diagnostics import (
    monotonicity_violation,
    require_monotone,
    soft_k_size_submodularity_violation,
)
from mci.valuation.feature_set import ensure_within_cap

logger = get_logger(__name__)

SAMPLING_BLOCK = 1024


def _popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def mci_exact(v: Valuation, *, cap: Optional[int] = None, workers: int = 1) -> ImportanceScores:
    """
    Exact MCI: for every f, the max over S inside F - {f} of v(S + f) - v(S).

    The maximizing context is the smallest such S, ties broken by the smaller bitmask.
    """
    limit = get_settings().enumeration_cap if cap is None else cap
    ensure_within_cap(v.n, limit, what="Exact MCI")
    before = v.evaluations
    table = v.materialize(limit)
    masks = np.arange(1 << v.n, dtype=np.int64)
    counts = _popcounts(v.n)

    def score(feature: int) -> Tuple[float, int]:
        bit = 1 << feature
        base = masks[(masks & bit) == 0]
        gains = table[base | bit] - table[base]
        best = gains.max()
        winners = base[gains == best]
        sizes = counts[winners]
        return float(best), int(winners[sizes == sizes.min()].min())

    results = run_ordered(score, list(range(v.n)), workers)
    scores = ImportanceScores(
        method=ScoreMethod.MCI_EXACT,
        scores=tuple(value for value, _ in results),
        bound_kind=BoundKind.EXACT,
        contexts=contexts_from_masks([mask for _, mask in results], v.n),
        valuation_calls=v.evaluations - before,
    )
    logger.info("mci_exact_completed", extra={"event": "mci_exact_completed", "n": v.n})
    return scores


def _certify_k(v: Valuation, k: int, soft_cap: int) -> bool:
    if v.n > soft_cap:
        return False
    table = v.materialize(v.n)
    tolerance = get_settings().monotone_tolerance
    if monotonicity_violation(table, v.n, tolerance) is not None:
        return False
    return soft_k_size_submodularity_violation(table, v.n, k, tolerance) is None


def mci_k_bounded(
    v: Valuation,
    k: int,
    *,
    certify: bool = True,
    soft_cap: Optional[int] = None,
    workers: int = 1,
) -> ImportanceScores:
    """
    Max of v(S + f) - v(S) over contexts with |S| <= k, O(n^(k+1)) evaluations.

    The result is exact when k covers every context or when v is certified monotone
    and soft k-size submodular (n <= soft_cap); otherwise it is a lower bound.
    Certification is skipped for expensive valuations, which keeps them at O(n^(k+1)) calls.
    """
    if not 0 <= k <= v.n:
        raise InvalidParameter(f"k must lie in 0..{v.n}", context={"k": k, "n": v.n})
    before = v.evaluations

    def score(feature: int) -> Tuple[float, int]:
        bit = 1 << feature
        others = [i for i in range(v.n) if i != feature]
        best: Optional[Tuple[float, int]] = None
        for size in range(min(k, len(others)) + 1):
            for combo in itertools.combinations(others, size):
                mask = 0
                for index in combo:
                    mask |= 1 << index
                gain = v.value_mask(mask | bit) - v.value_mask(mask)
                if best is None or context_rank(gain, mask) < context_rank(*best):
                    best = (gain, mask)
        assert best is not None
        return best

    results = run_ordered(score, list(range(v.n)), workers)

    if k >= v.n - 1:
        bound = BoundKind.EXACT
    elif certify and v.expensive:
        logger.info(
            "k_certification_skipped",
            extra={"event": "k_certification_skipped", "n": v.n, "k": k, "kind": v.kind},
        )
        bound = BoundKind.LOWER
    elif certify:
        limit = get_settings().soft_check_cap if soft_cap is None else soft_cap
        bound = BoundKind.EXACT if _certify_k(v, k, limit) else BoundKind.LOWER
    else:
        bound = BoundKind.LOWER
    # certification reads the whole lattice; its evaluations are reported too
    calls = v.evaluations - before
    logger.info(
        "mci_k_completed",
        extra={"event": "mci_k_completed", "n": v.n, "k": k, "bound_kind": bound.value, "valuation_calls": calls},
    )
    return ImportanceScores(
        method=ScoreMethod.MCI_K,
        scores=tuple(value for value, _ in results),
        bound_kind=bound,
        contexts=contexts_from_masks([mask for _, mask in results], v.n),
        valuation_calls=calls,
    )


@dataclass
class _LayerSearch:
    """Branch-and-bound state for one feature over the subsets of F - {f}."""

    valuation: Valuation
    feature: int
    others: List[int]
    best: Optional[Tuple[float, int]] = None
    max_with: Dict[int, float] = field(default_factory=dict)
    min_without: Dict[int, float] = field(default_factory=dict)

    def evaluate_layer(self, size: int) -> None:
        bit = 1 << self.feature
        top = None
        bottom = None
        for combo in itertools.combinations(self.others, size):
            mask = 0
            for index in combo:
                mask |= 1 << index
            with_f = self.valuation.value_mask(mask | bit)
            without = self.valuation.value_mask(mask)
            gain = with_f - without
            if self.best is None or context_rank(gain, mask) < context_rank(*self.best):
                self.best = (gain, mask)
            top = with_f if top is None else max(top, with_f)
            bottom = without if bottom is None else min(bottom, without)
        self.max_with[size] = top if top is not None else float("-inf")
        self.min_without[size] = bottom if bottom is not None else float("inf")

    def run(self, tolerance: float) -> Tuple[float, int, float, float, int]:
        small, large = 0, len(self.others)
        self.evaluate_layer(small)
        if large > small:
            self.evaluate_layer(large)
        rounds = 0
        grow_small = True
        while True:
            assert self.best is not None
            low = self.best[0]
            if small + 1 >= large:
                high = low
                break
            # sizes small+1..large-1 are unseen; each sits between a layer-`small` subset and a layer-`large` superset
            high = max(low, self.max_with[large] - self.min_without[small])
            if high - low <= tolerance:
                break
            if grow_small:
                small += 1
                self.evaluate_layer(small)
            else:
                large -= 1
                self.evaluate_layer(large)
            grow_small = not grow_small
            rounds += 1
        return low, self.best[1], low, high, rounds


def mci_branch_and_bound(
    v: Valuation,
    tolerance: float = 0.0,
    *,
    assume_monotone: bool = False,
    cap: Optional[int] = None,
    workers: int = 1,
) -> ImportanceScores:
    """
    Bracket MCI by evaluating subset layers from both ends.

    With k the deepest small layer and K the shallowest large layer, the lower bound is
    the best gain seen and the upper bound adds max v(S + f) over layer K minus
    min v(T) over layer k. Layers alternate inwards until the gap is within tolerance
    or the layers meet. Requires a monotone valuation.
    """
    if tolerance < 0:
        raise InvalidParameter("Tolerance must be non-negative")
    limit = get_settings().enumeration_cap if cap is None else cap
    ensure_within_cap(v.n, limit, what="Branch-and-bound MCI")
    before = v.evaluations
    if not assume_monotone:
        require_monotone(v, cap=limit)

    def score(feature: int) -> Tuple[float, int, float, float, int]:
        others = [i for i in range(v.n) if i != feature]
        return _LayerSearch(v, feature, others).run(tolerance)

    results = run_ordered(score, list(range(v.n)), workers)
    intervals = tuple((lo, hi) for _, _, lo, hi, _ in results)
    bound = BoundKind.EXACT if all(lo == hi for lo, hi in intervals) else BoundKind.INTERVAL
    calls = v.evaluations - before
    logger.info(
        "mci_bnb_converged",
        extra={"event": "mci_bnb_converged", "n": v.n, "tolerance": tolerance, "bound_kind": bound.value,
               "rounds": [r[4] for r in results], "valuation_calls": calls},
    )
    return ImportanceScores(
        method=ScoreMethod.MCI_BNB,
        scores=tuple(value for value, _, _, _, _ in results),
        bound_kind=bound,
        contexts=contexts_from_masks([mask for _, mask, _, _, _ in results], v.n),
        intervals=intervals,
        valuation_calls=calls,
    )


def _sample_block(v: Valuation, plan: PermutationPlan) -> List[Optional[Tuple[float, int]]]:
    best: List[Optional[Tuple[float, int]]] = [None] * v.n
    for perm in plan:
        prefix = 0
        for feature in perm:
            feature = int(feature)
            bit = 1 << feature
            gain = v.value_mask(prefix | bit) - v.value_mask(prefix)
            current = best[feature]
            if current is None or context_rank(gain, prefix) < context_rank(*current):
                best[feature] = (gain, prefix)
            prefix |= bit
    return best


def mci_sampled(v: Valuation, plan: PermutationPlan, *, workers: int = 1) -> ImportanceScores:
    """
    Lower bound on MCI: the best gain of each feature over the prefixes preceding it
    in the plan's permutations. Blocks are fixed-size and reduced in index order,
    so the result does not depend on the worker count.
    """
    if plan.n != v.n:
        raise InvalidParameter(f"Plan over {plan.n} features used with a valuation over {v.n}")
    if plan.count == 0 and v.n:
        raise InvalidParameter("Sampling needs at least one permutation")
    before = v.evaluations
    partials = run_ordered(lambda block: _sample_block(v, block), plan.blocks(SAMPLING_BLOCK), workers)
    best: List[Optional[Tuple[float, int]]] = [None] * v.n
    for partial in partials:
        for feature, candidate in enumerate(partial):
            if candidate is None:
                continue
            current = best[feature]
            if current is None or context_rank(*candidate) < context_rank(*current):
                best[feature] = candidate
    calls = v.evaluations - before
    logger.info(
        "mci_sampled_completed",
        extra={"event": "mci_sampled_completed", "n": v.n, "permutations": plan.count, "seed": plan.seed,
               "valuation_calls": calls},
    )
    return ImportanceScores(
        method=ScoreMethod.MCI_SAMPLED,
        scores=tuple(0.0 if item is None else item[0] for item in best),
        bound_kind=BoundKind.LOWER,
        contexts=contexts_from_masks([None if item is None else item[1] for item in best], v.n),
        valuation_calls=calls,
        seed=None if plan.exhaustive else plan.seed,
        sample_count=plan.count,
    )
