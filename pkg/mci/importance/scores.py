from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from mci.core.errors import InvalidParameter
from mci.valuation.feature_set import FeatureSet

_SEED_LIMIT = 1 << 64
EXHAUSTIVE_PLAN_LIMIT = 8


class ScoreMethod(str, Enum):
    MCI_EXACT = "mci-exact"
    MCI_K = "mci-k"
    MCI_BNB = "mci-bnb"
    MCI_SAMPLED = "mci-sampled"
    SHAPLEY_EXACT = "shapley-exact"
    SHAPLEY_SAMPLED = "shapley-sampled"
    ABLATION = "ablation"
    BIVARIATE = "bivariate"

    @property
    def sampled(self) -> bool:
        return self in {ScoreMethod.MCI_SAMPLED, ScoreMethod.SHAPLEY_SAMPLED}

    @classmethod
    def parse(cls, raw: str) -> "ScoreMethod":
        normalized = (raw or "").strip().lower()
        try:
            return cls(normalized)
        except ValueError as exc:
            raise InvalidParameter(
                f"Unknown method '{raw}'. Use one of {[m.value for m in cls]}"
            ) from exc


class BoundKind(str, Enum):
    EXACT = "exact"
    LOWER = "lower"
    INTERVAL = "interval"


def context_rank(value: float, mask: int) -> Tuple[float, int, int]:
    """Sort key for maximizing contexts: larger value, then fewer features, then smaller bitmask."""
    return (-value, mask.bit_count(), mask)


@dataclass(frozen=True)
class ImportanceScores:
    method: ScoreMethod
    scores: Tuple[float, ...]
    bound_kind: BoundKind = BoundKind.EXACT
    contexts: Optional[Tuple[Optional[FeatureSet], ...]] = None
    intervals: Optional[Tuple[Tuple[float, float], ...]] = None
    valuation_calls: int = 0
    seed: Optional[int] = None
    sample_count: Optional[int] = None

    def __post_init__(self) -> None:
        if not all(math.isfinite(score) for score in self.scores):
            raise InvalidParameter("Importance scores must be finite")
        if self.contexts is not None and len(self.contexts) != len(self.scores):
            raise InvalidParameter("One context per feature is required")
        if self.intervals is not None and len(self.intervals) != len(self.scores):
            raise InvalidParameter("One interval per feature is required")

    @property
    def n(self) -> int:
        return len(self.scores)

    def as_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {
            "method": self.method.value,
            "bound_kind": self.bound_kind.value,
            "scores": list(self.scores),
            "contexts": [None if ctx is None else ctx.key() for ctx in (self.contexts or (None,) * self.n)],
            "valuation_calls": self.valuation_calls,
        }
        if self.intervals is not None:
            payload["intervals"] = [[lo, hi] for lo, hi in self.intervals]
        if self.seed is not None:
            payload["seed"] = self.seed
        if self.sample_count is not None:
            payload["sample_count"] = self.sample_count
        return payload


def _nth_permutation(n: int, index: int) -> np.ndarray:
    # factorial number system; index 0 is the identity
    pool = list(range(n))
    out = []
    for position in range(n, 0, -1):
        radix = math.factorial(position - 1)
        digit, index = divmod(index, radix)
        out.append(pool.pop(digit))
    return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class PermutationPlan:
    """
    Seeded, index-addressable set of feature permutations.

    Permutation j comes from a Philox generator keyed by (seed, start + j), so any
    block of the plan can be generated independently and reproduces the same
    permutations as the full plan. Exhaustive plans enumerate all n! orders.
    """

    seed: int
    count: int
    n: int
    start: int = 0
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.seed < _SEED_LIMIT:
            raise InvalidParameter("Seed must be a 64-bit non-negative integer")
        if self.count < 0 or self.start < 0:
            raise InvalidParameter("Permutation count and start must be non-negative")
        if self.n < 0:
            raise InvalidParameter("Feature count must be non-negative")
        if self.exhaustive and self.start + self.count > math.factorial(self.n):
            raise InvalidParameter("Exhaustive plan range exceeds n!")

    @classmethod
    def all_permutations(cls, n: int) -> "PermutationPlan":
        if n > EXHAUSTIVE_PLAN_LIMIT:
            raise InvalidParameter(f"Exhaustive plans are limited to n <= {EXHAUSTIVE_PLAN_LIMIT}")
        return cls(seed=0, count=math.factorial(n), n=n, exhaustive=True)

    def permutation(self, j: int) -> np.ndarray:
        if not 0 <= j < self.count:
            raise IndexError(j)
        index = self.start + j
        if self.exhaustive:
            return _nth_permutation(self.n, index)
        key = (index << 64) | self.seed
        generator = np.random.Generator(np.random.Philox(key=key))
        return generator.permutation(self.n)

    def block(self, start: int, stop: int) -> "PermutationPlan":
        if not 0 <= start <= stop <= self.count:
            raise InvalidParameter("Block bounds must satisfy 0 <= start <= stop <= count")
        return PermutationPlan(
            seed=self.seed, count=stop - start, n=self.n, start=self.start + start, exhaustive=self.exhaustive
        )

    def blocks(self, size: int) -> List["PermutationPlan"]:
        return [self.block(lo, min(lo + size, self.count)) for lo in range(0, self.count, size)]

    def __iter__(self) -> Iterator[np.ndarray]:
        if self.exhaustive and self.start == 0 and self.count == math.factorial(self.n):
            for perm in itertools.permutations(range(self.n)):
                yield np.array(perm, dtype=np.int64)
            return
        for j in range(self.count):
            yield self.permutation(j)

    def __len__(self) -> int:
        return self.count


def contexts_from_masks(masks: Sequence[Optional[int]], n: int) -> Tuple[Optional[FeatureSet], ...]:
    return tuple(None if mask is None else FeatureSet(mask, n) for mask in masks)


def merge_sampled(first: ImportanceScores, second: ImportanceScores) -> ImportanceScores:
    """Combine two sampled runs over disjoint blocks of one plan."""
    if first.method != second.method or not first.method.sampled:
        raise InvalidParameter("Only runs of the same sampled method can be merged")
    if first.n != second.n:
        raise InvalidParameter("Cannot merge runs over different feature counts")
    count_a = first.sample_count or 0
    count_b = second.sample_count or 0
    seed = first.seed if first.seed == second.seed else None
    calls = first.valuation_calls + second.valuation_calls
    if first.method is ScoreMethod.MCI_SAMPLED:
        scores: List[float] = []
        masks: List[Optional[int]] = []
        for f in range(first.n):
            candidates = []
            for run in (first, second):
                ctx = run.contexts[f] if run.contexts else None
                if ctx is not None:
                    candidates.append((run.scores[f], ctx.bits))
            if candidates:
                best_value, best_mask = min(candidates, key=lambda item: context_rank(*item))
            else:
                best_value, best_mask = max(first.scores[f], second.scores[f]), None
            scores.append(best_value)
            masks.append(best_mask)
        return ImportanceScores(
            method=first.method,
            scores=tuple(scores),
            bound_kind=BoundKind.LOWER,
            contexts=contexts_from_masks(masks, first.n),
            valuation_calls=calls,
            seed=seed,
            sample_count=count_a + count_b,
        )
    total = count_a + count_b
    if total == 0:
        raise InvalidParameter("Cannot merge two empty sampled runs")
    merged = tuple(
        (a * count_a + b * count_b) / total for a, b in zip(first.scores, second.scores)
    )
    return ImportanceScores(
        method=first.method,
        scores=merged,
        bound_kind=BoundKind.EXACT,
        valuation_calls=calls,
        seed=seed,
        sample_count=total,
    )


__all__ = [
    "BoundKind",
    "ImportanceScores",
    "PermutationPlan",
    "ScoreMethod",
    "context_rank",
    "merge_sampled",
]
