from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from mci.core.config import HARD_FEATURE_CAP, get_settings
from mci.core.errors import InvalidParameter
from mci.valuation.feature_set import FeatureSet, ensure_within_cap


class Valuation(ABC):
    """
    Memoized evaluation function over subsets of n features.

    Subclasses implement `_evaluate(mask)`; the base class owns the cache so
    repeated queries of one subset replay the first computed float bit-exactly
    and concurrent readers never evaluate a subset twice for the same result.
    """

    kind = "abstract"
    # evaluations cost real work; optional whole-lattice scans are skipped
    expensive = False

    def __init__(self, n: int) -> None:
        if not 0 <= n <= HARD_FEATURE_CAP:
            raise InvalidParameter(f"Feature count {n} outside 0..{HARD_FEATURE_CAP}")
        self.n = n
        self._memo: Dict[int, float] = {}
        self._lock = threading.Lock()
        self._table: Optional[np.ndarray] = None

    @abstractmethod
    def _evaluate(self, mask: int) -> float:
        """Compute the value of one subset (cache miss path)."""

    def _materialize(self) -> np.ndarray:
        size = 1 << self.n
        return np.fromiter((self.value_mask(mask) for mask in range(size)), dtype=np.float64, count=size)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def evaluations(self) -> int:
        """Distinct subsets evaluated so far."""
        if self._table is not None:
            return 1 << self.n
        with self._lock:
            return len(self._memo)

    def value_mask(self, mask: int) -> float:
        table = self._table
        if table is not None:
            return float(table[mask])
        with self._lock:
            cached = self._memo.get(mask)
        if cached is not None:
            return cached
        value = float(self._evaluate(mask))
        with self._lock:
            return self._memo.setdefault(mask, value)

    def value(self, subset: FeatureSet) -> float:
        self._check_subset(subset)
        return self.value_mask(subset.bits)

    def delta_mask(self, feature: int, mask: int) -> float:
        bit = 1 << feature
        if mask & bit:
            return 0.0
        return self.value_mask(mask | bit) - self.value_mask(mask)

    def delta(self, feature: int, subset: FeatureSet) -> float:
        if not 0 <= feature < self.n:
            raise InvalidParameter(f"Feature id {feature} outside 0..{self.n - 1}")
        self._check_subset(subset)
        return self.delta_mask(feature, subset.bits)

    def materialize(self, cap: Optional[int] = None) -> np.ndarray:
        """Return the read-only vector of all 2^n values indexed by bitmask."""
        limit = get_settings().enumeration_cap if cap is None else cap
        ensure_within_cap(self.n, limit, what=f"Materializing a {self.kind} valuation")
        if self._table is None:
            table = np.asarray(self._materialize(), dtype=np.float64)
            table.setflags(write=False)
            with self._lock:
                if self._table is None:
                    self._table = table
        return self._table

    def _check_subset(self, subset: FeatureSet) -> None:
        if subset.n != self.n:
            raise InvalidParameter(
                f"Subset over {subset.n} features queried on a valuation over {self.n}",
                context={"subset_n": subset.n, "valuation_n": self.n},
            )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


def value(v: Valuation, subset: FeatureSet) -> float:
    """Return v(S); 0 for the empty set, cached for every kind."""
    return v.value(subset)


def delta(v: Valuation, feature: int, subset: FeatureSet) -> float:
    """Return v(S + {f}) - v(S); exactly 0 when f is already in S."""
    return v.delta(feature, subset)
