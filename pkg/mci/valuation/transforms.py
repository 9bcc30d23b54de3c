from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from mci.core.errors import InvalidParameter
from mci.core.logging import get_logger
from mci.valuation.base import Valuation
from mci.valuation.feature_set import FeatureSet, ensure_within_cap
from mci.valuation.table import TableValuation

logger = get_logger(__name__)


def _cheap(v: Valuation) -> bool:
    """True when the full value vector is available without new evaluations."""
    return isinstance(v, TableValuation) or v._table is not None or getattr(v, "vectorizable", False)


class DerivedValuation(Valuation):
    """A valuation whose values are looked up in a parent valuation."""

    def __init__(self, parent: Valuation, n: int) -> None:
        super().__init__(n)
        self.parent = parent

    @property
    def vectorizable(self) -> bool:
        return _cheap(self.parent)

    @property
    def expensive(self) -> bool:  # type: ignore[override]
        return self.parent.expensive

    def _parent_mask(self, mask: int) -> int:
        raise NotImplementedError

    def _parent_masks(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _evaluate(self, mask: int) -> float:
        return self.parent.value_mask(self._parent_mask(mask))

    def _materialize(self) -> np.ndarray:
        if not self.vectorizable:
            return super()._materialize()
        masks = np.arange(1 << self.n, dtype=np.int64)
        return self.parent.materialize(self.parent.n)[self._parent_masks(masks)]


class EliminatedValuation(DerivedValuation):
    """Restriction of a valuation to F minus T, with the kept ids re-indexed densely."""

    kind = "eliminated"

    def __init__(self, parent: Valuation, removed: int) -> None:
        self.kept: Tuple[int, ...] = tuple(i for i in range(parent.n) if not removed >> i & 1)
        super().__init__(parent, len(self.kept))
        self.removed = removed

    @property
    def mapping(self) -> Dict[int, int]:
        return {old: new for new, old in enumerate(self.kept)}

    def _parent_mask(self, mask: int) -> int:
        out = 0
        for new, old in enumerate(self.kept):
            if mask >> new & 1:
                out |= 1 << old
        return out

    def _parent_masks(self, masks: np.ndarray) -> np.ndarray:
        out = np.zeros_like(masks)
        for new, old in enumerate(self.kept):
            out |= ((masks >> new) & 1) << old
        return out


class DuplicatedValuation(DerivedValuation):
    """Extension by `copies` informationally identical copies of one feature (ids n..n+copies-1)."""

    kind = "duplicated"

    def __init__(self, parent: Valuation, feature: int, copies: int) -> None:
        super().__init__(parent, parent.n + copies)
        self.feature = feature
        self.copies = copies
        self.copy_ids: Tuple[int, ...] = tuple(range(parent.n, parent.n + copies))

    def original_of(self, feature: int) -> int:
        return self.feature if feature in self.copy_ids else feature

    def _parent_mask(self, mask: int) -> int:
        low = mask & self.parent.full_mask
        if mask >> self.parent.n:
            low |= 1 << self.feature
        return low

    def _parent_masks(self, masks: np.ndarray) -> np.ndarray:
        low = masks & self.parent.full_mask
        has_copy = (masks >> self.parent.n) != 0
        return np.where(has_copy, low | (1 << self.feature), low)


class ScaledValuation(DerivedValuation):
    kind = "scaled"

    def __init__(self, parent: Valuation, factor: float) -> None:
        super().__init__(parent, parent.n)
        self.factor = factor

    def _evaluate(self, mask: int) -> float:
        return self.factor * self.parent.value_mask(mask)

    def _materialize(self) -> np.ndarray:
        if not self.vectorizable:
            return Valuation._materialize(self)
        return self.factor * self.parent.materialize(self.parent.n)


class SumValuation(Valuation):
    kind = "sum"

    def __init__(self, left: Valuation, right: Valuation) -> None:
        super().__init__(left.n)
        self.left = left
        self.right = right

    @property
    def vectorizable(self) -> bool:
        return _cheap(self.left) and _cheap(self.right)

    @property
    def expensive(self) -> bool:  # type: ignore[override]
        return self.left.expensive or self.right.expensive

    def _evaluate(self, mask: int) -> float:
        return self.left.value_mask(mask) + self.right.value_mask(mask)

    def _materialize(self) -> np.ndarray:
        if not self.vectorizable:
            return super()._materialize()
        return self.left.materialize(self.n) + self.right.materialize(self.n)


def eliminate(v: Valuation, removed: FeatureSet) -> Tuple[EliminatedValuation, Dict[int, int]]:
    """Restrict v to the features outside `removed`; returns the valuation and the old->new id map."""
    if removed.n != v.n:
        raise InvalidParameter(f"Elimination set over {removed.n} features applied to a valuation over {v.n}")
    eliminated = EliminatedValuation(v, removed.bits)
    return eliminated, eliminated.mapping


def duplicate_feature(v: Valuation, feature: int, copies: int, *, cap: Optional[int] = None) -> DuplicatedValuation:
    """Append `copies` ids that behave exactly as `feature` (collapse semantics, no table is built)."""
    if not 0 <= feature < v.n:
        raise InvalidParameter(f"Feature id {feature} outside 0..{v.n - 1}")
    if copies < 0:
        raise InvalidParameter("Copy count must be non-negative")
    if cap is not None:
        ensure_within_cap(v.n + copies, cap, what="Duplicating a feature for exact scoring")
    logger.debug("feature_duplicated", extra={"event": "feature_duplicated", "feature": feature, "copies": copies})
    return DuplicatedValuation(v, feature, copies)


def monotone_closure(v: Valuation, *, cap: Optional[int] = None) -> TableValuation:
    """Smallest monotone majorant: max over T subset of S of v(T), by subset-lattice DP in O(n 2^n)."""
    if cap is not None:
        ensure_within_cap(v.n, cap, what="Monotone closure")
    closure = np.array(v.materialize(cap), dtype=np.float64)
    for bit in range(v.n):
        lattice = closure.reshape(-1, 2, 1 << bit)
        np.maximum(lattice[:, 1, :], lattice[:, 0, :], out=lattice[:, 1, :])
    return TableValuation(closure)


def scale_valuation(v: Valuation, factor: float) -> ScaledValuation:
    if not factor > 0:
        raise InvalidParameter("Scale factor must be positive")
    return ScaledValuation(v, float(factor))


def sum_valuations(left: Valuation, right: Valuation) -> SumValuation:
    if left.n != right.n:
        raise InvalidParameter(f"Cannot add valuations over {left.n} and {right.n} features")
    return SumValuation(left, right)
