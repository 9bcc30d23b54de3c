from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter, NonMonotoneValuation
from mci.core.logging import get_logger
from mci.valuation.base import Valuation
from mci.valuation.feature_set import ensure_within_cap, subset_key

logger = get_logger(__name__)


@dataclass
class Violation:
    """First failing pair for one property, as subset keys."""

    property: str
    left: str
    right: str
    gap: float

    def as_dict(self) -> Dict[str, object]:
        return {"property": self.property, "left": self.left, "right": self.right, "gap": self.gap}


@dataclass
class ValuationReport:
    n: int
    normalized: bool
    monotone: bool
    submodular: bool
    k: Optional[int] = None
    k_size_submodular: Optional[bool] = None
    soft_k_size_submodular: Optional[bool] = None
    violations: List[Violation] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "normalized": self.normalized,
            "monotone": self.monotone,
            "submodular": self.submodular,
            "k": self.k,
            "k_size_submodular": self.k_size_submodular,
            "soft_k_size_submodular": self.soft_k_size_submodular,
            "violations": [v.as_dict() for v in self.violations],
        }


def _popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def monotonicity_violation(table: np.ndarray, n: int, tolerance: float = 0.0) -> Optional[Tuple[int, int, float]]:
    """First covering pair (S, S+{i}) with v(S) > v(S+{i}) + tolerance, scanning i then S ascending."""
    masks = np.arange(1 << n, dtype=np.int64)
    for bit in range(n):
        base = masks[(masks >> bit) & 1 == 0]
        drop = table[base] - table[base | (1 << bit)]
        bad = np.flatnonzero(drop > tolerance)
        if bad.size:
            smaller = int(base[bad[0]])
            return smaller, smaller | (1 << bit), float(drop[bad[0]])
    return None


def submodularity_violation(table: np.ndarray, n: int, tolerance: float = 0.0) -> Optional[Tuple[int, int, float]]:
    """
    Global check through the equivalent local form
    v(S+i) + v(S+j) >= v(S+i+j) + v(S); the witness is the pair (S+i, S+j).
    """
    masks = np.arange(1 << n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            pair = (1 << i) | (1 << j)
            base = masks[(masks & pair) == 0]
            gap = table[base | (1 << i) | (1 << j)] + table[base] - table[base | (1 << i)] - table[base | (1 << j)]
            bad = np.flatnonzero(gap > tolerance)
            if bad.size:
                s = int(base[bad[0]])
                return s | (1 << i), s | (1 << j), float(gap[bad[0]])
    return None


def k_size_submodularity_violation(
    table: np.ndarray, n: int, k: int, tolerance: float = 0.0
) -> Optional[Tuple[int, int, float]]:
    """Pairwise check of v(S)+v(T) >= v(S|T)+v(S&T) over |S|,|T| >= k; O(4^n)."""
    counts = _popcounts(n)
    large = np.flatnonzero(counts >= k).astype(np.int64)
    for position, s in enumerate(large):
        others = large[position + 1:]
        if not others.size:
            continue
        gap = table[s | others] + table[s & others] - table[s] - table[others]
        bad = np.flatnonzero(gap > tolerance)
        if bad.size:
            return int(s), int(others[bad[0]]), float(gap[bad[0]])
    return None


def soft_k_size_submodularity_violation(
    table: np.ndarray, n: int, k: int, tolerance: float = 0.0
) -> Optional[Tuple[int, int, float]]:
    """
    For every T with |T| > k and f outside T there must be S inside T with |S| <= k and
    v(S+f) + v(T) >= v(S+f | T) + v((S+f) & T). Returns (T, T+f, best gap) on failure.
    """
    counts = _popcounts(n)
    small = np.flatnonzero(counts <= k).astype(np.int64)
    for t in np.flatnonzero(counts > k):
        t = int(t)
        inside = small[(small & ~t) == 0]
        for f in range(n):
            bit = 1 << f
            if t & bit:
                continue
            with_f = inside | bit
            gap = table[with_f | t] + table[with_f & t] - table[with_f] - table[t]
            best = float(gap.min())
            if best > tolerance:
                return t, t | bit, best
    return None


def require_monotone(v: Valuation, *, cap: Optional[int] = None, tolerance: Optional[float] = None) -> None:
    """Raise NonMonotoneValuation with the first witness pair if v decreases anywhere."""
    settings = get_settings()
    table = v.materialize(settings.enumeration_cap if cap is None else cap)
    tol = settings.monotone_tolerance if tolerance is None else tolerance
    found = monotonicity_violation(table, v.n, tol)
    if found is not None:
        smaller, larger, gap = found
        raise NonMonotoneValuation(
            f"Valuation decreases from '{subset_key(smaller)}' to '{subset_key(larger)}' by {gap}",
            context={"smaller": subset_key(smaller), "larger": subset_key(larger), "drop": gap},
        )


def check_valuation(
    v: Valuation,
    *,
    k: Optional[int] = None,
    soft: bool = True,
    tolerance: Optional[float] = None,
    cap: Optional[int] = None,
    soft_cap: Optional[int] = None,
) -> ValuationReport:
    """
    Exhaustively diagnose normalization, monotonicity, submodularity and, when k is
    given, k-size and soft k-size submodularity; one witness per failed property.
    """
    settings = get_settings()
    limit = settings.check_cap if cap is None else cap
    ensure_within_cap(v.n, limit, what="Exhaustive valuation check")
    if k is not None and not 0 <= k <= v.n:
        raise InvalidParameter(f"k must lie in 0..{v.n}")
    tol = settings.monotone_tolerance if tolerance is None else tolerance
    table = v.materialize(limit)
    n = v.n

    violations: List[Violation] = []
    normalized = table[0] == 0.0
    if not normalized:
        violations.append(Violation("normalized", "", "", float(table[0])))

    def record(name: str, found: Optional[Tuple[int, int, float]]) -> bool:
        if found is None:
            return True
        left, right, gap = found
        violations.append(Violation(name, subset_key(left), subset_key(right), gap))
        return False

    monotone = record("monotone", monotonicity_violation(table, n, tol))
    submodular = record("submodular", submodularity_violation(table, n, tol))
    report = ValuationReport(n=n, normalized=bool(normalized), monotone=monotone, submodular=submodular, k=k)
    if k is not None:
        report.k_size_submodular = record("k_size_submodular", k_size_submodularity_violation(table, n, k, tol))
        soft_limit = settings.soft_check_cap if soft_cap is None else soft_cap
        if soft and n <= soft_limit:
            report.soft_k_size_submodular = record(
                "soft_k_size_submodular", soft_k_size_submodularity_violation(table, n, k, tol)
            )
    report.violations = violations
    logger.info(
        "valuation_checked",
        extra={"event": "valuation_checked", "n": n, "monotone": monotone, "submodular": submodular,
               "k": k, "violations": len(violations)},
    )
    return report
