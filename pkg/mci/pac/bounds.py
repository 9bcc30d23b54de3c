from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter
from mci.core.logging import get_logger
from mci.importance.mci import mci_exact
from mci.valuation.base import Valuation
from mci.valuation.feature_set import ensure_within_cap

logger = get_logger(__name__)

# float slack for the deterministic inequality; both sides come from the same tables
STABILITY_SLACK = 1e-9


class PacParameters(BaseModel):
    epsilon: float = Field(..., gt=0, le=1)
    delta: float = Field(..., gt=0, lt=1)
    hypothesis_count: int = Field(..., ge=1, strict=True)
    feature_count: int = Field(..., ge=1, strict=True)

    @classmethod
    def build(cls, **values: object) -> "PacParameters":
        try:
            return cls(**values)
        except ValidationError as exc:
            fields = sorted({str(err["loc"][0]) for err in exc.errors() if err.get("loc")})
            raise InvalidParameter(
                f"Invalid sample-size parameters: {', '.join(fields)}",
                context={"errors": [err["msg"] for err in exc.errors()]},
            ) from exc


def sample_size(params: PacParameters) -> int:
    """
    Smallest m with m >= (2 / eps^2) * (log2(2|H| / delta) + |F|).

    eps is read at its decimal value, so 2 / eps^2 is exact (200 for eps = 0.1).
    """
    scale = Fraction(2) / Fraction(repr(params.epsilon)) ** 2
    exponent = Fraction(math.log2(2.0 * params.hypothesis_count / params.delta)) + params.feature_count
    return math.ceil(scale * exponent)


def _paired_tables(estimated: Valuation, reference: Valuation, cap: Optional[int]) -> tuple[np.ndarray, np.ndarray]:
    if estimated.n != reference.n:
        raise InvalidParameter(
            "Valuations must share one feature set",
            context={"estimated_n": estimated.n, "reference_n": reference.n},
        )
    limit = get_settings().enumeration_cap if cap is None else cap
    ensure_within_cap(reference.n, limit, what="Valuation deviation")
    return estimated.materialize(limit), reference.materialize(limit)


def valuation_deviation_bound(estimated: Valuation, reference: Valuation, *, cap: Optional[int] = None) -> float:
    """max over every subset S of |estimated(S) - reference(S)|."""
    left, right = _paired_tables(estimated, reference, cap)
    return float(np.max(np.abs(left - right)))


@dataclass
class StabilityReport:
    max_score_gap: float
    deviation: float
    bound: float
    holds: bool

    def as_dict(self) -> Dict[str, object]:
        return {
            "max_score_gap": self.max_score_gap,
            "deviation": self.deviation,
            "bound": self.bound,
            "holds": self.holds,
        }


def mci_stability_check(estimated: Valuation, reference: Valuation, *, cap: Optional[int] = None) -> StabilityReport:
    """
    Compare exact MCI under an estimated valuation against the reference one.

    Every score moves by at most twice the largest per-subset deviation, so
    `holds` is expected to be true for any pair of tables.
    """
    deviation = valuation_deviation_bound(estimated, reference, cap=cap)
    limit = get_settings().enumeration_cap if cap is None else cap
    first = mci_exact(estimated, cap=limit).scores
    second = mci_exact(reference, cap=limit).scores
    gap = max((abs(a - b) for a, b in zip(first, second)), default=0.0)
    bound = 2.0 * deviation
    holds = gap <= bound + STABILITY_SLACK
    if not holds:
        logger.error(
            "stability_violated",
            extra={"event": "stability_violated", "max_score_gap": gap, "bound": bound},
        )
    return StabilityReport(max_score_gap=gap, deviation=deviation, bound=bound, holds=holds)
