from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

from mci.core.config import HARD_FEATURE_CAP
from mci.core.errors import CapExceeded, InvalidParameter


@dataclass(frozen=True)
class FeatureSet:
    """A subset of the feature ids 0..n-1 stored as a bitmask."""

    bits: int
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.n <= HARD_FEATURE_CAP:
            raise InvalidParameter(f"Feature count {self.n} outside 0..{HARD_FEATURE_CAP}")
        if self.bits < 0 or self.bits >> self.n:
            raise InvalidParameter(
                f"Bitmask {self.bits:#x} references features outside 0..{self.n - 1}",
                context={"n": self.n},
            )

    @classmethod
    def empty(cls, n: int) -> "FeatureSet":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "FeatureSet":
        return cls((1 << n) - 1, n)

    @classmethod
    def of(cls, n: int, indices: Iterable[int]) -> "FeatureSet":
        bits = 0
        for index in indices:
            if not 0 <= index < n:
                raise InvalidParameter(f"Feature id {index} outside 0..{n - 1}")
            bits |= 1 << index
        return cls(bits, n)

    @classmethod
    def from_key(cls, key: str, n: int) -> "FeatureSet":
        return cls(parse_subset_key(key, n), n)

    def indices(self) -> Tuple[int, ...]:
        return mask_indices(self.bits)

    def key(self) -> str:
        return subset_key(self.bits)

    def with_feature(self, feature: int) -> "FeatureSet":
        return FeatureSet(self.bits | (1 << feature), self.n)

    def __contains__(self, feature: object) -> bool:
        return isinstance(feature, int) and feature >= 0 and bool(self.bits >> feature & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __len__(self) -> int:
        return self.bits.bit_count()


def mask_indices(mask: int) -> Tuple[int, ...]:
    out = []
    index = 0
    while mask:
        if mask & 1:
            out.append(index)
        mask >>= 1
        index += 1
    return tuple(out)


def subset_key(mask: int) -> str:
    """Sorted comma-separated ids; the empty set maps to ''."""
    return ",".join(str(i) for i in mask_indices(mask))


def parse_subset_key(key: str, n: int) -> int:
    text = (key or "").strip()
    if not text:
        return 0
    mask = 0
    for part in text.split(","):
        try:
            index = int(part.strip())
        except ValueError as exc:
            raise InvalidParameter(f"Malformed subset key '{key}'") from exc
        if not 0 <= index < n:
            raise InvalidParameter(f"Subset key '{key}' references feature {index} outside 0..{n - 1}")
        mask |= 1 << index
    return mask


def ensure_within_cap(n: int, cap: int, *, what: str) -> None:
    if n > cap:
        raise CapExceeded(
            f"{what} needs 2^{n} subsets; the configured cap is n <= {cap}",
            context={"n": n, "cap": cap},
        )
