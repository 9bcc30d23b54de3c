from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

from mci.core.errors import EmptyRelevanceSet, InvalidParameter, PrefixNotInUniverse
from mci.importance.scores import ImportanceScores


@dataclass(frozen=True)
class Ranking:
    """Feature ids best first; `k` records a truncation when one was applied."""

    order: Tuple[int, ...]
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise InvalidParameter("A ranking lists each feature at most once")

    def prefix(self, k: int) -> Tuple[int, ...]:
        return self.order[:k]

    def __len__(self) -> int:
        return len(self.order)


ScoresLike = Union[ImportanceScores, Sequence[float]]


def rank(scores: ScoresLike, k: Optional[int] = None) -> Ranking:
    """Descending score, ties by ascending feature id; optional truncation to k."""
    values = scores.scores if isinstance(scores, ImportanceScores) else tuple(scores)
    order = tuple(sorted(range(len(values)), key=lambda i: (-values[i], i)))
    if k is not None:
        if k < 0:
            raise InvalidParameter("k must be non-negative")
        return Ranking(order[:k], k)
    return Ranking(order)


def ndcg_at_k(ranking: Union[Ranking, Sequence[int]], relevant: Iterable[int], k: int) -> float:
    """Binary-gain NDCG with discount 1/log2(i + 1) for 1-based position i."""
    order = ranking.order if isinstance(ranking, Ranking) else tuple(ranking)
    wanted = set(relevant)
    if not wanted:
        raise EmptyRelevanceSet("NDCG needs at least one relevant feature")
    if not 1 <= k <= len(order):
        raise InvalidParameter(f"k must lie in 1..{len(order)}", context={"k": k})
    dcg = sum(1.0 / math.log2(i + 2) for i, feature in enumerate(order[:k]) if feature in wanted)
    ideal = sum(1.0 / math.log2(i + 2) for i in range(min(k, len(wanted))))
    return dcg / ideal


def kendall_tau_distance(first: Sequence[int], second: Sequence[int]) -> int:
    """Discordant pairs between two full rankings of the same items."""
    if set(first) != set(second) or len(first) != len(second):
        raise InvalidParameter("Kendall distance needs two rankings of the same items")
    position = {item: i for i, item in enumerate(second)}
    return sum(1 for a, b in itertools.combinations(first, 2) if position[a] > position[b])


def mkd(
    first: Union[Ranking, Sequence[int]],
    second: Union[Ranking, Sequence[int]],
    universe: Iterable[int],
) -> float:
    """
    Minimum Kendall distance over all completions of two top-k prefixes.

    Per pair of ranked items: both in both prefixes counts a discordance; both in one
    prefix and one in the other counts when the other prefix forces the reverse order;
    one only in each prefix always counts; everything else can be completed to agree.
    """
    a = first.order if isinstance(first, Ranking) else tuple(first)
    b = second.order if isinstance(second, Ranking) else tuple(second)
    items = set(universe)
    if len(a) != len(b):
        raise InvalidParameter("MKD compares prefixes of equal length", context={"left": len(a), "right": len(b)})
    for prefix in (a, b):
        if len(set(prefix)) != len(prefix):
            raise InvalidParameter("A prefix lists each feature at most once")
        outside = [item for item in prefix if item not in items]
        if outside:
            raise PrefixNotInUniverse(
                f"Prefix items {outside} are not in the universe", context={"items": outside}
            )
    pos_a = {item: i for i, item in enumerate(a)}
    pos_b = {item: i for i, item in enumerate(b)}
    distance = 0
    for i, j in itertools.combinations(sorted(set(a) | set(b)), 2):
        in_a = (i in pos_a, j in pos_a)
        in_b = (i in pos_b, j in pos_b)
        if all(in_a) and all(in_b):
            distance += (pos_a[i] < pos_a[j]) != (pos_b[i] < pos_b[j])
        elif all(in_a) and any(in_b):
            # b places its member above the other one
            above_in_b = i if in_b[0] else j
            below = j if above_in_b == i else i
            distance += pos_a[below] < pos_a[above_in_b]
        elif all(in_b) and any(in_a):
            above_in_a = i if in_a[0] else j
            below = j if above_in_a == i else i
            distance += pos_b[below] < pos_b[above_in_a]
        elif in_a != in_b and any(in_a) and any(in_b):
            distance += 1
    return float(distance)
