from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter
from mci.core.logging import get_logger
from mci.importance.compute import compute_scores, default_plan
from mci.importance.scores import ImportanceScores, ScoreMethod
from mci.ranking.metrics import Ranking, mkd, rank
from mci.valuation.base import Valuation
from mci.valuation.transforms import duplicate_feature

logger = get_logger(__name__)

_ENUMERATING = {ScoreMethod.MCI_EXACT, ScoreMethod.MCI_BNB, ScoreMethod.SHAPLEY_EXACT}


def _resolve_ks(ks: Optional[Sequence[int]], n: int) -> List[int]:
    chosen = list(ks) if ks else list(range(1, n + 1))
    bad = [k for k in chosen if not 1 <= k <= n]
    if bad:
        raise InvalidParameter(f"Prefix lengths must lie in 1..{n}", context={"ks": bad})
    return chosen


def first_occurrences(order: Sequence[int], original_of) -> Ranking:
    """Map copy ids back to their original and keep only the first occurrence of each id."""
    seen = set()
    kept = []
    for feature in order:
        original = original_of(feature)
        if original in seen:
            continue
        seen.add(original)
        kept.append(original)
    return Ranking(tuple(kept))


@dataclass
class RobustnessReport:
    method: ScoreMethod
    duplicated_feature: int
    copies: int
    copy_ids: List[int]
    mkd_at_k: Dict[int, float]
    ranking_before: Ranking
    ranking_after: Ranking
    scores_before: ImportanceScores
    scores_after: ImportanceScores

    def as_dict(self) -> Dict[str, object]:
        return {
            "method": self.method.value,
            "duplicated_feature": self.duplicated_feature,
            "copies": self.copies,
            "copy_ids": self.copy_ids,
            "mkd_at_k": {str(k): d for k, d in self.mkd_at_k.items()},
            "ranking_before": list(self.ranking_before.order),
            "ranking_after": list(self.ranking_after.order),
            "scores_before": self.scores_before.as_dict(),
            "scores_after": self.scores_after.as_dict(),
        }

    def plot_rows(self) -> List[Dict[str, float]]:
        return [{"k": k, "mkd": d} for k, d in self.mkd_at_k.items()]


def robustness_harness(
    v: Valuation,
    method: ScoreMethod,
    copies: int = 3,
    ks: Optional[Sequence[int]] = None,
    *,
    k: Optional[int] = None,
    tolerance: float = 0.0,
    seed: Optional[int] = None,
    permutations: Optional[int] = None,
    workers: int = 1,
    cap: Optional[int] = None,
) -> RobustnessReport:
    """
    Duplicate the top-ranked feature `copies` times, rescore, and report the MKD between
    top-k prefixes before and after. Copies map back to the original id in the second
    ranking and only the first occurrence is kept, so both rankings share one universe.
    """
    if v.n == 0:
        raise InvalidParameter("Robustness needs at least one feature")
    if copies < 0:
        raise InvalidParameter("Copy count must be non-negative")
    prefix_lengths = _resolve_ks(ks, v.n)
    limit = get_settings().enumeration_cap if cap is None else cap

    plan_before = default_plan(v.n, seed=seed, count=permutations) if method.sampled else None
    before = compute_scores(v, method, k=k, tolerance=tolerance, plan=plan_before, workers=workers, cap=limit)
    ranking_before = rank(before)
    top = ranking_before.order[0]

    duplicated = duplicate_feature(v, top, copies, cap=limit if method in _ENUMERATING else None)
    plan_after = default_plan(duplicated.n, seed=seed, count=permutations) if method.sampled else None
    after = compute_scores(duplicated, method, k=k, tolerance=tolerance, plan=plan_after, workers=workers, cap=limit)
    ranking_after = first_occurrences(rank(after).order, duplicated.original_of)

    universe = range(v.n)
    distances = {
        length: mkd(ranking_before.prefix(length), ranking_after.prefix(length), universe)
        for length in prefix_lengths
    }
    logger.info(
        "robustness_completed",
        extra={"event": "robustness_completed", "method": method.value, "duplicated_feature": top,
               "copies": copies, "mkd_at_k": distances},
    )
    return RobustnessReport(
        method=method,
        duplicated_feature=top,
        copies=copies,
        copy_ids=list(duplicated.copy_ids),
        mkd_at_k=distances,
        ranking_before=ranking_before,
        ranking_after=ranking_after,
        scores_before=before,
        scores_after=after,
    )


@dataclass
class SensitivityReport:
    method: ScoreMethod
    seeds: List[int]
    permutations: int
    mean_mkd_at_k: Dict[int, float]
    rankings: Dict[int, Ranking] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            "method": self.method.value,
            "seeds": self.seeds,
            "permutations": self.permutations,
            "mean_mkd_at_k": {str(k): d for k, d in self.mean_mkd_at_k.items()},
            "rankings": {str(seed): list(r.order) for seed, r in self.rankings.items()},
        }


def seed_sensitivity(
    v: Valuation,
    method: ScoreMethod,
    seeds: Sequence[int],
    ks: Optional[Sequence[int]] = None,
    *,
    permutations: Optional[int] = None,
    workers: int = 1,
) -> SensitivityReport:
    """Mean pairwise MKD between rankings of one sampled method under different seeds."""
    if not method.sampled:
        raise InvalidParameter(f"Seed sensitivity applies to sampled methods, not '{method.value}'")
    unique = list(dict.fromkeys(seeds))
    if len(unique) < 2:
        raise InvalidParameter("Seed sensitivity needs at least two distinct seeds")
    prefix_lengths = _resolve_ks(ks, v.n)
    rankings: Dict[int, Ranking] = {}
    count = permutations
    for seed in unique:
        plan = default_plan(v.n, seed=seed, count=permutations)
        count = plan.count
        rankings[seed] = rank(compute_scores(v, method, plan=plan, workers=workers))
    pairs = list(itertools.combinations(unique, 2))
    means = {
        length: sum(mkd(rankings[a].prefix(length), rankings[b].prefix(length), range(v.n)) for a, b in pairs)
        / len(pairs)
        for length in prefix_lengths
    }
    logger.info(
        "seed_sensitivity_completed",
        extra={"event": "seed_sensitivity_completed", "method": method.value, "seeds": unique, "mean_mkd_at_k": means},
    )
    return SensitivityReport(
        method=method,
        seeds=unique,
        permutations=int(count or 0),
        mean_mkd_at_k=means,
        rankings=rankings,
    )
