from typing import Optional

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter
from mci.importance.baselines import ablation, bivariate, shapley_exact, shapley_sampled
from mci.importance.mci import mci_branch_and_bound, mci_exact, mci_k_bounded, mci_sampled
from mci.importance.scores import ImportanceScores, PermutationPlan, ScoreMethod
from mci.valuation.base import Valuation


def default_plan(n: int, *, seed: Optional[int] = None, count: Optional[int] = None) -> PermutationPlan:
    settings = get_settings()
    return PermutationPlan(
        seed=settings.default_seed if seed is None else seed,
        count=settings.default_permutations if count is None else count,
        n=n,
    )


def compute_scores(
    v: Valuation,
    method: ScoreMethod,
    *,
    k: Optional[int] = None,
    tolerance: float = 0.0,
    plan: Optional[PermutationPlan] = None,
    workers: int = 1,
    cap: Optional[int] = None,
) -> ImportanceScores:
    """Run one scoring method; sampled methods fall back to the default plan for v.n."""
    if method is ScoreMethod.MCI_EXACT:
        return mci_exact(v, cap=cap, workers=workers)
    if method is ScoreMethod.MCI_K:
        if k is None:
            raise InvalidParameter("Method mci-k needs --k")
        return mci_k_bounded(v, k, workers=workers)
    if method is ScoreMethod.MCI_BNB:
        return mci_branch_and_bound(v, tolerance, cap=cap, workers=workers)
    if method is ScoreMethod.SHAPLEY_EXACT:
        return shapley_exact(v, cap=cap, workers=workers)
    if method is ScoreMethod.ABLATION:
        return ablation(v)
    if method is ScoreMethod.BIVARIATE:
        return bivariate(v)
    chosen = plan if plan is not None else default_plan(v.n)
    if method is ScoreMethod.MCI_SAMPLED:
        return mci_sampled(v, chosen, workers=workers)
    if method is ScoreMethod.SHAPLEY_SAMPLED:
        return shapley_sampled(v, chosen, workers=workers)
    raise InvalidParameter(f"Unsupported method '{method}'")
