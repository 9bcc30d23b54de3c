"""Importance scores: MCI (exact, k-bounded, branch-and-bound, sampled) and the baselines."""

from mci.importance.baselines import ablation, bivariate, shapley_exact, shapley_sampled
from mci.importance.compute import compute_scores, default_plan
from mci.importance.mci import mci_branch_and_bound, mci_exact, mci_k_bounded, mci_sampled
from mci.importance.scores import BoundKind, ImportanceScores, PermutationPlan, ScoreMethod, merge_sampled

__all__ = [
    "BoundKind",
    "ImportanceScores",
    "PermutationPlan",
    "ScoreMethod",
    "ablation",
    "bivariate",
    "compute_scores",
    "default_plan",
    "mci_branch_and_bound",
    "mci_exact",
    "mci_k_bounded",
    "mci_sampled",
    "merge_sampled",
    "shapley_exact",
    "shapley_sampled",
]
