"""Rankings, NDCG / MKD metrics and the duplication and seed robustness harnesses."""

from mci.ranking.metrics import Ranking, kendall_tau_distance, mkd, ndcg_at_k, rank
from mci.ranking.robustness import RobustnessReport, SensitivityReport, robustness_harness, seed_sensitivity

__all__ = [
    "Ranking",
    "RobustnessReport",
    "SensitivityReport",
    "kendall_tau_distance",
    "mkd",
    "ndcg_at_k",
    "rank",
    "robustness_harness",
    "seed_sensitivity",
]
