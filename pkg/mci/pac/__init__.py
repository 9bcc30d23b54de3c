"""Sample-size bound for estimating MCI from data and its deterministic stability check."""

from mci.pac.bounds import (
    PacParameters,
    StabilityReport,
    mci_stability_check,
    sample_size,
    valuation_deviation_bound,
)

__all__ = [
    "PacParameters",
    "StabilityReport",
    "mci_stability_check",
    "sample_size",
    "valuation_deviation_bound",
]
