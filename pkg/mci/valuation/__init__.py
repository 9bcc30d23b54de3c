"""Evaluation functions over feature subsets and the transformations on them."""

from mci.valuation.base import Valuation, delta, value
from mci.valuation.diagnostics import ValuationReport, check_valuation, require_monotone
from mci.valuation.feature_set import FeatureSet, subset_key
from mci.valuation.mutual_information import (
    Binning,
    Dataset,
    MutualInformationValuation,
    load_csv_dataset,
    mutual_information_valuation,
)
from mci.valuation.oracle import OracleValuation, oracle_valuation
from mci.valuation.table import TableValuation, dump_value_table, load_value_table
from mci.valuation.transforms import (
    DuplicatedValuation,
    duplicate_feature,
    eliminate,
    monotone_closure,
    scale_valuation,
    sum_valuations,
)

__all__ = [
    "Binning",
    "Dataset",
    "DuplicatedValuation",
    "FeatureSet",
    "MutualInformationValuation",
    "OracleValuation",
    "TableValuation",
    "Valuation",
    "ValuationReport",
    "check_valuation",
    "delta",
    "duplicate_feature",
    "dump_value_table",
    "eliminate",
    "load_csv_dataset",
    "load_value_table",
    "monotone_closure",
    "mutual_information_valuation",
    "oracle_valuation",
    "require_monotone",
    "scale_valuation",
    "subset_key",
    "sum_valuations",
    "value",
]
