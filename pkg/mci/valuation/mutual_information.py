from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from mci.core.config import get_settings
from mci.core.errors import EmptyDataset, InvalidParameter, InvalidTable, TooManyFeatures
from mci.core.logging import get_logger
from mci.valuation.base import Valuation
from mci.valuation.feature_set import mask_indices

logger = get_logger(__name__)


@dataclass(frozen=True)
class Binning:
    """How numeric feature columns are discretized before counting."""

    bins: int = 8
    mode: str = "quantile"

    def __post_init__(self) -> None:
        if self.bins <= 0:
            raise InvalidParameter("Bin count must be positive")
        if self.mode not in {"quantile", "width"}:
            raise InvalidParameter(f"Unsupported binning mode '{self.mode}'. Use 'quantile' or 'width'")


@dataclass(frozen=True)
class Dataset:
    """Discrete records: `features` is rows x n small non-negative ints, `target` one code per row."""

    features: np.ndarray
    target: np.ndarray
    columns: Tuple[str, ...] = ()
    target_name: str = "target"
    cardinalities: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        features = np.asarray(self.features)
        target = np.asarray(self.target)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.shape[0] == 0 or target.shape[0] == 0:
            raise EmptyDataset("Dataset must contain at least one row")
        if features.ndim != 2 or target.ndim != 1 or features.shape[0] != target.shape[0]:
            raise InvalidTable(
                "Every row needs n feature values plus one target value",
                context={"features_shape": list(features.shape), "target_shape": list(target.shape)},
            )
        if not np.issubdtype(features.dtype, np.integer) or not np.issubdtype(target.dtype, np.integer):
            raise InvalidTable("Dataset values must be integer codes after binning")
        if features.min(initial=0) < 0 or target.min() < 0:
            raise InvalidTable("Dataset codes must be non-negative")
        columns = self.columns or tuple(f"f{i}" for i in range(features.shape[1]))
        if len(columns) != features.shape[1]:
            raise InvalidTable("Column names do not match the feature count")
        object.__setattr__(self, "features", features.astype(np.int64))
        object.__setattr__(self, "target", target.astype(np.int64))
        object.__setattr__(self, "columns", tuple(columns))
        cards = tuple(int(np.unique(features[:, j]).size) for j in range(features.shape[1]))
        object.__setattr__(self, "cardinalities", cards + (int(np.unique(target).size),))

    @property
    def n(self) -> int:
        return int(self.features.shape[1])

    @property
    def rows(self) -> int:
        return int(self.features.shape[0])


def _entropy_bits(counts: np.ndarray, total: int) -> float:
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


class MutualInformationValuation(Valuation):
    """Plug-in estimate of I(X_S; Y) in bits from empirical joint frequencies."""

    kind = "mutual-information"

    def __init__(self, dataset: Dataset) -> None:
        super().__init__(dataset.n)
        self.dataset = dataset
        _, self._target_codes = np.unique(dataset.target, return_inverse=True)
        self._target_codes = self._target_codes.reshape(-1)
        self._target_cardinality = int(self._target_codes.max()) + 1
        self.target_entropy = _entropy_bits(np.bincount(self._target_codes), dataset.rows)

    def _evaluate(self, mask: int) -> float:
        if mask == 0 or self._target_cardinality == 1:
            return 0.0
        columns = self.dataset.features[:, list(mask_indices(mask))]
        _, joint_x = np.unique(columns, axis=0, return_inverse=True)
        joint_x = joint_x.reshape(-1)
        joint_xy = joint_x * self._target_cardinality + self._target_codes
        total = self.dataset.rows
        mi = (
            _entropy_bits(np.bincount(joint_x), total)
            + self.target_entropy
            - _entropy_bits(np.bincount(joint_xy), total)
        )
        # plug-in MI is non-negative; clamp rounding residue
        return max(mi, 0.0)


def mutual_information_valuation(dataset: Dataset, *, max_features: Optional[int] = None) -> MutualInformationValuation:
    """Build the plug-in MI valuation; `max_features` enforces the exact-mode cap when given."""
    if dataset.rows == 0:
        raise EmptyDataset("Dataset must contain at least one row")
    if max_features is not None and dataset.n > max_features:
        raise TooManyFeatures(
            f"Dataset has {dataset.n} features; exact methods accept at most {max_features}",
            context={"n": dataset.n, "cap": max_features},
        )
    valuation = MutualInformationValuation(dataset)
    logger.info(
        "valuation_loaded",
        extra={"event": "valuation_loaded", "kind": valuation.kind, "n": dataset.n, "rows": dataset.rows,
               "target_entropy_bits": valuation.target_entropy},
    )
    return valuation


def _discretize(column: pd.Series, binning: Binning) -> np.ndarray:
    if pd.api.types.is_numeric_dtype(column) and column.nunique(dropna=False) > binning.bins:
        if binning.mode == "quantile":
            # edges come from the raw values, so equal values always share a bin
            binned = pd.qcut(column, q=binning.bins, labels=False, duplicates="drop")
        else:
            binned = pd.cut(column, bins=binning.bins, labels=False, include_lowest=True)
        return np.asarray(binned, dtype=np.int64)
    codes, _ = pd.factorize(column, sort=True)
    return codes.astype(np.int64)


def dataset_from_frame(frame: pd.DataFrame, target: Optional[str] = None, binning: Optional[Binning] = None) -> Dataset:
    if frame.empty:
        raise EmptyDataset("Dataset must contain at least one row")
    if frame.isna().any().any():
        raise InvalidTable("Dataset contains missing values")
    target_name = target if target is not None else str(frame.columns[-1])
    if target_name not in frame.columns:
        raise InvalidParameter(f"Target column '{target_name}' not found", context={"columns": list(map(str, frame.columns))})
    scheme = binning or Binning()
    feature_names: Sequence[str] = [str(c) for c in frame.columns if str(c) != target_name]
    if feature_names:
        features = np.column_stack([_discretize(frame[name], scheme) for name in feature_names])
    else:
        features = np.zeros((len(frame), 0), dtype=np.int64)
    target_codes, _ = pd.factorize(frame[target_name], sort=True)
    return Dataset(
        features=features,
        target=target_codes.astype(np.int64),
        columns=tuple(feature_names),
        target_name=target_name,
    )


def load_csv_dataset(
    path: Union[str, Path],
    *,
    target: Optional[str] = None,
    bins: Optional[int] = None,
    binning: Optional[str] = None,
) -> Dataset:
    """Read a headed CSV; the last column is the target unless `target` names another."""
    settings = get_settings()
    scheme = Binning(bins=bins or settings.default_bins, mode=(binning or settings.default_binning))
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"CSV {path} is empty") from exc
    except (OSError, pd.errors.ParserError) as exc:
        raise InvalidTable(f"Unable to read CSV {path}: {exc}") from exc
    dataset = dataset_from_frame(frame, target=target, binning=scheme)
    logger.info(
        "dataset_loaded",
        extra={"event": "dataset_loaded", "path": str(path), "rows": dataset.rows, "n": dataset.n,
               "target": dataset.target_name, "bins": scheme.bins, "binning": scheme.mode},
    )
    return dataset
