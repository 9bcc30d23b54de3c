from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from mci.core.config import get_settings
from mci.core.errors import InvalidParameter, InvalidTable, MissingEntry, NormalizationError
from mci.core.logging import get_logger
from mci.valuation.base import Valuation
from mci.valuation.feature_set import ensure_within_cap, parse_subset_key, subset_key

logger = get_logger(__name__)


class ValueTablePayload(BaseModel):
    """On-disk JSON value table: {"n": int, "values": {subset-key: float}}."""

    n: int = Field(..., ge=0, le=64)
    values: Dict[str, float]


class TableValuation(Valuation):
    """Valuation backed by an explicit vector of 2^n values (NaN marks a missing entry)."""

    kind = "table"

    def __init__(self, values: np.ndarray) -> None:
        array = np.array(values, dtype=np.float64)
        size = array.shape[0] if array.ndim == 1 else 0
        if size == 0 or size & (size - 1):
            raise InvalidTable("Value vector length must be a power of two", context={"length": int(array.size)})
        super().__init__(size.bit_length() - 1)
        if np.isnan(array[0]):
            raise NormalizationError("Value table has no entry for the empty set")
        if array[0] != 0.0:
            raise NormalizationError(
                "Value of the empty set must be exactly 0",
                context={"value": float(array[0])},
            )
        present = array[~np.isnan(array)]
        if not np.all(np.isfinite(present)) or np.any(present < 0):
            raise InvalidTable("Table values must be finite and non-negative")
        array.setflags(write=False)
        self._values = array

    @classmethod
    def from_mapping(cls, n: int, values: Mapping[int, float]) -> "TableValuation":
        array = np.full(1 << n, np.nan)
        for mask, val in values.items():
            array[mask] = val
        return cls(array)

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int], float]) -> "TableValuation":
        return cls(np.array([fn(mask) for mask in range(1 << n)], dtype=np.float64))

    @property
    def values(self) -> np.ndarray:
        return self._values

    def _evaluate(self, mask: int) -> float:
        val = self._values[mask]
        if np.isnan(val):
            raise MissingEntry(
                f"Value table has no entry for subset '{subset_key(mask)}'",
                context={"subset": subset_key(mask)},
            )
        return float(val)

    def _materialize(self) -> np.ndarray:
        missing = np.flatnonzero(np.isnan(self._values))
        if missing.size:
            first = int(missing[0])
            raise MissingEntry(
                f"Value table has no entry for subset '{subset_key(first)}'",
                context={"subset": subset_key(first), "missing": int(missing.size)},
            )
        return self._values


def table_payload(v: Valuation, cap: Optional[int] = None) -> Dict[str, object]:
    table = v.materialize(cap)
    return {"n": v.n, "values": {subset_key(mask): float(table[mask]) for mask in range(1 << v.n)}}


def load_value_table(path: Union[str, Path], cap: Optional[int] = None) -> TableValuation:
    """Read the JSON value-table format; '' must be present and equal to 0."""
    source = Path(path)
    try:
        raw = json.loads(source.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidTable(f"Unable to read value table {source}: {exc}") from exc
    try:
        payload = ValueTablePayload.model_validate(raw)
    except ValidationError as exc:
        raise InvalidTable(f"Malformed value table {source}", context={"errors": exc.errors()}) from exc

    limit = get_settings().enumeration_cap if cap is None else cap
    ensure_within_cap(payload.n, limit, what="Loading a value table")
    if "" not in payload.values:
        raise NormalizationError(f"Value table {source} has no entry for the empty set ('')")

    array = np.full(1 << payload.n, np.nan)
    for key, val in payload.values.items():
        try:
            mask = parse_subset_key(key, payload.n)
        except InvalidParameter as exc:
            raise InvalidTable(exc.detail) from exc
        if not math.isfinite(val):
            raise InvalidTable(f"Non-finite value for subset '{key}'")
        array[mask] = val
    table = TableValuation(array)
    logger.info(
        "valuation_loaded",
        extra={"event": "valuation_loaded", "kind": "table", "path": str(source), "n": payload.n,
               "entries": len(payload.values)},
    )
    return table


def dump_value_table(v: Valuation, path: Union[str, Path], cap: Optional[int] = None) -> Path:
    """Materialize v and write it atomically in the JSON value-table format."""
    target = Path(path)
    body = json.dumps(table_payload(v, cap), indent=2)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=".table-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as handle:
        handle.write(body + "\n")
    os.replace(tmp_name, target)
    logger.info("value_table_written", extra={"event": "value_table_written", "path": str(target), "n": v.n})
    return target
