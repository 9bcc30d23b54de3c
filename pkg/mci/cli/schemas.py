from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from mci.core.errors import InvalidParameter
from mci.importance.scores import ScoreMethod


class RunConfig(BaseModel):
    """Validated command-line options shared by every valuation-driven subcommand."""

    table: Optional[Path] = None
    csv: Optional[Path] = None
    target: Optional[str] = None
    oracle: Optional[str] = None
    n_features: Optional[int] = Field(None, ge=0, le=64)
    methods: List[ScoreMethod] = []
    k: Optional[int] = Field(None, ge=0)
    tolerance: float = Field(0.0, ge=0)
    copies: int = Field(3, ge=0)
    seed: int = Field(..., ge=0, lt=1 << 64)
    permutations: int = Field(..., gt=0)
    bins: int = Field(..., gt=0)
    binning: Literal["quantile", "width"] = "quantile"
    relevant: Optional[List[int]] = None
    ks: Optional[List[int]] = None
    seeds: Optional[List[int]] = None
    out: Optional[Path] = None
    workers: int = Field(1, gt=0)
    repair: bool = False

    @model_validator(mode="after")
    def validate_source(self) -> "RunConfig":
        sources = [name for name in ("table", "csv", "oracle") if getattr(self, name) is not None]
        if len(sources) != 1:
            raise ValueError("Exactly one of --table, --csv or --oracle is required")
        if self.oracle is not None and self.n_features is None:
            raise ValueError("--oracle needs --n-features")
        if self.target is not None and self.csv is None:
            raise ValueError("--target only applies to --csv")
        if ScoreMethod.MCI_K in self.methods and self.k is None:
            raise ValueError("Method mci-k needs --k")
        return self

    @property
    def source(self) -> str:
        if self.table is not None:
            return "table"
        if self.csv is not None:
            return "csv"
        return "oracle"


def build_run_config(**values: object) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        messages = [err["msg"].removeprefix("Value error, ") for err in exc.errors()]
        raise InvalidParameter("; ".join(messages), context={"errors": messages}) from exc


class SampleSizeReport(BaseModel):
    epsilon: float
    delta: float
    hypothesis_count: int
    feature_count: int
    m: int


class ExportReport(BaseModel):
    path: str
    n: int
    entries: int
    valuation_calls: int
