from typing import Any, Dict, Optional


class MciError(Exception):
    """Base class for toolkit failures; `exit_code` drives the CLI mapping."""

    exit_code = 1
    code = "mci_error"

    def __init__(self, detail: str, *, context: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        self.context = context or {}

    def payload(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {"error": self.code, "detail": self.detail}
        if self.context:
            body["context"] = self.context
        return body


class ConfigError(MciError):
    exit_code = 2
    code = "config_error"


class InvalidParameter(ConfigError):
    code = "invalid_parameter"


class EmptyRelevanceSet(ConfigError):
    code = "empty_relevance_set"


class PrefixNotInUniverse(ConfigError):
    code = "prefix_not_in_universe"


class DataError(MciError):
    exit_code = 3
    code = "data_error"


class MissingEntry(DataError):
    code = "missing_entry"


class NormalizationError(DataError):
    code = "normalization_error"


class EmptyDataset(DataError):
    code = "empty_dataset"


class InvalidTable(DataError):
    code = "invalid_table"


class NonMonotoneValuation(DataError):
    """Raised with the first covering pair (smaller, larger) where the value drops."""

    code = "non_monotone_valuation"


class CapError(MciError):
    exit_code = 4
    code = "cap_error"


class CapExceeded(CapError):
    code = "cap_exceeded"


class TooManyFeatures(CapError):
    code = "too_many_features"


class OracleError(MciError):
    exit_code = 5
    code = "oracle_error"


class OracleFailure(OracleError):
    code = "oracle_failure"
