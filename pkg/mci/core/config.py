from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


BASE_DIR = Path(__file__).resolve().parent.parent.parent
ENV_PATH = BASE_DIR / ".env"

# Load environment variables from .env if present
load_dotenv(ENV_PATH)

HARD_FEATURE_CAP = 64


class Settings(BaseSettings):
    """Toolkit settings loaded via Pydantic; every field maps to an MCI_* variable."""

    model_config = SettingsConfigDict(
        env_file=ENV_PATH,
        env_prefix="MCI_",
        case_sensitive=False,
        extra="ignore",
    )
    log_level: str = Field("INFO")
    cache_dir: Path = Field(
        BASE_DIR / ".mci-cache",
        description="Directory holding persisted oracle replies.",
    )
    enumeration_cap: int = Field(
        24,
        description="Largest feature count accepted by exact (2^n) methods.",
    )
    check_cap: int = Field(
        16,
        description="Largest feature count accepted by exhaustive diagnostics.",
    )
    soft_check_cap: int = Field(
        12,
        description="Largest feature count for soft k-size submodularity certification.",
    )
    default_permutations: int = Field(32768)
    default_seed: int = Field(0)
    default_bins: int = Field(8)
    default_binning: str = Field("quantile")
    workers: int = Field(1)
    oracle_timeout_seconds: float = Field(60.0)
    monotone_tolerance: float = Field(1e-12)

    @field_validator("enumeration_cap", "check_cap", "soft_check_cap")
    @classmethod
    def validate_caps(cls, value: int) -> int:
        if not 1 <= value <= HARD_FEATURE_CAP:
            raise ValueError(f"Feature caps must be between 1 and {HARD_FEATURE_CAP}")
        return value

    @field_validator("default_binning")
    @classmethod
    def validate_binning(cls, value: str) -> str:
        normalized = (value or "quantile").strip().lower()
        allowed = {"quantile", "width"}
        if normalized not in allowed:
            raise ValueError(f"Unsupported MCI_DEFAULT_BINNING '{value}'. Use one of {sorted(allowed)}")
        return normalized

    @field_validator("default_permutations", "default_bins", "workers")
    @classmethod
    def validate_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("Permutation, bin and worker counts must be greater than zero")
        return value

    @field_validator("oracle_timeout_seconds", "monotone_tolerance")
    @classmethod
    def validate_non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("Timeouts and tolerances must be non-negative")
        return value


@lru_cache()
def get_settings() -> Settings:
    """Return cached settings instance."""
    return Settings()

