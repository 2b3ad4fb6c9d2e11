"""Application configurations loaded from environment variables."""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application configuration settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="STACKELBERG_",
        case_sensitive=False,
        extra="ignore",
    )

    # application configurations
    ENVIRONMENT: str = Field(default="development", description="Environment name")
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")

    # paths
    DATA_DIR: Path = Field(
        default=Path("data"), description="Directory containing shipped scenarios"
    )
    OUTPUT_DIR: Path = Field(
        default=Path("runs"), description="Default directory for run artifacts"
    )
    CACHE_DIR: Path = Field(
        default=Path("runs/cache"), description="Directory of cached adjoint states"
    )

    # execution
    THREADS: int = Field(
        default=1, description="Worker threads for concurrent fitness evaluations"
    )
    DEFAULT_SEED: int = Field(
        default=0, description="Seed used when neither scenario nor CLI sets one"
    )

    # artifact formats
    CSV_FLOAT_FORMAT: str = Field(
        default="%.17g", description="Float format for CSV exports (full precision)"
    )
    VTK_STRIDE: int = Field(
        default=25, description="Write one VTK snapshot every this many time steps"
    )
    ADJOINT_CACHE_NAME: str = Field(
        default="adjoint_cache.npz", description="File name of the cached adjoint state"
    )
    RUN_LOG_NAME: str = Field(
        default="run.log", description="File name of the per-run log"
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is a standard logging level name."""
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in allowed:
            raise ValueError(f"LOG_LEVEL must be one of {sorted(allowed)}")
        return v.upper()

    @field_validator("THREADS", "VTK_STRIDE")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Validate counts are positive."""
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @property
    def scenarios_dir(self) -> Path:
        """Directory holding the shipped scenario files."""
        return self.DATA_DIR / "scenarios"


# global instance
settings = Settings()
