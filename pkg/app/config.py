"""
Configuration for the QIPA Separation Lab.

Values are read from environment variables prefixed with ``QIPA_LAB_``
(or a local ``.env`` file) and fall back to the defaults below.
"""

from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Lab-wide defaults shared by the CLI, the HTTP surface and the library.

    Example:
        QIPA_LAB_ENUMERATION_GUARD=20 python -m app.cli analyze --graph g.txt
    """

    model_config = SettingsConfigDict(
        env_prefix="QIPA_LAB_", env_file=".env", extra="ignore"
    )

    # Exhaustive enumeration holds 2^n doubles; 24 qubits is ~134 MB
    enumeration_guard: int = Field(default=24, ge=1, le=30)

    # Separation constants c, d, k of the inequality system
    default_c: float = Field(default=1.0, gt=0)
    default_d: float = Field(default=1.0, gt=0)
    default_k: float = Field(default=1.0, gt=0)

    # Tikhonov base for McLachlan solves (scaled by max(diag F, 1))
    regularization: float = Field(default=1e-8, ge=0)

    # Relative slack on absolute-gap and lower-bound comparisons
    comparison_rtol: float = Field(default=1e-9, ge=0, lt=1e-3)

    # Cap on alpha * max|h| * dt in the blow-up scan
    max_oracle_exponent: float = Field(default=0.25, gt=0, le=350)

    max_iter: int = Field(default=10_000, ge=1)
    output_dir: Path = Path("runs")
    log_level: str = "INFO"

    # CORS origins for the HTTP surface
    cors_origins: list[str] = ["http://localhost:3000", "http://127.0.0.1:3000"]


@lru_cache
def get_settings() -> Settings:
    """
    Return the process-wide settings instance.

    Used as a FastAPI dependency; tests replace it through
    ``app.dependency_overrides``.
    """
    return Settings()
