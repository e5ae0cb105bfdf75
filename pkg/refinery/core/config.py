"""
Process settings using Pydantic Settings.
"""
import os
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from REFINERY_* environment variables and .env."""

    model_config = SettingsConfigDict(
        env_prefix="REFINERY_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    APP_NAME: str = "class-refinery"
    APP_VERSION: str = "1.0.0"

    # Worker pool - None lets the pool pick a default
    THREADS: Optional[int] = Field(default=None, ge=1)

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    DEFAULT_SEED: int = 42

    @property
    def worker_count(self) -> int:
        """Effective worker count for the pool."""
        if self.THREADS:
            return self.THREADS
        return min(8, os.cpu_count() or 1)


@lru_cache()
def get_settings() -> Settings:
    """Cached settings instance."""
    return Settings()


settings = get_settings()
