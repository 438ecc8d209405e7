"""
Lab configuration, read from env vars / .env file.
"""

from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = True

    # Storage
    CCNP_LAB_DATA: str = "data"
    RESULTS_DIR: str = "results"
    RUNS_DIR: str = "run"

    # Run audit ledger
    DATABASE_URL: str = "sqlite:///results/ccnp_lab.db"

    # Runner
    DEFAULT_JOBS: int = 1

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "extra": "ignore",
    }

    @property
    def data_root(self) -> Path:
        return Path(self.CCNP_LAB_DATA)

    @property
    def results_root(self) -> Path:
        return Path(self.RESULTS_DIR)

    @property
    def runs_root(self) -> Path:
        return Path(self.RUNS_DIR)


@lru_cache()
def get_settings() -> Settings:
    return Settings()
