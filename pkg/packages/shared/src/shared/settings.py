"""Runtime settings loaded from the environment with pydantic-settings."""

from typing import Literal

from pydantic_settings import BaseSettings


class BaseAppSettings(BaseSettings):
    """Base settings for every entry point in the workspace."""

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    environment: Literal["development", "staging", "production"] = "development"

    class Config:
        env_file = ".env"
        extra = "ignore"


class LabSettings(BaseAppSettings):
    """Settings for the dcs-lab benchmark harness.

    ``DCS_LAB_SEED`` overrides the ``base_seed`` of any experiment config.
    """

    dcs_lab_seed: int | None = None
    dcs_lab_threads: int = 1
    dcs_lab_output_dir: str | None = None
    dcs_lab_json_logs: bool | None = None
