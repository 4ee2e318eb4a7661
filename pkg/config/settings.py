"""
Settings class for managing configuration.
"""
from pathlib import Path
from typing import Optional
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

VALID_LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']


class Settings(BaseSettings):
    """Settings management using Pydantic. Every field maps to a LIVE_* variable."""

    model_config = SettingsConfigDict(
        env_prefix='LIVE_',
        env_file='.env',
        env_file_encoding='utf-8',
        extra='ignore',
    )

    # Base paths
    BASE_DIR: Path = Path(__file__).resolve().parent.parent
    LOG_DIR: Path = BASE_DIR / "logs"
    OUTPUT_DIR: Path = Path("results")

    # Logging Settings (LIVE_LOG controls verbosity)
    LOG: str = "INFO"
    LOG_TO_FILE: bool = False
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Inference defaults
    DEFAULT_SEED: int = 20240101
    DEFAULT_ALPHA: float = 0.05
    DEFAULT_THRESHOLD: float = 0.5
    DEFAULT_JOBS: int = 1

    # Artifact version embedded in every run manifest
    ARTIFACT_VERSION: str = "1.0.0"
    SCHEMA_VERSION: int = 1

    # Optional override of the simulation replication count
    DEFAULT_REPS: Optional[int] = None

    @field_validator('LOG')
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        if v.upper() not in VALID_LOG_LEVELS:
            raise ValueError(f'Invalid log level. Must be one of {VALID_LOG_LEVELS}')
        return v.upper()

    @field_validator('DEFAULT_ALPHA', 'DEFAULT_THRESHOLD')
    @classmethod
    def validate_open_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError('must lie strictly inside (0, 1)')
        return v

    @field_validator('DEFAULT_SEED')
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError('DEFAULT_SEED must be a 64-bit unsigned integer')
        return v

    @field_validator('DEFAULT_JOBS')
    @classmethod
    def validate_jobs(cls, v: int) -> int:
        if v < 1:
            raise ValueError('DEFAULT_JOBS must be positive')
        return v

    @field_validator('DEFAULT_REPS')
    @classmethod
    def validate_reps(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError('DEFAULT_REPS must be positive')
        return v


_settings_instance = Settings()

# Expose convenience, module-level constants
LOG_LEVEL = _settings_instance.LOG
LOG_FORMAT = _settings_instance.LOG_FORMAT
LOG_DIR = _settings_instance.LOG_DIR
LOG_TO_FILE = _settings_instance.LOG_TO_FILE
DEFAULT_SEED = _settings_instance.DEFAULT_SEED
DEFAULT_ALPHA = _settings_instance.DEFAULT_ALPHA
DEFAULT_THRESHOLD = _settings_instance.DEFAULT_THRESHOLD
ARTIFACT_VERSION = _settings_instance.ARTIFACT_VERSION
SCHEMA_VERSION = _settings_instance.SCHEMA_VERSION

# Public instance for direct import usage
settings = _settings_instance
