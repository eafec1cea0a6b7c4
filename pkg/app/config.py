"""
Configuration module for the calibration pipeline.
Loads process-level settings from environment variables with validation.

Experiment-level settings (dataset paths, recommender grid, trade-off axes)
live in INI files and are parsed by app.pipeline.config.
"""
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from app.core.exceptions import ConfigurationError
from app.core.logging import setup_logging

# Load environment variables from .env file
load_dotenv()

# ============== Logging Configuration ==============
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE: Optional[Path] = Path(os.getenv("LOG_FILE")) if os.getenv("LOG_FILE") else None

# ============== Reproducibility ==============
# Root seed; every split, shuffle and factor initialisation is derived from it
DEFAULT_SEED = int(os.getenv("CALIB_SEED", "42"))

# ============== Parallelism ==============
# Worker processes for post-processing and evaluation (1 = run inline)
DEFAULT_JOBS = int(os.getenv("CALIB_JOBS", "1"))

# ============== Paths ==============
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = Path(os.getenv("CALIB_DATA_DIR", str(BASE_DIR / "data")))
OUTPUT_DIR = Path(os.getenv("CALIB_OUTPUT_DIR", str(BASE_DIR / "outputs")))


# ============== Validation ==============
def validate_settings() -> None:
    """Validate environment-driven settings."""
    if DEFAULT_JOBS < 1:
        raise ConfigurationError(
            "CALIB_JOBS must be at least 1",
            details={"CALIB_JOBS": DEFAULT_JOBS},
        )
    if LOG_LEVEL.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        raise ConfigurationError(
            "LOG_LEVEL is not a valid logging level",
            details={"LOG_LEVEL": LOG_LEVEL},
        )


def ensure_output_dirs(output_dir: Optional[Path] = None) -> Path:
    """Ensure the output directory exists and return it."""
    target = output_dir or OUTPUT_DIR
    target.mkdir(parents=True, exist_ok=True)
    return target


def configure_logging(level: Optional[str] = None) -> None:
    """Install the application log handlers using the environment settings."""
    setup_logging(level=level or LOG_LEVEL, log_file=LOG_FILE)


# ============== Settings Class ==============
class AppConfig:
    """Read-only view over the environment settings."""
    LOG_LEVEL = LOG_LEVEL
    LOG_FILE = LOG_FILE
    DEFAULT_SEED = DEFAULT_SEED
    DEFAULT_JOBS = DEFAULT_JOBS
    BASE_DIR = BASE_DIR
    DATA_DIR = DATA_DIR
    OUTPUT_DIR = OUTPUT_DIR


settings = AppConfig()
