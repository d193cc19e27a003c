"""Configuration settings for the qgsp toolkit.

This module provides the settings shared by the numerical modules, the sweep workers
and the command-line front end. Values come from the environment (prefix ``QGSP_``)
or a ``.env`` file in the working directory.
"""

# Import from pydantic_settings for environment-backed settings
from pydantic_settings import BaseSettings, SettingsConfigDict

# Import dotenv for loading environment variables
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


class Settings(BaseSettings):
    """Configuration settings for the application."""
    # Toolkit metadata
    APP_TITLE: str = "qgsp"
    APP_VERSION: str = "1.0.0"

    # Dense register cap in qubits (2^14 by default), QGSP_MAX_QUBITS overrides it
    MAX_QUBITS: int = 14

    # Tolerances
    STRUCTURAL_TOL: float = 1e-10
    SPECTRAL_TOL: float = 1e-9

    # Sign polynomial construction
    REMEZ_MAX_ITER: int = 200
    REMEZ_GRID_MIN: int = 10_000
    EPS_FLOOR: float = 1e-12

    # Phase factor solver
    PHASE_MAX_ITER: int = 20_000
    PHASE_CHECK_POINTS: int = 1000

    # Amplification and amplitude estimation
    AMPLIFICATION_RETRY_CAP: int = 50
    AE_VOTE_CONSTANT: float = 18.0
    # system qubits allowed in circuit_qpe amplitude estimation
    CIRCUIT_QPE_MAX_QUBITS: int = 4

    # Output settings
    OUTPUT_DIR: str = "./results"

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Worker pool settings for sweeps
    WORKERS: int = 1
    CELERY_EAGER: bool = True
    REDIS_URI: str = "redis://localhost:6379/0"

    model_config = SettingsConfigDict(env_file='.env', env_prefix='QGSP_', extra='ignore')


# Create settings instance
settings = Settings()
