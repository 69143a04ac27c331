"""
Configuration Module

This module contains configuration classes for kinward.
It provides a base configuration as well as settings for development, production,
and testing environments. Values are read from the environment, optionally
seeded from a ``.env`` file.
"""

import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    """
    Base configuration class.

    Attributes:
        DEBUG (bool): Enables or disables debug mode.
        TESTING (bool): Indicates if the application is in testing mode.
        LOG_LEVEL (str): Defines the logging level.
        LOG_TO_FILE (bool): Adds a rotating file handler to every logger.
        N_JOBS (int): Worker threads for replicate and SNP-block loops.
        SNP_BLOCK (int): SNP block width for kinship accumulation.
        RIDGE_EPSILON (float): Ridge added to the kinship diagonal before inversion.
        RIDGE_THRESHOLD (float): Smallest eigenvalue below which the ridge applies.
        FREQ_ITERS (int): Allele-frequency refinement iterations.
        FREQ_TOL (float): Refinement convergence threshold on max |dp|.
        NUM_PCS (int): Default number of principal components for PC adjustment.
        H2_TOL (float): Absolute tolerance of the heritability search.
        SEED (int): Default simulation seed.
        API_RATE_LIMIT (int): The API rate limit setting.
        API_MAX_CELLS (int): Largest genotype matrix (n * L) accepted by the API.
        MAX_CONTENT_LENGTH (int): Largest request body in bytes accepted by the API.
        SECRET_KEY (str): Secret key used for application security.
        VERSION (str): Application version.
        HOST (str): Host address for binding.
        PORT (int): Port number for binding.
        CORS_ORIGINS (str): Allowed origins for Cross-Origin Resource Sharing.
    """

    DEBUG = os.environ.get("DEBUG", "False").lower() == "true"
    TESTING = os.environ.get("TESTING", "False").lower() == "true"
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")
    LOG_TO_FILE = os.environ.get("LOG_TO_FILE", "False").lower() == "true"
    LOG_FILE_PATH = os.environ.get("LOG_FILE_PATH")

    N_JOBS = int(os.environ.get("KINWARD_N_JOBS", "1"))
    SNP_BLOCK = int(os.environ.get("KINWARD_SNP_BLOCK", "2048"))
    RIDGE_EPSILON = float(os.environ.get("KINWARD_RIDGE_EPSILON", "1e-6"))
    RIDGE_THRESHOLD = float(os.environ.get("KINWARD_RIDGE_THRESHOLD", "1e-8"))
    FREQ_ITERS = int(os.environ.get("KINWARD_FREQ_ITERS", "1"))
    FREQ_TOL = float(os.environ.get("KINWARD_FREQ_TOL", "1e-6"))
    NUM_PCS = int(os.environ.get("KINWARD_NUM_PCS", "10"))
    H2_TOL = float(os.environ.get("KINWARD_H2_TOL", "1e-6"))
    SEED = int(os.environ.get("KINWARD_SEED", "20100101"))

    API_RATE_LIMIT = int(os.environ.get("API_RATE_LIMIT", "500"))
    API_MAX_CELLS = int(os.environ.get("KINWARD_API_MAX_CELLS", "2000000"))
    MAX_CONTENT_LENGTH = int(os.environ.get("KINWARD_MAX_CONTENT_LENGTH", str(64 * 1024 * 1024)))
    SECRET_KEY = os.environ.get("SECRET_KEY", "development-key-change-in-production")

    VERSION = "0.1.0"
    HOST = os.environ.get("HOST", "0.0.0.0")
    PORT = int(os.environ.get("PORT", 5003))
    CORS_ORIGINS = os.environ.get("CORS_ORIGINS", "*")

    DEFAULT_RATE_LIMITS = ["1000 per day", f"{API_RATE_LIMIT} per minute"]


class DevelopmentConfig(Config):
    """
    Development configuration class.

    Inherits from Config and sets configuration settings specific to the development environment.
    """

    DEBUG = True
    LOG_LEVEL = "DEBUG"
    CORS_ORIGINS = os.environ.get(
        "CORS_ORIGINS", "http://localhost:3000,http://127.0.0.1:3000"
    )


class ProductionConfig(Config):
    """
    Production configuration class.

    Inherits from Config and sets configuration settings specific to the production environment.
    """

    DEBUG = False
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "WARNING")


class TestingConfig(Config):
    """
    Testing configuration class.

    Inherits from Config and sets configuration settings specific to the testing environment.
    """

    TESTING = True
    DEBUG = True
    LOG_LEVEL = "DEBUG"
    N_JOBS = 1


def get_config(env: str = None):
    if env is None:
        env = os.environ.get("KINWARD_ENV", "development")
    cfg_map = {
        "development": DevelopmentConfig,
        "production": ProductionConfig,
        "testing": TestingConfig,
    }
    return cfg_map.get(env.lower(), DevelopmentConfig)
