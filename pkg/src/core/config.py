# src/core/config.py

import os
import logging
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

# Environment
ENV = os.environ.get("ENV", "development").lower()
IS_PRODUCTION = ENV == "production"

# Logging
LOG_LEVEL = os.environ.get("LOG_LEVEL", "WARNING").upper()

# Reduction
DEFAULT_FUEL = int(os.environ.get("ELEMLAM_FUEL", "10000000"))

# 導出木・項のノード数上限
NODE_BUDGET = int(os.environ.get("ELEMLAM_NODE_BUDGET", "1000000"))

# 2_k(n) を計算するときのビット数上限
TOWER_BIT_BUDGET = int(os.environ.get("ELEMLAM_TOWER_BITS", "1000000"))

# Cache settings
STDTERM_CACHE_SIZE = int(os.environ.get("ELEMLAM_STDTERM_CACHE", "512"))

# Fuel used when comparing subjects inside audits
AUDIT_FUEL = 1_000_000

_LOG_LEVELS = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}


# 起動時の設定検証
def validate_config():
    """Validate configuration on startup."""
    errors = []

    if LOG_LEVEL not in _LOG_LEVELS:
        errors.append(f"LOG_LEVEL must be one of {sorted(_LOG_LEVELS)}")

    if DEFAULT_FUEL < 1:
        errors.append("ELEMLAM_FUEL must be positive")

    if NODE_BUDGET < 1:
        errors.append("ELEMLAM_NODE_BUDGET must be positive")

    if TOWER_BIT_BUDGET < 64:
        errors.append("ELEMLAM_TOWER_BITS must be at least 64")

    if STDTERM_CACHE_SIZE < 1:
        errors.append("ELEMLAM_STDTERM_CACHE must be positive")

    if IS_PRODUCTION and LOG_LEVEL == "DEBUG":
        logger.warning("DEBUG logging enabled in production; pass reports will be verbose")

    if errors:
        for error in errors:
            logger.error(f"Configuration error: {error}")
        raise RuntimeError("Invalid configuration. See logs for details.")


# 起動時に設定を検証
validate_config()
