# main.py

import sys
import logging

from src.core.config import LOG_LEVEL
from src.cli import main

# Logging configuration
logging.basicConfig(
    level=LOG_LEVEL,
    format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
)
logger = logging.getLogger("elemlam")


if __name__ == "__main__":
    logger.debug(f"argv={sys.argv[1:]} log_level={LOG_LEVEL}")
    code = main()
    if code:
        logger.debug(f"exit code {code}")
    sys.exit(code)
