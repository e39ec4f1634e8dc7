"""
Logging setup - BD-IRS THz Simulator

Every entry point (CLI, router, standalone module runs) calls setup_logging();
repeated calls are no-ops.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

_CONFIGURED = False

LOG_FORMAT = "%(asctime)s | %(levelname)-7s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    global _CONFIGURED
    if _CONFIGURED:
        return

    # config reads .env on import
    from config import LOG_FILE, LOG_LEVEL

    level_name = (level or LOG_LEVEL or "INFO").upper()
    handlers = [logging.StreamHandler(sys.stderr)]

    target = log_file or LOG_FILE
    if target:
        path = Path(target)
        if not path.is_absolute():
            path = Path(__file__).resolve().parent / path
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=handlers,
    )
    _CONFIGURED = True
    logging.getLogger(__name__).debug(f"Logging configured (level={level_name}, file={target})")
