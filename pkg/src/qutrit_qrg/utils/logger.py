from __future__ import annotations

import logging
import sys
from typing import Dict

_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
_loggers: Dict[str, logging.Logger] = {}


def setup_logger(name: str = "qutrit_qrg", level: str = "INFO") -> logging.Logger:
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    # stdout carries the JSON/CSV results
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter(_FORMAT))
    logger.addHandler(h)
    logger.propagate = False
    _loggers[name] = logger
    return logger


def set_log_level(level: str) -> None:
    lvl = getattr(logging, str(level).upper(), None)
    if not isinstance(lvl, int):
        raise ValueError(f"unknown log level: {level}")
    for logger in _loggers.values():
        logger.setLevel(lvl)
