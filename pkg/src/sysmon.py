"""
sysmon: run bookkeeping for the command line (recent warnings + elapsed time).

The handler keeps WARNING+ records in memory so the pass/fail summary can repeat them.
"""
from __future__ import annotations

import time
from typing import Any, Dict, Optional, List
import logging
from collections import deque

from utils import format_duration

_run_start_ts: float = time.time()
_WARNINGS: deque[Dict[str, Any]] = deque(maxlen=50)


class _MemoryWarningHandler(logging.Handler):
    def emit(self, record: logging.LogRecord) -> None:  # type: ignore[override]
        try:
            if record.levelno >= logging.WARNING:
                _WARNINGS.append({
                    "ts": int(getattr(record, 'created', time.time())),
                    "level": record.levelname,
                    "name": record.name,
                    "msg": record.getMessage(),
                })
        except Exception:
            pass


def install_log_capture(logger_name: Optional[str] = None) -> None:
    """Install a memory handler to capture recent WARNINGs. Idempotent."""
    logger = logging.getLogger(logger_name) if logger_name else logging.getLogger()
    for h in logger.handlers:
        if isinstance(h, _MemoryWarningHandler):
            return
    logger.addHandler(_MemoryWarningHandler(level=logging.WARNING))


def clear_warnings() -> None:
    _WARNINGS.clear()


def get_recent_warnings(limit: int = 10) -> List[Dict[str, Any]]:
    return list(_WARNINGS)[-limit:]


def set_run_start(ts: Optional[float] = None) -> None:
    global _run_start_ts
    _run_start_ts = float(ts or time.time())


def elapsed_seconds() -> float:
    return max(0.0, time.time() - _run_start_ts)


def format_elapsed() -> str:
    return format_duration(elapsed_seconds())
