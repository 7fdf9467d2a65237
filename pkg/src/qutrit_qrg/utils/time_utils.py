from __future__ import annotations

from datetime import datetime, timezone


def now_ms() -> int:
    return int(datetime.now(tz=timezone.utc).timestamp() * 1000)


def elapsed_s(start_ms: int) -> float:
    return (now_ms() - start_ms) / 1000.0
