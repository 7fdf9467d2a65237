from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List

import yaml


@dataclass(frozen=True)
class RunConfig:
    log_level: str = "INFO"
    jobs: int = 1
    seed: int = 20240611

    J: float = 1.0
    steps: int = 9

    delta_min: float = 0.0
    delta_max: float = 4.0
    points: int = 400
    depths: List[int] = field(default_factory=lambda: [9, 10, 11])
    refine_tol: float = 1e-4

    zero_floor: float = 1e-12
    singular_tol: float = 1e-9
    fixed_point_tol: float = 1e-12
    haldane_floor: float = 1e-6

    gnuplot: bool = False

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """New config with every non-None override applied and validated."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        vals = {k: v for k, v in overrides.items() if v is not None}
        return _validated(replace(self, **_coerce(vals)))

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _as_bool(key: str, v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "yes", "1", "false", "no", "0"):
        return v.lower() in ("true", "yes", "1")
    raise ValueError(f"{key}: expected a boolean, got {v!r}")


def _as_depths(v: Any) -> List[int]:
    if isinstance(v, (int, str)):
        v = [x for x in str(v).split(",") if x.strip()]
    return [int(x) for x in v]


def _coerce(raw: Dict[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, v in raw.items():
        try:
            if key == "log_level":
                out[key] = str(v).upper()
            elif key in ("jobs", "seed", "steps", "points"):
                out[key] = int(v)
            elif key == "depths":
                out[key] = _as_depths(v)
            elif key == "gnuplot":
                out[key] = _as_bool(key, v)
            else:
                out[key] = float(v)
        except (TypeError, ValueError) as e:
            raise ValueError(f"{key}: invalid value {v!r} ({e})") from e
    return out


def _validated(cfg: RunConfig) -> RunConfig:
    if cfg.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ValueError(f"log_level: unknown level {cfg.log_level!r}")
    if cfg.jobs < 1:
        raise ValueError(f"jobs: must be >= 1, got {cfg.jobs}")
    if cfg.points < 2:
        raise ValueError(f"points: must be >= 2, got {cfg.points}")
    if cfg.steps < 0:
        raise ValueError(f"steps: must be >= 0, got {cfg.steps}")
    if not cfg.depths:
        raise ValueError("depths: must be nonempty")
    if any(k < 0 for k in cfg.depths):
        raise ValueError(f"depths: every depth must be >= 0, got {cfg.depths}")
    if not cfg.delta_min < cfg.delta_max:
        raise ValueError(f"delta_min ({cfg.delta_min}) must be < delta_max ({cfg.delta_max})")
    if not cfg.J > 0.0:
        raise ValueError(f"J: must be > 0, got {cfg.J}")
    for key in ("refine_tol", "zero_floor", "singular_tol", "fixed_point_tol", "haldane_floor"):
        if not getattr(cfg, key) > 0.0:
            raise ValueError(f"{key}: must be > 0, got {getattr(cfg, key)}")
    return cfg


def load_config(path: str) -> RunConfig:
    p = Path(path)
    try:
        raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ValueError(f"{path}: invalid YAML ({e})") from e
    if raw is None:
        return RunConfig()
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a flat mapping at the top level")
    return RunConfig().merged(raw)
