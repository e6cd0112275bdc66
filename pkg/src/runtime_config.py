# src/runtime_config.py
# Runtime tolerance overrides (per scenario file) merged over env settings.

from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional

from config import settings

# scenario key -> (Tolerances field, converter)
_TOLERANCE_KEYS = {
    "limit_match": ("limit", float),
    "error_bar_factor": ("error_bar_factor", float),
    "mass": ("mass", float),
    "atom": ("atom", float),
    "moment": ("moment", float),
    "ray": ("ray", float),
    "clamp_radius": ("clamp_radius", float),
    "fit_points": ("fit_points", int),
    "envelope": ("envelope", float),
}


@dataclass(frozen=True)
class Tolerances:
    limit: float
    error_bar_factor: float
    mass: float
    atom: float
    moment: float
    ray: float
    clamp_radius: float
    fit_points: int
    envelope: float

    def pass_threshold(self, error_bar: float) -> float:
        """Limit-match threshold max(limit, factor * error_bar)."""
        return max(self.limit, self.error_bar_factor * abs(error_bar))


def default_tolerances() -> Tolerances:
    return Tolerances(
        limit=settings.LIMIT_TOL,
        error_bar_factor=settings.ERROR_BAR_FACTOR,
        mass=settings.MASS_TOL,
        atom=settings.ATOM_TOL,
        moment=settings.MOMENT_TOL,
        ray=settings.RAY_TOL,
        clamp_radius=settings.CLAMP_RADIUS,
        fit_points=settings.FIT_POINTS,
        envelope=settings.ENVELOPE_TOL,
    )


def parse_overrides(raw: Optional[Mapping[str, object]]) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, value in (raw or {}).items():
        if key not in _TOLERANCE_KEYS:
            raise ValueError(f"Невідомий допуск: {key}")
        field, conv = _TOLERANCE_KEYS[key]
        try:
            converted = conv(value)
        except (TypeError, ValueError):
            raise ValueError(f"Некоректне значення допуску {key}={value!r}")
        if converted <= 0:
            raise ValueError(f"Допуск {key} має бути додатним")
        out[field] = converted
    return out


def effective_tolerances(overrides: Optional[Mapping[str, object]] = None) -> Tolerances:
    """Merge env settings with parsed overrides."""
    return replace(default_tolerances(), **dict(overrides or {}))


def resolve(tol: Optional[Tolerances]) -> Tolerances:
    return tol if tol is not None else default_tolerances()
