# src/config.py
# Файл для завантаження конфігурації зі змінних середовища

import os
from dataclasses import dataclass
from dotenv import load_dotenv

# Завантажуємо змінні з файлу .env
load_dotenv()

_TRUTHY = {"1", "true", "yes", "y", "on", "t"}


def _env(name: str, default: str) -> str:
    return os.getenv(f"LAB_{name}", default)


@dataclass
class Settings:
    """
    Клас для зберігання налаштувань лабораторії, завантажених зі змінних середовища (LAB_*).
    """
    SEED: int = 0x5EED
    # k-розклад: k = 2^j, j = K_MIN_EXP..K_MAX_EXP
    K_MIN_EXP: int = 4
    K_MAX_EXP: int = 14
    K_GUARD_EXP: int = 40
    QUAD_ORDER: int = 8
    FIT_POINTS: int = 4
    JOBS: int = 1
    # Tolerances
    LIMIT_TOL: float = 1e-3
    ERROR_BAR_FACTOR: float = 3.0
    MASS_TOL: float = 1e-10
    ATOM_TOL: float = 1e-9
    MOMENT_TOL: float = 1e-8
    RAY_RADIUS: float = 1e6
    RAY_TOL: float = 1e-4
    CLAMP_RADIUS: float = 1.0
    BLOWUP_EXPONENT: float = 1.2
    WITNESS_MARGIN: float = 1e-6
    ENVELOPE_TOL: float = 0.05
    # Ledger / metrics / logging
    DATABASE_URL: str | None = None
    METRICS_FILE: str | None = None
    LOG_LEVEL: str = "INFO"

    def __post_init__(self):
        # Конвертація числових значень
        try:
            self.SEED = int(str(self.SEED), 0)
            for name in ("K_MIN_EXP", "K_MAX_EXP", "K_GUARD_EXP", "QUAD_ORDER", "FIT_POINTS", "JOBS"):
                setattr(self, name, int(getattr(self, name)))
            for name in ("LIMIT_TOL", "ERROR_BAR_FACTOR", "MASS_TOL", "ATOM_TOL", "MOMENT_TOL",
                         "RAY_RADIUS", "RAY_TOL", "CLAMP_RADIUS", "BLOWUP_EXPONENT",
                         "WITNESS_MARGIN", "ENVELOPE_TOL"):
                setattr(self, name, float(getattr(self, name)))
        except (ValueError, TypeError) as e:
            raise ValueError(f"Помилка конвертації змінних середовища в числа: {e}")

        if self.K_MIN_EXP < 0 or self.K_MAX_EXP < self.K_MIN_EXP:
            raise ValueError(f"Некоректний k-розклад: 2^{self.K_MIN_EXP}..2^{self.K_MAX_EXP}")
        if self.K_MAX_EXP > self.K_GUARD_EXP:
            raise ValueError(f"K_MAX_EXP={self.K_MAX_EXP} exceeds overflow guard 2^{self.K_GUARD_EXP}")
        if self.FIT_POINTS < 2:
            raise ValueError("FIT_POINTS must be at least 2")
        if self.QUAD_ORDER < 1:
            raise ValueError("QUAD_ORDER must be positive")
        if self.JOBS < 1:
            raise ValueError("JOBS must be positive")
        if self.CLAMP_RADIUS <= 0:
            raise ValueError("CLAMP_RADIUS must be positive")
        if not self.DATABASE_URL:
            self.DATABASE_URL = None
        if not self.METRICS_FILE:
            self.METRICS_FILE = None
        self.LOG_LEVEL = str(self.LOG_LEVEL).upper()


def is_truthy(value: str | int | float | None) -> bool:
    return value is not None and str(value).strip().lower() in _TRUTHY


def load_settings() -> Settings:
    """Налаштування з LAB_<ПОЛЕ>; рядки перетворюються та перевіряються в Settings.__post_init__."""
    return Settings(
        SEED=_env("SEED", "0x5EED"),
        K_MIN_EXP=_env("K_MIN_EXP", "4"),
        K_MAX_EXP=_env("K_MAX_EXP", "14"),
        K_GUARD_EXP=_env("K_GUARD_EXP", "40"),
        QUAD_ORDER=_env("QUAD_ORDER", "8"),
        FIT_POINTS=_env("FIT_POINTS", "4"),
        JOBS=_env("JOBS", "1"),
        LIMIT_TOL=_env("LIMIT_TOL", "1e-3"),
        ERROR_BAR_FACTOR=_env("ERROR_BAR_FACTOR", "3"),
        MASS_TOL=_env("MASS_TOL", "1e-10"),
        ATOM_TOL=_env("ATOM_TOL", "1e-9"),
        MOMENT_TOL=_env("MOMENT_TOL", "1e-8"),
        RAY_RADIUS=_env("RAY_RADIUS", "1e6"),
        RAY_TOL=_env("RAY_TOL", "1e-4"),
        CLAMP_RADIUS=_env("CLAMP_RADIUS", "1"),
        BLOWUP_EXPONENT=_env("BLOWUP_EXPONENT", "1.2"),
        WITNESS_MARGIN=_env("WITNESS_MARGIN", "1e-6"),
        ENVELOPE_TOL=_env("ENVELOPE_TOL", "0.05"),
        DATABASE_URL=os.getenv("LAB_DATABASE_URL"),
        METRICS_FILE=os.getenv("LAB_METRICS_FILE"),
        LOG_LEVEL=_env("LOG_LEVEL", "INFO"),
    )


# Створюємо екземпляр налаштувань
settings = load_settings()
