# src/limits.py
# Точні інтеграли I_k = ∫ g f₀(u_k) ψ(w_k) dx та екстраполяція k -> ∞

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from compactify import RingFunction, TestBattery, lift
from config import settings
from families import PiecewiseFamily
from measures import DMTriple, integrate_triple
from metrics import INTEGRALS_TOTAL
from quadrature import integrate_pieces
from runtime_config import Tolerances, resolve
from utils import parallel_map

logger = logging.getLogger(__name__)


class ScheduleError(ValueError):
    """k outside the admissible schedule (overflow guard)."""


def default_schedule(k_max_exp: Optional[int] = None, k_min_exp: Optional[int] = None) -> Tuple[int, ...]:
    hi = settings.K_MAX_EXP if k_max_exp is None else int(k_max_exp)
    lo = settings.K_MIN_EXP if k_min_exp is None else int(k_min_exp)
    if hi > settings.K_GUARD_EXP:
        raise ScheduleError(f"k_max = 2^{hi} exceeds the overflow guard 2^{settings.K_GUARD_EXP}")
    if hi < lo:
        raise ScheduleError(f"empty schedule 2^{lo}..2^{hi}")
    return tuple(2 ** j for j in range(lo, hi + 1))


def _check_k(k: int) -> int:
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > 2 ** settings.K_GUARD_EXP:
        raise ScheduleError(f"k={k} exceeds the overflow guard 2^{settings.K_GUARD_EXP}")
    return k


def functional_value(family: PiecewiseFamily, k: int, g: Callable, f0: RingFunction, psi0: RingFunction,
                     p: Optional[float] = None, order: Optional[int] = None,
                     swap: bool = False, q: Optional[float] = None) -> float:
    """
    I_k = ∫_Ω g(x) f₀(u_k) ψ₀(w_k)(1+|w_k|^p) dx, exact per piece.
    swap=True lifts f₀ by q instead: ∫ g f₀(u_k)(1+|u_k|^q) ψ₀(w_k) dx.
    """
    k = _check_k(k)
    t = family.pieces(k)
    if swap:
        f, psi = lift(f0, family.q if q is None else q), psi0
    else:
        f, psi = f0, lift(psi0, family.p if p is None else p)
    INTEGRALS_TOTAL.labels(kind="family").inc()
    return integrate_pieces(t.left, t.right, t.u_left, t.slope, t.w, g, f, psi,
                            kinks=f.kinks, order=order, radial_dim=family.dimension)


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error_bar: float
    schedule: Tuple[int, ...]
    values: Tuple[float, ...]
    slope: float = 0.0
    diverging: bool = False
    warning: str = ""

    @property
    def last(self) -> float:
        return self.values[-1]


def fit_limit(schedule: Sequence[int], values: Sequence[float], fit_points: int) -> Tuple[float, float, float]:
    """Least-squares a + b/k on the tail; returns (a, b, error bar)."""
    ks = np.asarray(schedule[-fit_points:], dtype=float)
    ys = np.asarray(values[-fit_points:], dtype=float)
    design = np.column_stack([np.ones_like(ks), 1.0 / ks])
    (a, b), *_ = np.linalg.lstsq(design, ys, rcond=None)
    residual = float(np.max(np.abs(design @ np.array([a, b]) - ys)))
    return float(a), float(b), residual + abs(float(ys[-1]) - float(a))


def limit_extrapolate(family: PiecewiseFamily, g: Callable, f0: RingFunction, psi0: RingFunction,
                      p: Optional[float] = None, schedule: Optional[Sequence[int]] = None,
                      order: Optional[int] = None, jobs: Optional[int] = None,
                      tol: Optional[Tolerances] = None, swap: bool = False,
                      q: Optional[float] = None) -> LimitEstimate:
    tol = resolve(tol)
    schedule = tuple(int(k) for k in (schedule or default_schedule()))
    for k in schedule:
        _check_k(k)
    values = parallel_map(
        lambda k: functional_value(family, k, g, f0, psi0, p=p, order=order, swap=swap, q=q),
        schedule, jobs or settings.JOBS,
    )
    return estimate_from_values(family.name, schedule, values, tol)


def estimate_from_values(name: str, schedule: Sequence[int], values: Sequence[float],
                         tol: Optional[Tolerances] = None) -> LimitEstimate:
    """Fit a + b/k on the schedule tail and flag growing increments."""
    tol = resolve(tol)
    schedule, values = tuple(schedule), tuple(float(v) for v in values)
    n_fit = min(tol.fit_points, len(schedule))
    if n_fit < 2:
        return LimitEstimate(values[-1], 0.0, schedule, values)
    a, b, bar = fit_limit(schedule, values, n_fit)
    steps = np.abs(np.diff(values[-n_fit:]))
    diverging = bool(len(steps) >= 2 and steps[-1] > steps[-2] + 1e-12 * max(1.0, abs(a)))
    warning = ""
    if diverging:
        warning = f"{name}: increments grow along the schedule ({steps[-2]:.3g} -> {steps[-1]:.3g})"
        logger.warning(warning)
    return LimitEstimate(a, bar, schedule, values, b, diverging, warning)


@dataclass(frozen=True)
class CheckRow:
    g: str
    f0: str
    psi0: str
    k: int
    value_k: float
    limit: float
    error_bar: float
    predicted: float
    discrepancy: float
    passed: bool


@dataclass(frozen=True)
class TripleCheckReport:
    family: str
    triple: str
    rows: Tuple[CheckRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> List[CheckRow]:
        return [r for r in self.rows if not r.passed]


def empirical_triple_check(family: PiecewiseFamily, triple: DMTriple, battery: TestBattery,
                           p: Optional[float] = None, schedule: Optional[Sequence[int]] = None,
                           jobs: Optional[int] = None, tol: Optional[Tolerances] = None,
                           order: Optional[int] = None) -> TripleCheckReport:
    """Extrapolated limits of the family against integrate_triple, member by member."""
    tol = resolve(tol)
    p = family.p if p is None else p
    jobs = jobs or settings.JOBS

    def check(member) -> CheckRow:
        est = limit_extrapolate(family, member.g, member.f0, member.psi0, p=p,
                                schedule=schedule, order=order, jobs=1, tol=tol)
        predicted = integrate_triple(triple, member.g, member.f0, member.psi0, tol=tol)
        diff = abs(est.value - predicted)
        g, f0, psi0 = member.label
        return CheckRow(g, f0, psi0, est.schedule[-1], est.last, est.value, est.error_bar,
                        predicted, diff, diff <= tol.pass_threshold(est.error_bar))

    rows = tuple(parallel_map(check, battery.members, jobs))
    failed = sum(not r.passed for r in rows)
    if failed:
        logger.info(f"{family.name} vs {triple.name}: {failed}/{len(rows)} battery members disagree")
    return TripleCheckReport(family.name, triple.name, rows)
