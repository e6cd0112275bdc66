# src/lsc.py
# Перевірка слабкої напівнеперервності знизу: розрив lim ∫h(u_k) - ∫h(u) та гранична умова концентрації

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from families import PiecewiseFamily
from limits import LimitEstimate
from measures import DMTriple
from quadrature import cut_interval, integrate_intervals
from quasiconvex import convex_envelope_1d
from represent import Integrand, concentration_term, integrand_extrapolate
from runtime_config import Tolerances, resolve

logger = logging.getLogger(__name__)

LSC = "lsc"
NOT_LSC = "not_lsc"
NO_VERDICT = "none"


def limit_functional(family: PiecewiseFamily, integrand: Integrand, order: Optional[int] = None) -> float:
    """∫_Ω h(x, u(x), ∇u(x)) dx on the closed-form limit pieces."""
    if not family.limit:
        raise ValueError(f"{family.name}: no closed-form limit declared")
    n = family.dimension
    total = 0.0
    for lp in family.limit:
        trace = (lp.value - lp.slope * lp.left, lp.slope)
        cuts = cut_interval(lp.left, lp.right, [trace], integrand.kinks())
        total += integrate_intervals(
            cuts[:-1], cuts[1:],
            lambda x, lp=lp: integrand(x, lp.value + lp.slope * (x - lp.left), lp.slope) * (x ** (n - 1) if n > 1 else 1.0),
            order,
        )
    if n > 1:
        total *= 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    return total


@dataclass(frozen=True)
class GapReport:
    family: str
    integrand: str
    limit: float
    error_bar: float
    at_limit: float
    gap: float

    def nonnegative(self, tol: Optional[Tolerances] = None) -> bool:
        return self.gap >= -resolve(tol).pass_threshold(self.error_bar)


def lsc_gap(family: PiecewiseFamily, integrand: Integrand, schedule: Optional[Sequence[int]] = None,
            jobs: Optional[int] = None, tol: Optional[Tolerances] = None) -> GapReport:
    """lim ∫ h(x,u_k,∇u_k) - ∫ h(x,u,∇u); the limit stands in for the liminf."""
    if not family.gradient_consistent:
        logger.warning(f"{family.name}: w_k is not ∇u_k, the gap says nothing about lsc in W^1,p")
    est: LimitEstimate = integrand_extrapolate(family, integrand, schedule, jobs, tol)
    at_limit = limit_functional(family, integrand)
    return GapReport(family.name, integrand.name, est.value, est.error_bar, at_limit, est.value - at_limit)


def plessn_condition(triple: DMTriple, integrand: Integrand) -> float:
    """∫∫_{boundary} (1+|s|^p)∫ h01 μ̂ ν̂ σ through recession values; >= 0 means the condition holds."""
    return concentration_term(triple, integrand)


def is_convex_in_gradient(family: PiecewiseFamily, integrand: Integrand, radius: float = 4.0,
                          n: int = 801, atol: float = 1e-6) -> bool:
    """s -> h(x, u(x), s) agrees with its convex envelope at sample points of every limit piece."""
    s = np.linspace(-radius, radius, n)
    for lp in family.limit:
        for x in (lp.left, 0.5 * (lp.left + lp.right), lp.right):
            u = lp.value + lp.slope * (x - lp.left)
            values = integrand(np.full_like(s, x), np.full_like(s, u), s)
            envelope = convex_envelope_1d(values, s)
            if np.max(values - envelope) > atol * max(1.0, float(np.max(np.abs(values)))):
                return False
    return True


def verdict(gap: GapReport, condition: float, tol: Optional[Tolerances] = None) -> str:
    if not gap.nonnegative(tol):
        return NOT_LSC
    if condition < -resolve(tol).limit:
        # sufficient condition fails while the gap is fine
        return NO_VERDICT
    return LSC
