# src/represent.py
# Формули представлення: осциляція + концентрація, подвійна трійка та перевірка спрощення

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from compactify import RingFunction, TestWeight, lift, ring_function, weight_function
from config import settings
from families import PiecewiseFamily
from limits import LimitEstimate, default_schedule, estimate_from_values, functional_value
from measures import (Atom, CompactifiedProbability, DensityPiece, DMTriple, FiberCell, FiberFamily,
                      IncompleteTripleError, RadonMeasure, dirac, integrate_triple, young_from_dm)
from quadrature import cut_interval, integrate_intervals, integrate_pieces
from runtime_config import Tolerances, resolve
from triples import BoundednessError, generate_triple
from utils import CatalogError, parallel_map, parse_call

logger = logging.getLogger(__name__)

OUTSIDE_HYPOTHESES = "outside theorem hypotheses"


class SubcriticalityError(ValueError):
    """q is not below the Sobolev exponent p*."""


@dataclass(frozen=True)
class Term:
    """coef · g(x) · f₀(r) · ψ₀(s)."""
    g: TestWeight
    f0: RingFunction
    psi0: RingFunction
    coef: float = 1.0

    @property
    def label(self) -> str:
        head = "" if self.coef == 1 else f"{self.coef:g}*"
        return f"{head}{self.g.name}*{self.f0.name}*{self.psi0.name}"


@dataclass(frozen=True)
class Integrand:
    """h(x,r,s) = Σ h01·(1+|s|^p) + Σ h02·(1+|r|^q) with bounded factors."""
    name: str
    h01: Tuple[Term, ...] = ()
    h02: Tuple[Term, ...] = ()
    p: float = 1.0
    q: float = 1.0
    growth: float = 1.0

    def __call__(self, x, r, s) -> np.ndarray:
        x, r, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, r, s)))
        total = np.zeros_like(x)
        for t in self.h01:
            total = total + t.coef * t.g(x) * t.f0(r) * lift(t.psi0, self.p)(s)
        for t in self.h02:
            total = total + t.coef * t.g(x) * lift(t.f0, self.q)(r) * t.psi0(s)
        return total

    def kinks(self) -> Tuple[float, ...]:
        return tuple(sorted({k for t in self.h01 + self.h02 for k in t.f0.kinks}))

    def growth_defect(self, x: Sequence[float], radius: float = 1e3, n: int = 41) -> float:
        """max(|h| - C(1+|r|^q+|s|^p), 0) on a sample grid; zero when the declared bound holds."""
        grid = np.linspace(-radius, radius, n)
        X, R, S = np.meshgrid(np.asarray(x, dtype=float), grid, grid, indexing="ij")
        bound = self.growth * (1.0 + np.abs(R) ** self.q + np.abs(S) ** self.p)
        return float(np.max(np.maximum(np.abs(self(X, R, S)) - bound, 0.0)))


def _term(g: str, f0: str, psi0: str, coef: float = 1.0) -> Term:
    return Term(weight_function(g), ring_function(f0), ring_function(psi0), float(coef))


def _integrand_factories():
    return {
        # r(1+|s|), r clamped
        "r_weighted_mass": lambda: Integrand("r_weighted_mass", h01=(_term("one", "clamp", "one"),)),
        "abs_grad": lambda: Integrand("abs_grad", h01=(_term("one", "one", "abs_frac"),)),
        "signed_grad": lambda: Integrand("signed_grad", h01=(_term("one", "one", "signed_frac"),)),
        # r²·sqrt(1+s²)
        "limit0": lambda: Integrand("limit0", h01=(_term("one", "poly_clamped(2)", "sqrt_frac"),)),
        "grad_power": lambda p=2.0: Integrand(f"grad_power({p:g})", h01=(_term("one", "one", f"power_frac({p:g})"),), p=p),
        # (s²-1)²
        "double_well": lambda: Integrand("double_well", h01=(_term("one", "one", "double_well_frac"),), p=4.0),
        "u_mass": lambda q=2.0: Integrand(f"u_mass({q:g})", h02=(_term("one", "one", "one"),), q=q),
        "mixed": lambda: Integrand("mixed", h01=(_term("one", "clamp", "one"),), h02=(_term("x", "one", "bump"),)),
    }


INTEGRAND_NAMES = tuple(_integrand_factories())


@functools.lru_cache(maxsize=64)
def builtin_integrand(spec: str) -> Integrand:
    name, args = parse_call(spec)
    factories = _integrand_factories()
    if name not in factories:
        raise CatalogError(f"Невідомий інтегранд: {name}")
    try:
        return factories[name](*args)
    except TypeError:
        raise CatalogError(f"{name}: wrong number of parameters {args}")


def integrand_from_dict(raw: Mapping) -> Integrand:
    """{"name", "h01": [[g, f0, psi0, coef?], ...], "h02": [...], "p", "q", "growth"}."""
    def terms(key):
        out = []
        for i, item in enumerate(raw.get(key, [])):
            if not isinstance(item, (list, tuple)) or len(item) not in (3, 4):
                raise ValueError(f"{key}[{i}]: expected [g, f0, psi0] or [g, f0, psi0, coef]")
            out.append(_term(*item))
        return tuple(out)

    h01, h02 = terms("h01"), terms("h02")
    if not h01 and not h02:
        raise ValueError("integrand needs at least one h01 or h02 term")
    return Integrand(
        name=str(raw.get("name", "custom")),
        h01=h01,
        h02=h02,
        p=float(raw.get("p", 1.0)),
        q=float(raw.get("q", 1.0)),
        growth=float(raw.get("growth", 1.0)),
    )


def resolve_integrand(spec) -> Integrand:
    return builtin_integrand(spec) if isinstance(spec, str) else integrand_from_dict(spec)


def sobolev_exponent(p: float, n: int) -> float:
    return p * n / (n - p) if p < n else math.inf


# --- empirical side ---

def integrand_value(family: PiecewiseFamily, k: int, integrand: Integrand, order: Optional[int] = None,
                    terms: str = "all") -> float:
    """∫ h(x, u_k, w_k) dx summed term by term (terms: all | h01 | h02)."""
    total = 0.0
    if terms in ("all", "h01"):
        for t in integrand.h01:
            total += t.coef * functional_value(family, k, t.g, t.f0, t.psi0, p=integrand.p, order=order)
    if terms in ("all", "h02"):
        for t in integrand.h02:
            total += t.coef * functional_value(family, k, t.g, t.f0, t.psi0, order=order, swap=True, q=integrand.q)
    return total


def integrand_extrapolate(family: PiecewiseFamily, integrand: Integrand, schedule: Optional[Sequence[int]] = None,
                          jobs: Optional[int] = None, tol: Optional[Tolerances] = None,
                          terms: str = "all", order: Optional[int] = None) -> LimitEstimate:
    schedule = tuple(schedule or default_schedule())
    values = parallel_map(lambda k: integrand_value(family, k, integrand, order, terms), schedule,
                          jobs or settings.JOBS)
    return estimate_from_values(f"{family.name}/{integrand.name}", schedule, values, tol)


# --- representation ---

@dataclass(frozen=True)
class Representation:
    family: str
    triple: str
    integrand: str
    oscillation: float
    concentration: float
    total: float
    within_hypotheses: bool = True
    note: str = ""


def _check_subcritical(family: PiecewiseFamily, integrand: Integrand) -> None:
    p_star = sobolev_exponent(integrand.p, family.dimension)
    if integrand.q >= p_star:
        raise SubcriticalityError(f"q={integrand.q:g} is not below p*={p_star:g} for p={integrand.p:g}, n={family.dimension}")


def _hypotheses_note(family: PiecewiseFamily, integrand: Integrand) -> str:
    reasons = []
    if integrand.p == 1:
        reasons.append("p = 1")
    if not family.gradient_consistent:
        reasons.append("w_k is not the gradient of u_k")
    if reasons:
        note = f"{OUTSIDE_HYPOTHESES} ({', '.join(reasons)})"
        logger.warning(f"{family.name}/{integrand.name}: {note}")
        return note
    return ""


def oscillation_term(triple: DMTriple, integrand: Integrand, terms: str = "all",
                     order: Optional[int] = None) -> float:
    """∫_Ω ∫ h(x, u(x), s) ν_x(ds) dx with ν_x read off ν̂_x."""
    total = 0.0
    sub = Integrand(integrand.name,
                    integrand.h01 if terms in ("all", "h01") else (),
                    integrand.h02 if terms in ("all", "h02") else (),
                    integrand.p, integrand.q, integrand.growth)
    for cell in triple.fibers.intervals():
        if cell.u is None:
            raise IncompleteTripleError(f"{triple.name}: no trace of u on ({cell.left}, {cell.right})")
        if any(a.slope for a in cell.nu_hat.atoms):
            raise ValueError(f"{triple.name}: oscillation term needs x-independent fibers")
        nu = young_from_dm(cell.nu_hat, triple.p)
        cuts = cut_interval(cell.left, cell.right, [cell.u], sub.kinks())
        for atom in nu.atoms:
            total += atom.weight * integrate_intervals(
                cuts[:-1], cuts[1:], lambda x, s=atom.location, c=cell: sub(x, c.u_at(x), s), order)
    return total


def concentration_term(triple: DMTriple, integrand: Integrand) -> float:
    """∫_{Ω̄} ∫_{boundary} ∫ h01 μ̂ ν̂ σ, with h01 seen through its recession values."""
    return sum(t.coef * integrate_triple(triple, t.g, t.f0, t.psi0, part="boundary") for t in integrand.h01)


def represent_limit(family: PiecewiseFamily, triple: DMTriple, integrand: Integrand) -> Representation:
    _check_subcritical(family, integrand)
    if family.dimension != 1:
        raise ValueError(f"{family.name}: representation covers one-dimensional families")
    if integrand.p != triple.p and triple.has_concentration():
        raise ValueError(f"{triple.name} is built for p={triple.p:g}; integrand {integrand.name} uses p={integrand.p:g}")
    note = _hypotheses_note(family, integrand)
    osc = oscillation_term(triple, integrand)
    conc = concentration_term(triple, integrand) if integrand.h01 else 0.0
    return Representation(family.name, triple.name, integrand.name, osc, conc, osc + conc, not note, note)


@dataclass(frozen=True)
class SimplifyReport:
    family: str
    integrand: str
    empirical: float
    simplified: float
    difference: float
    error_bar: float
    passed: bool
    equi_integrable: bool


def simplify_check(family: PiecewiseFamily, integrand: Integrand, triple: Optional[DMTriple] = None,
                   schedule: Optional[Sequence[int]] = None, jobs: Optional[int] = None,
                   tol: Optional[Tolerances] = None) -> SimplifyReport:
    """The h02 part has no concentration: its limit equals ∫∫ h02(x,u,s)(1+|u|^q) ν_x(ds) dx."""
    tol = resolve(tol)
    if not family.equi_integrable:
        logger.warning(f"{family.name}: |u_k|^q not declared equi-integrable, h02 may concentrate")
    triple = triple or generate_triple(family)
    est = integrand_extrapolate(family, integrand, schedule, jobs, tol, terms="h02")
    simplified = oscillation_term(triple, integrand, terms="h02")
    diff = abs(est.value - simplified)
    return SimplifyReport(family.name, integrand.name, est.value, simplified, diff, est.error_bar,
                          diff <= tol.pass_threshold(est.error_bar), family.equi_integrable)


# --- role swap: the triple of (w_k, u_k) with exponents (q, p) ---

def _power_density(c0: float, c1: float, q: float, lo: float, hi: float) -> DensityPiece:
    """1 + |c0 + c1 x|^q on (lo, hi) as a polynomial; u keeps one sign there."""
    if c1 == 0:
        return DensityPiece(lo, hi, (1.0 + abs(c0) ** q,))
    if q != int(q):
        raise ValueError("non-integer q needs a piecewise-constant limit u")
    sign = 1.0 if c0 + c1 * 0.5 * (lo + hi) >= 0 else -1.0
    poly = np.polynomial.polynomial.polypow([sign * c0, sign * c1], int(q))
    poly = np.asarray(poly, dtype=float)
    poly[0] += 1.0
    return DensityPiece(lo, hi, tuple(float(c) for c in poly))


def _lq_norms(family: PiecewiseFamily, q: float, schedule: Sequence[int]) -> List[float]:
    one = weight_function("one")
    power = lambda r: np.abs(r) ** q
    unit = lambda w: np.ones_like(w)
    out = []
    for k in schedule:
        t = family.pieces(k)
        out.append(integrate_pieces(t.left, t.right, t.u_left, t.slope, t.w, one, power, unit,
                                    kinks=(0.0,), radial_dim=family.dimension))
    return out


def dual_triple(family: PiecewiseFamily, q: Optional[float] = None, p: Optional[float] = None,
                primal: Optional[DMTriple] = None, schedule: Optional[Sequence[int]] = None) -> DMTriple:
    """
    σ* = (1+|u|^q)L, ν̂*_x = δ_{u(x)}, μ̂*_{x,r} = Young measure of w_k at x.
    Evaluate with integrate_dual (f₀ sits on ν̂*, ψ₀ on μ̂*).
    """
    q = family.q if q is None else float(q)
    p = family.p if p is None else float(p)
    schedule = tuple(schedule or default_schedule())
    norms = _lq_norms(family, q, schedule)
    if norms[-1] > 2.0 * max(norms[0], 1e-300) and norms[-1] > norms[-2]:
        raise BoundednessError(f"{family.name}: ∫|u_k|^{q:g} grows from {norms[0]:.3g} to {norms[-1]:.3g}")
    if not family.limit:
        raise ValueError(f"{family.name}: dual triple needs the closed-form limit u")
    primal = primal or generate_triple(family, p)

    cuts = {float(family.bounds[0]), float(family.bounds[1])}
    cuts.update(c.left for c in primal.fibers.intervals())
    for lp in family.limit:
        cuts.add(lp.left)
        if lp.slope:
            x0 = lp.left - lp.value / lp.slope
            if lp.left < x0 < lp.right:
                cuts.add(x0)
    edges = sorted(cuts)

    cells, density = [], []
    for lo, hi in zip(edges, edges[1:]):
        mid = 0.5 * (lo + hi)
        lp = next(lp for lp in family.limit if lp.left <= mid <= lp.right)
        c1 = lp.slope
        c0 = lp.value - c1 * lp.left
        source = primal.fibers.cell_at(mid)
        cells.append(FiberCell(lo, hi, CompactifiedProbability(atoms=(Atom(c0, 1.0, c1),)),
                               mu_finite=young_from_dm(source.nu_hat, primal.p), u=(c0, c1)))
        density.append(_power_density(c0, c1, q, lo, hi))
    return DMTriple(
        name=f"{family.name}:dual",
        sigma=RadonMeasure(tuple(density)),
        fibers=FiberFamily(family.bounds, tuple(cells)),
        p=q,
        q=p,
        notes=("dual",),
    )


def integrate_dual(dual: DMTriple, g: Callable, f0: RingFunction, psi0: RingFunction) -> float:
    """lim ∫ g f₀(u_k)(1+|u_k|^q) ψ₀(w_k) dx predicted by the dual triple."""
    return integrate_triple(dual, g, f0=psi0, psi0=f0)


def marginal(dual: DMTriple, x: float) -> CompactifiedProbability:
    """ν̂*_x with its atoms frozen at x: the DiPerna–Majda fiber of {u_k} alone."""
    cell = dual.fibers.cell_at(float(x))
    nu = cell.nu_hat
    return CompactifiedProbability(
        atoms=tuple(Atom(float(a.at(x)), a.weight) for a in nu.atoms),
        density=nu.density,
        boundary=nu.boundary,
    )


def dirac_completion(triple: DMTriple, u: Callable) -> DMTriple:
    """Same (σ, ν̂) with every μ̂ replaced by δ_{u(x)}; u must be continuous at σ atoms."""
    cells = []
    for c in triple.fibers.cells:
        if c.is_point:
            mu = dirac(float(u(c.left)))
            cells.append(replace(c, mu_finite=None, mu_boundary=tuple((d, mu) for d, _w in c.nu_hat.boundary)))
        else:
            if c.u is None:
                raise IncompleteTripleError(f"{triple.name}: no trace of u on ({c.left}, {c.right})")
            cells.append(replace(c, mu_finite=None,
                                 mu_boundary=tuple((d, dirac(c.u[0], c.u[1])) for d, _w in c.nu_hat.boundary)))
    return replace(triple, name=f"{triple.name}:dirac", fibers=FiberFamily(triple.domain, tuple(cells)))
