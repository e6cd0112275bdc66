# src/triples.py
# Еталонні трійки (σ, ν̂, μ̂) для каталогу сімей та їх виведення з кускової структури

from __future__ import annotations

import functools
import logging
from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from families import Knot, PiecewiseFamily, ScalingFamily, builtin
from measures import (Atom, CompactifiedProbability, DensityPiece, DMTriple, FiberCell, FiberFamily,
                      RadonMeasure, boundary_law, dirac, mixture, triple_from_dict, uniform)
from utils import CatalogError, parse_call

logger = logging.getLogger(__name__)


class BoundednessError(ValueError):
    """The sequence is not bounded in the norm the triple needs."""


def _lebesgue(a: float, b: float, density: float = 1.0) -> Tuple[DensityPiece, ...]:
    return (DensityPiece(float(a), float(b), (float(density),)),)


def _flat(a: float, b: float, value: float, nu: Optional[CompactifiedProbability] = None) -> FiberCell:
    return FiberCell(float(a), float(b), nu or dirac(0.0), u=(float(value), 0.0))


def _spike_triple(name: str, domain: Tuple[float, float], x0: float, plus: float, minus: float,
                  mu_plus: Optional[CompactifiedProbability], mu_minus: Optional[CompactifiedProbability],
                  u_left: float, u_right: float, p: float = 1.0) -> DMTriple:
    a, b = domain
    mass = plus + minus
    mu_boundary = tuple((d, mu) for d, mu in ((1.0, mu_plus), (-1.0, mu_minus)) if mu is not None)
    cells = (
        _flat(a, x0, u_left),
        FiberCell(x0, x0, boundary_law(plus / mass, minus / mass), mu_boundary=mu_boundary),
        _flat(x0, b, u_right),
    )
    return DMTriple(
        name=name,
        sigma=RadonMeasure(_lebesgue(a, b), (Atom(x0, mass),)),
        fibers=FiberFamily((a, b), cells),
        p=p,
    )


def _ex_first() -> DMTriple:
    # up-spike carries 1 (u sweeps 0..1), down-spike carries 2 (u sweeps 1..-1)
    return _spike_triple("ex_first", (0.0, 2.0), 1.0, 1.0, 2.0, uniform(0.0, 1.0), uniform(-1.0, 1.0), 0.0, -1.0)


def _down_up_down() -> DMTriple:
    return _spike_triple("down_up_down", (0.0, 2.0), 1.0, 1.0, 2.0, uniform(-1.0, 0.0), uniform(-1.0, 0.0), 0.0, -1.0)


def _fixed_u() -> DMTriple:
    return _spike_triple("fixed_u", (0.0, 2.0), 1.0, 1.0, 2.0, dirac(0.0), dirac(-1.0), 0.0, -1.0)


def _ex_simple() -> DMTriple:
    return _spike_triple("ex_simple", (0.0, 2.0), 1.0, 1.0, 0.0, uniform(0.0, 1.0), None, 0.0, 1.0)


def _ramp() -> DMTriple:
    return _spike_triple("ramp", (-1.0, 1.0), 0.0, 1.0, 0.0, uniform(0.0, 1.0), None, 0.0, 1.0)


def _sawtooth() -> DMTriple:
    nu = CompactifiedProbability(atoms=(Atom(-1.0, 0.5), Atom(1.0, 0.5)))
    return DMTriple(
        name="sawtooth",
        sigma=RadonMeasure(_lebesgue(0.0, 1.0, 2.0)),
        fibers=FiberFamily((0.0, 1.0), (_flat(0.0, 1.0, 0.0, nu),)),
        p=2.0,
    )


def _constant(c: float = 0.5) -> DMTriple:
    cell = FiberCell(0.0, 1.0, dirac(0.0), mu_finite=dirac(float(c)), u=(float(c), 0.0))
    return DMTriple(
        name=f"constant({c:g})",
        sigma=RadonMeasure(_lebesgue(0.0, 1.0)),
        fibers=FiberFamily((0.0, 1.0), (cell,)),
    )


def _hat_scaling(p: float = 2.0, n: float = 1.0) -> DMTriple:
    return generate_triple(builtin(f"hat_scaling({p:g})" if n == 1 else f"hat_scaling({p:g},{int(n)})"))


_REFERENCE = {
    "ex_first": _ex_first,
    "down_up_down": _down_up_down,
    "fixed_u": _fixed_u,
    "ex_simple": _ex_simple,
    "ramp": _ramp,
    "sawtooth": _sawtooth,
    "constant": _constant,
    "hat_scaling": _hat_scaling,
}

TRIPLE_NAMES = tuple(_REFERENCE)


@functools.lru_cache(maxsize=64)
def reference_triple(name: str) -> DMTriple:
    """Hand-derived triple of a catalog family, e.g. 'ex_first' or 'constant(0.25)'."""
    base, args = parse_call(name)
    if base not in _REFERENCE:
        raise CatalogError(f"Невідома трійка: {base}")
    try:
        return _REFERENCE[base](*args)
    except TypeError:
        raise CatalogError(f"{base}: wrong number of parameters {args}")


# --- generation from the piece structure ---

# Laurent polynomial in k with powers -1, 0, 1
Laurent = Dict[int, Fraction]


def _advance(u: Laurent, slope, left: Knot, right: Knot) -> Laurent:
    db, dc = right.base - left.base, right.coef - left.coef
    out = defaultdict(Fraction, u)
    out[0] += slope.c0 * db + slope.c1 * dc
    out[-1] += slope.c0 * dc
    out[1] += slope.c1 * db
    return out


def _limit_value(family: PiecewiseFamily, u: Laurent, where: Fraction) -> Fraction:
    if u.get(1, 0):
        raise BoundednessError(f"{family.name}: u_k grows like k near x={float(where)}")
    return u.get(0, Fraction(0))


def _periodic_triple(family: PiecewiseFamily, p: float) -> DMTriple:
    prof = family.periodic
    a, b = family.bounds
    parts = [(float(f), float(s)) for f, s in zip(prof.fractions(), prof.slopes()) if f]
    density = sum(f * (1.0 + abs(s) ** p) for f, s in parts)
    nu = CompactifiedProbability(atoms=tuple(Atom(s, f * (1.0 + abs(s) ** p) / density) for f, s in parts))
    return DMTriple(
        name=f"{family.name}:generated",
        sigma=RadonMeasure(_lebesgue(a, b, density)),
        fibers=FiberFamily((a, b), (_flat(a, b, 0.0, nu),)),
        p=p,
        notes=("generated",),
    )


def _scaling_triple(family: PiecewiseFamily, scaling: ScalingFamily) -> DMTriple:
    if scaling.dimension != 1:
        raise ValueError(f"{family.name}: generation covers one-dimensional scaling families only")
    a, b = family.bounds
    shares = {1.0: 0.0, -1.0: 0.0}
    for t0, t1, _v0, s in scaling.profile_pieces():
        if s:
            shares[1.0 if s > 0 else -1.0] += (t1 - t0) * abs(s) ** scaling.p
    energy = shares[1.0] + shares[-1.0]
    # p > n: u_k -> 0 uniformly, so the concentration sees r = 0
    mu = tuple((d, dirac(0.0)) for d in (1.0, -1.0) if shares[d])
    cells = (
        _flat(a, 0.0, 0.0),
        FiberCell(0.0, 0.0, boundary_law(shares[1.0] / energy, shares[-1.0] / energy), mu_boundary=mu),
        _flat(0.0, b, 0.0),
    )
    return DMTriple(
        name=f"{family.name}:generated",
        sigma=RadonMeasure(_lebesgue(a, b), (Atom(0.0, energy),)),
        fibers=FiberFamily((a, b), cells),
        p=scaling.p,
        notes=("generated",),
    )


def generate_triple(family: PiecewiseFamily, p: Optional[float] = None) -> DMTriple:
    """
    Triple of a symbolic family read off its pieces as k -> ∞. Persistent pieces give ac cells
    with ν̂ = δ_{w}; pieces shrinking to a point with slope ∝ k give atoms (p = 1 only) whose
    μ̂ is uniform over the u-range they sweep.
    """
    p = family.p if p is None else float(p)
    if family.periodic is not None:
        return _periodic_triple(family, p)
    if family.scaling is not None:
        return _scaling_triple(family, family.scaling)

    a, b = family.domain
    cells: List[FiberCell] = []
    density: List[DensityPiece] = []
    spikes: Dict[Fraction, Dict[float, List[Tuple[float, CompactifiedProbability]]]] = defaultdict(
        lambda: defaultdict(list))
    left = Knot(a)
    u: Laurent = {0: family.start.c0, 1: family.start.c1}
    for i, rule in enumerate(family.rules):
        if rule.u_left is not None:
            u = {0: rule.u_left.c0, 1: rule.u_left.c1}
        u_l = _limit_value(family, u, left.base)
        u_next = _advance(u, rule.slope, left, rule.right)
        w = rule.w if rule.w is not None else rule.slope
        if rule.right.base > left.base:
            if w.c1 or rule.slope.c1:
                raise BoundednessError(f"{family.name}: piece {i} keeps a gradient growing like k")
            w0, s0 = float(w.c0), float(rule.slope.c0)
            lo, hi = float(left.base), float(rule.right.base)
            cells.append(FiberCell(lo, hi, dirac(w0), u=(float(u_l) - s0 * lo, s0)))
            density.append(DensityPiece(lo, hi, (1.0 + abs(w0) ** p,)))
        elif w.c1:
            if p != 1:
                raise BoundednessError(f"{family.name}: piece {i} concentrates ∫|w_k|^p like k^{p - 1:g}")
            width = rule.right.coef - left.coef
            mass = float(abs(w.c1) * width)
            u_r = float(_limit_value(family, u_next, rule.right.base))
            lo_u, hi_u = sorted((float(u_l), u_r))
            law = uniform(lo_u, hi_u) if hi_u > lo_u else dirac(lo_u)
            if mass > 0:
                spikes[left.base][1.0 if w.c1 > 0 else -1.0].append((mass, law))
        u = u_next
        left = rule.right

    atoms = []
    for x0 in sorted(spikes):
        by_dir = spikes[x0]
        masses = {d: sum(m for m, _ in parts) for d, parts in by_dir.items()}
        total = sum(masses.values())
        nu = boundary_law(masses.get(1.0, 0.0) / total, masses.get(-1.0, 0.0) / total)
        mu = tuple((d, mixture(by_dir[d])) for d in (1.0, -1.0) if d in by_dir)
        cells.append(FiberCell(float(x0), float(x0), nu, mu_boundary=mu))
        atoms.append(Atom(float(x0), total))
    logger.info(f"{family.name}: generated triple with {len(atoms)} atom(s); μ̂ off the boundary is δ_u(x)")
    return DMTriple(
        name=f"{family.name}:generated",
        sigma=RadonMeasure(tuple(density), tuple(atoms)),
        fibers=FiberFamily((float(a), float(b)), tuple(cells)),
        p=p,
        q=family.q,
        notes=("generated",),
    )


def resolve_triple(spec) -> DMTriple:
    """Catalog name or inline JSON-compatible record."""
    if isinstance(spec, str):
        return reference_triple(spec)
    return triple_from_dict(spec)
