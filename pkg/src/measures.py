"""
measures: Radon measures, fibers on the compactified target and the triples (σ, ν̂, μ̂).

Everything here is a finite object: an ac density given by polynomial pieces plus a
list of atoms. Scalar targets only; boundary points of the compactification are the
directions ±1 (two-point, or the sphere S^0).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from compactify import RingFunction, TestBattery, scalar_recession
from metrics import INTEGRALS_TOTAL
from quadrature import cut_interval, gauss_nodes, integrate_intervals
from runtime_config import Tolerances, resolve

logger = logging.getLogger(__name__)


class DegenerateFiberError(ValueError):
    """Fiber carries no finite mass, so no Young measure can be read off it."""


class IncompleteTripleError(ValueError):
    """μ̂ is missing on an (x, s) pair charged by σ⊗ν̂."""


@dataclass(frozen=True)
class Atom:
    """Point mass at location + slope·x (slope ≠ 0 only for x-parametrized atoms such as δ_{u(x)})."""
    location: float
    weight: float
    slope: float = 0.0

    def at(self, x=0.0):
        return self.location + self.slope * np.asarray(x, dtype=float) if self.slope else self.location


@dataclass(frozen=True)
class DensityPiece:
    """Polynomial density Σ c_j t^j on the open interval (left, right)."""
    left: float
    right: float
    coeffs: Tuple[float, ...] = (1.0,)

    def __call__(self, t) -> np.ndarray:
        return P.polyval(np.asarray(t, dtype=float), self.coeffs)

    def mass(self) -> float:
        anti = P.polyint(self.coeffs)
        return float(P.polyval(self.right, anti) - P.polyval(self.left, anti))

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t > self.left) & (t < self.right)

    def scaled(self, factor: float) -> "DensityPiece":
        return DensityPiece(self.left, self.right, tuple(float(c) * factor for c in self.coeffs))


@dataclass(frozen=True)
class RadonMeasure:
    density: Tuple[DensityPiece, ...] = ()
    atoms: Tuple[Atom, ...] = ()

    def density_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for dp in self.density:
            out = out + np.where(dp.contains(x), dp(x), 0.0)
        return out

    def total_mass(self) -> float:
        return sum(dp.mass() for dp in self.density) + sum(a.weight for a in self.atoms)


@dataclass(frozen=True)
class CompactifiedProbability:
    """Finite part (atoms + polynomial density) plus weights on the boundary directions ±1."""
    atoms: Tuple[Atom, ...] = ()
    density: Tuple[DensityPiece, ...] = ()
    boundary: Tuple[Tuple[float, float], ...] = ()

    def finite_mass(self) -> float:
        return sum(a.weight for a in self.atoms) + sum(dp.mass() for dp in self.density)

    def boundary_mass(self) -> float:
        return sum(w for _d, w in self.boundary)

    def mass(self) -> float:
        return self.finite_mass() + self.boundary_mass()

    def boundary_weight(self, sign: float) -> float:
        return sum(w for d, w in self.boundary if d == sign)

    def weights(self) -> List[float]:
        return [a.weight for a in self.atoms] + [w for _d, w in self.boundary]

    def integrate_finite(self, fn: Callable[[np.ndarray], np.ndarray], x=0.0,
                         kinks: Sequence[float] = ()) -> np.ndarray:
        """∫_{finite part} fn dP; atoms may move with x, densities do not."""
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for a in self.atoms:
            total = total + a.weight * np.asarray(fn(a.at(x) * np.ones_like(x)), dtype=float)
        for dp in self.density:
            cuts = cut_interval(dp.left, dp.right, [(0.0, 1.0)], kinks)
            total = total + integrate_intervals(cuts[:-1], cuts[1:], lambda t: fn(t) * dp(t))
        return total

    def expect(self, ring: RingFunction, x=0.0) -> np.ndarray:
        total = self.integrate_finite(ring, x, ring.kinks)
        for sign, w in self.boundary:
            if w:
                total = total + w * scalar_recession(ring, sign)
        return total


def dirac(location: float, slope: float = 0.0) -> CompactifiedProbability:
    return CompactifiedProbability(atoms=(Atom(float(location), 1.0, float(slope)),))


def uniform(a: float, b: float) -> CompactifiedProbability:
    if not b > a:
        raise ValueError(f"uniform law needs a < b, got ({a}, {b})")
    return CompactifiedProbability(density=(DensityPiece(float(a), float(b), (1.0 / (b - a),)),))


def boundary_law(plus: float = 0.0, minus: float = 0.0) -> CompactifiedProbability:
    parts = tuple((d, float(w)) for d, w in ((1.0, plus), (-1.0, minus)) if w)
    return CompactifiedProbability(boundary=parts)


def mixture(parts: Iterable[Tuple[float, CompactifiedProbability]]) -> CompactifiedProbability:
    """Σ λ_i P_i with the λ_i normalized to one."""
    parts = [(float(lam), prob) for lam, prob in parts if lam]
    total = sum(lam for lam, _ in parts)
    if total <= 0:
        raise ValueError("mixture needs positive total weight")
    atoms, dens, bnd = [], [], {}
    for lam, prob in parts:
        c = lam / total
        atoms.extend(Atom(a.location, a.weight * c, a.slope) for a in prob.atoms)
        dens.extend(dp.scaled(c) for dp in prob.density)
        for d, w in prob.boundary:
            bnd[d] = bnd.get(d, 0.0) + w * c
    return CompactifiedProbability(tuple(atoms), tuple(dens), tuple(sorted(bnd.items(), reverse=True)))


@dataclass(frozen=True)
class FiberCell:
    """Open interval (left, right), or the isolated point left == right, with its fibers."""
    left: float
    right: float
    nu_hat: CompactifiedProbability
    mu_finite: Optional[CompactifiedProbability] = None
    mu_boundary: Tuple[Tuple[float, CompactifiedProbability], ...] = ()
    u: Optional[Tuple[float, float]] = None

    @property
    def is_point(self) -> bool:
        return self.left == self.right

    def mu_at(self, sign: float) -> Optional[CompactifiedProbability]:
        for d, mu in self.mu_boundary:
            if d == sign:
                return mu
        return None

    def u_at(self, x) -> np.ndarray:
        if self.u is None:
            raise IncompleteTripleError(f"no trace of u on cell [{self.left}, {self.right}] for the δ_u(x) completion")
        c0, c1 = self.u
        return c0 + c1 * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class FiberFamily:
    domain: Tuple[float, float]
    cells: Tuple[FiberCell, ...]

    def __post_init__(self):
        a, b = self.domain
        intervals = sorted((c for c in self.cells if not c.is_point), key=lambda c: c.left)
        if not intervals:
            raise ValueError("fiber family needs at least one interval cell")
        if intervals[0].left != a or intervals[-1].right != b:
            raise ValueError(f"interval cells must cover [{a}, {b}]")
        for c0, c1 in zip(intervals, intervals[1:]):
            if c0.right != c1.left:
                raise ValueError(f"interval cells overlap or leave a gap at {c0.right}/{c1.left}")
        points = [c.left for c in self.cells if c.is_point]
        if len(set(points)) != len(points):
            raise ValueError("duplicate point cells")
        for x in points:
            if not a <= x <= b:
                raise ValueError(f"point cell {x} outside the domain")

    def intervals(self) -> List[FiberCell]:
        return sorted((c for c in self.cells if not c.is_point), key=lambda c: c.left)

    def points(self) -> List[FiberCell]:
        return sorted((c for c in self.cells if c.is_point), key=lambda c: c.left)

    def point_cell(self, x: float, tol: float) -> Optional[FiberCell]:
        for c in self.points():
            if abs(c.left - x) <= tol:
                return c
        return None

    def cell_at(self, x: float, tol: float = 1e-9) -> FiberCell:
        cell = self.point_cell(x, tol)
        if cell is not None:
            return cell
        for c in self.intervals():
            if c.left < x < c.right:
                return c
        raise IncompleteTripleError(f"no fiber cell at x={x}")


@dataclass(frozen=True)
class DMTriple:
    name: str
    sigma: RadonMeasure
    fibers: FiberFamily
    p: float = 1.0
    q: float = 1.0
    notes: Tuple[str, ...] = ()

    @property
    def domain(self) -> Tuple[float, float]:
        return self.fibers.domain

    def has_concentration(self) -> bool:
        for c in self.fibers.cells:
            if c.nu_hat.boundary_mass() > 0:
                return True
        return False


# --- characterization checks ---

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _sample_points(left: float, right: float) -> np.ndarray:
    return gauss_nodes(left, right)


def _is_nonnegative(prob: CompactifiedProbability) -> bool:
    if any(w < 0 for w in prob.weights()):
        return False
    for dp in prob.density:
        ts = np.concatenate([[dp.left, dp.right], _sample_points(dp.left, dp.right)])
        if np.any(dp(ts) < 0):
            return False
    return True


def _inverse_weight_moment(prob: CompactifiedProbability, p: float, x) -> np.ndarray:
    """∫_{finite} ν̂(ds)/(1+|s|^p)."""
    return prob.integrate_finite(lambda s: 1.0 / (1.0 + np.abs(s) ** p), x, (0.0,))


def validate_dm(sigma: RadonMeasure, fibers: FiberFamily, p: float,
                tol: Optional[Tolerances] = None) -> ValidationReport:
    """Pass/fail list for the DiPerna–Majda characterization of (σ, ν̂); never raises on failure."""
    tol = resolve(tol)
    checks: List[CheckResult] = []

    # 1. positivity
    bad = [f"σ atom at {a.location} has weight {a.weight}" for a in sigma.atoms if not a.weight > 0]
    for dp in sigma.density:
        ts = np.concatenate([[dp.left, dp.right], _sample_points(dp.left, dp.right)])
        if np.any(dp(ts) < -tol.mass):
            bad.append(f"σ density negative on ({dp.left}, {dp.right})")
    for c in fibers.cells:
        if not _is_nonnegative(c.nu_hat):
            bad.append(f"ν̂ has a negative weight on cell [{c.left}, {c.right}]")
    checks.append(CheckResult("positivity", not bad, "; ".join(bad)))

    # 2. σ_ν̂ = (∫_R ν̂)σ has no atoms: fibers at σ atoms live on the boundary only
    bad = []
    for a in sigma.atoms:
        cell = fibers.point_cell(a.location, tol.atom)
        if cell is None:
            bad.append(f"σ atom at {a.location} has no fiber")
        elif cell.nu_hat.finite_mass() > tol.mass:
            bad.append(f"fiber at σ atom {a.location} charges finite s (mass {cell.nu_hat.finite_mass():.3g})")
    checks.append(CheckResult("absolute_continuity", not bad, "; ".join(bad)))

    # 3. density formula on ac cells: d_σν̂ = (∫ ν̂/(1+|s|^p))^{-1} ∫_R ν̂
    bad = []
    for c in fibers.intervals():
        xs = _sample_points(c.left, c.right)
        finite = c.nu_hat.finite_mass()
        if not finite > tol.mass:
            bad.append(f"∫_R ν̂ vanishes on ({c.left}, {c.right})")
            continue
        z = _inverse_weight_moment(c.nu_hat, p, xs)
        lhs = finite * sigma.density_at(xs)
        rhs = finite / z
        err = np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs)))
        if err > tol.moment:
            bad.append(f"density formula off by {err:.3g} on ({c.left}, {c.right})")
    checks.append(CheckResult("density_formula", not bad, "; ".join(bad)))

    # 4. normalization
    bad = [f"ν̂ mass {c.nu_hat.mass():.12g} on cell [{c.left}, {c.right}]"
           for c in fibers.cells if abs(c.nu_hat.mass() - 1.0) > tol.mass]
    checks.append(CheckResult("normalization", not bad, "; ".join(bad)))
    return ValidationReport(tuple(checks))


def validate_triple(triple: DMTriple, tol: Optional[Tolerances] = None) -> ValidationReport:
    """validate_dm plus μ̂ completeness and normalization."""
    tol = resolve(tol)
    base = validate_dm(triple.sigma, triple.fibers, triple.p, tol)
    bad = []
    for c in triple.fibers.cells:
        if c.nu_hat.finite_mass() > 0 and c.mu_finite is None and c.u is None:
            bad.append(f"no μ̂ for finite s on [{c.left}, {c.right}]")
        for sign, w in c.nu_hat.boundary:
            if w > 0 and c.mu_at(sign) is None:
                bad.append(f"no μ̂ at s={'+' if sign > 0 else '-'}∞ on [{c.left}, {c.right}]")
        for mu in [c.mu_finite] + [m for _d, m in c.mu_boundary]:
            if mu is not None and (abs(mu.mass() - 1.0) > tol.mass or not _is_nonnegative(mu)):
                bad.append(f"μ̂ on [{c.left}, {c.right}] is not a probability")
    return ValidationReport(base.checks + (CheckResult("mu_hat", not bad, "; ".join(bad)),))


def young_from_dm(fiber: CompactifiedProbability, p: float, x: Optional[float] = None) -> CompactifiedProbability:
    """
    ν_x(ds) = Z^{-1} ν̂_x(ds)/(1+|s|^p) on the finite part.

    Atomic finite parts only: the reweighted density is no longer polynomial, so a fiber with a
    density part raises ValueError.
    """
    if fiber.density:
        raise ValueError("young_from_dm handles atomic finite parts only; the fiber has a density part")
    if any(a.slope for a in fiber.atoms) and x is None:
        raise ValueError("x-parametrized fiber needs the point x")
    xv = 0.0 if x is None else float(x)
    locs = [float(a.at(xv)) for a in fiber.atoms]
    raw = [a.weight / (1.0 + abs(s) ** p) for a, s in zip(fiber.atoms, locs)]
    z = sum(raw)
    if not z > 0:
        raise DegenerateFiberError("fiber is supported on the boundary only (Z = 0)")
    return CompactifiedProbability(atoms=tuple(Atom(s, r / z) for s, r in zip(locs, raw)))


def barycenter_check(triple: DMTriple, u_grad: Optional[Callable] = None, p: Optional[float] = None) -> float:
    """sup |∇u(x) - d_σ(x)∫ s/(1+|s|^p) ν̂_x(ds)| over quadrature nodes of the ac cells."""
    p = triple.p if p is None else p
    worst = 0.0
    for c in triple.fibers.intervals():
        xs = _sample_points(c.left, c.right)
        moment = c.nu_hat.integrate_finite(lambda s: s / (1.0 + np.abs(s) ** p), xs, (0.0,))
        if p == 1:
            # recession of s/(1+|s|) is the direction itself; zero for p > 1
            moment = moment + sum(d * w for d, w in c.nu_hat.boundary)
        if u_grad is not None:
            grad = np.asarray(u_grad(xs), dtype=float)
        elif c.u is not None:
            grad = np.full_like(xs, c.u[1])
        else:
            raise IncompleteTripleError(f"no gradient of u on ({c.left}, {c.right})")
        defect = np.abs(grad - triple.sigma.density_at(xs) * moment)
        worst = max(worst, float(np.max(defect)))
    return worst


# --- integration against the triple ---

def _segment_cuts(cell: FiberCell, lo: float, hi: float, f0: RingFunction, psi0: RingFunction) -> np.ndarray:
    f_maps = []
    if cell.u is not None and cell.mu_finite is None:
        f_maps.append(cell.u)
    for mu in [cell.mu_finite] + [m for _d, m in cell.mu_boundary]:
        if mu is not None:
            f_maps.extend((a.location, a.slope) for a in mu.atoms if a.slope)
    psi_maps = [(a.location, a.slope) for a in cell.nu_hat.atoms if a.slope]
    cuts = set(cut_interval(lo, hi, f_maps, f0.kinks)) | set(cut_interval(lo, hi, psi_maps, psi0.kinks))
    return np.array(sorted(cuts))


def _inner(cell: FiberCell, x, f0: RingFunction, psi0: RingFunction, part: str = "all") -> np.ndarray:
    """∫ ψ₀(s) ∫ f₀(r) μ̂_{s,x}(dr) ν̂_x(ds) at the points x of one cell."""
    x = np.asarray(x, dtype=float)
    nu = cell.nu_hat
    total = np.zeros_like(x)
    if part != "boundary" and (nu.atoms or nu.density):
        inner_f = cell.mu_finite.expect(f0, x) if cell.mu_finite is not None else f0(cell.u_at(x))
        total = total + inner_f * nu.integrate_finite(psi0, x, psi0.kinks)
    for sign, w in nu.boundary:
        if not w or part == "finite":
            continue
        mu = cell.mu_at(sign)
        if mu is None:
            raise IncompleteTripleError(
                f"μ̂ missing at s={'+' if sign > 0 else '-'}∞ on [{cell.left}, {cell.right}]")
        total = total + w * scalar_recession(psi0, sign) * mu.expect(f0, x)
    return total


def integrate_triple(triple: DMTriple, g: Callable, f0: RingFunction, psi0: RingFunction,
                     p: Optional[float] = None, tol: Optional[Tolerances] = None, part: str = "all") -> float:
    """
    ∫∫∫ g(x) f₀(r) ψ₀(s) μ̂_{s,x}(dr) ν̂_x(ds) σ(dx): atoms as finite sums, ac parts by quadrature.

    part="finite" or "boundary" restricts ν̂ to R or to the boundary of the compactification.
    """
    if part not in ("all", "finite", "boundary"):
        raise ValueError(f"unknown part {part!r}")
    if p is not None and p != triple.p:
        raise ValueError(f"triple {triple.name} is built for p={triple.p}, not p={p}")
    tol = resolve(tol)
    INTEGRALS_TOTAL.labels(kind="triple").inc()
    total = 0.0
    for cell in triple.fibers.intervals():
        for dp in triple.sigma.density:
            lo, hi = max(cell.left, dp.left), min(cell.right, dp.right)
            if not hi > lo:
                continue
            cuts = _segment_cuts(cell, lo, hi, f0, psi0)
            total += integrate_intervals(
                cuts[:-1], cuts[1:],
                lambda xs, cell=cell, dp=dp: np.asarray(g(xs), dtype=float) * dp(xs) * _inner(cell, xs, f0, psi0, part),
            )
    for atom in triple.sigma.atoms:
        cell = triple.fibers.point_cell(atom.location, tol.atom)
        if cell is None:
            raise IncompleteTripleError(f"σ atom at {atom.location} has no fiber cell")
        value = _inner(cell, np.array(atom.location), f0, psi0, part)
        total += atom.weight * float(np.asarray(g(np.array(atom.location)), dtype=float)) * float(value)
    return total


def moment_match(first: DMTriple, second: DMTriple, battery: TestBattery,
                 tol: Optional[Tolerances] = None) -> Tuple[float, bool]:
    """Measure equality by battery moments: (max difference, within moment tolerance)."""
    tol = resolve(tol)
    worst = 0.0
    for m in battery:
        a = integrate_triple(first, m.g, m.f0, m.psi0, tol=tol)
        b = integrate_triple(second, m.g, m.f0, m.psi0, tol=tol)
        worst = max(worst, abs(a - b))
    return worst, worst <= tol.moment


def finite_mu_is_trace(triple: DMTriple) -> bool:
    """Every μ̂ over finite s is δ_{u(x)} (completion or explicit Dirac on the trace)."""
    for c in triple.fibers.intervals():
        if c.mu_finite is None:
            if c.u is None:
                return False
            continue
        atoms = c.mu_finite.atoms
        if c.u is None or c.mu_finite.density or c.mu_finite.boundary or len(atoms) != 1:
            return False
        if (atoms[0].location, atoms[0].slope) != tuple(c.u):
            return False
    return True


# --- serialization (JSON-compatible records) ---

def _prob_to_dict(prob: Optional[CompactifiedProbability]) -> Optional[dict]:
    if prob is None:
        return None
    return {
        "atoms": [{"location": a.location, "weight": a.weight, "slope": a.slope} for a in prob.atoms],
        "density": [{"left": d.left, "right": d.right, "coeffs": list(d.coeffs)} for d in prob.density],
        "boundary": [{"direction": d, "weight": w} for d, w in prob.boundary],
    }


def _prob_from_dict(raw: Optional[Mapping]) -> Optional[CompactifiedProbability]:
    if raw is None:
        return None
    return CompactifiedProbability(
        atoms=tuple(Atom(float(a["location"]), float(a["weight"]), float(a.get("slope", 0.0)))
                    for a in raw.get("atoms", [])),
        density=tuple(DensityPiece(float(d["left"]), float(d["right"]), tuple(float(c) for c in d["coeffs"]))
                      for d in raw.get("density", [])),
        boundary=tuple((float(b["direction"]), float(b["weight"])) for b in raw.get("boundary", [])),
    )


def triple_to_dict(triple: DMTriple) -> dict:
    return {
        "name": triple.name,
        "p": triple.p,
        "q": triple.q,
        "domain": list(triple.domain),
        "notes": list(triple.notes),
        "sigma": {
            "density": [{"left": d.left, "right": d.right, "coeffs": list(d.coeffs)} for d in triple.sigma.density],
            "atoms": [{"location": a.location, "weight": a.weight} for a in triple.sigma.atoms],
        },
        "cells": [
            {
                "left": c.left,
                "right": c.right,
                "nu_hat": _prob_to_dict(c.nu_hat),
                "mu_finite": _prob_to_dict(c.mu_finite),
                "mu_boundary": [{"direction": d, "mu": _prob_to_dict(m)} for d, m in c.mu_boundary],
                "u": list(c.u) if c.u is not None else None,
            }
            for c in triple.fibers.cells
        ],
    }


def triple_from_dict(raw: Mapping) -> DMTriple:
    try:
        sigma_raw = raw["sigma"]
        sigma = RadonMeasure(
            density=tuple(DensityPiece(float(d["left"]), float(d["right"]), tuple(float(c) for c in d["coeffs"]))
                          for d in sigma_raw.get("density", [])),
            atoms=tuple(Atom(float(a["location"]), float(a["weight"])) for a in sigma_raw.get("atoms", [])),
        )
        cells = tuple(
            FiberCell(
                left=float(c["left"]),
                right=float(c["right"]),
                nu_hat=_prob_from_dict(c["nu_hat"]),
                mu_finite=_prob_from_dict(c.get("mu_finite")),
                mu_boundary=tuple((float(m["direction"]), _prob_from_dict(m["mu"])) for m in c.get("mu_boundary", [])),
                u=tuple(float(v) for v in c["u"]) if c.get("u") is not None else None,
            )
            for c in raw["cells"]
        )
        a, b = raw["domain"]
        return DMTriple(
            name=str(raw.get("name", "inline")),
            sigma=sigma,
            fibers=FiberFamily((float(a), float(b)), cells),
            p=float(raw.get("p", 1.0)),
            q=float(raw.get("q", 1.0)),
            notes=tuple(raw.get("notes", ())),
        )
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed triple record: missing or bad field {e}")
