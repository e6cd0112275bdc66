# src/families.py
# Каталог k-індексованих кусково-афінних послідовностей (u_k, w_k) з точними точками зламу

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from compactify import RingFunction, scalar_recession
from quadrature import cut_interval, integrate_intervals
from utils import CatalogError, parse_call

logger = logging.getLogger(__name__)

Number = Fraction | int | float | str


class DomainError(ValueError):
    """Point outside the closed domain of a family."""


def _frac(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class KPoly:
    """c0 + c1·k."""
    c0: Fraction = Fraction(0)
    c1: Fraction = Fraction(0)

    def at(self, k: int) -> Fraction:
        return self.c0 + self.c1 * k


@dataclass(frozen=True)
class Knot:
    """Breakpoint base + coef/k."""
    base: Fraction
    coef: Fraction = Fraction(0)

    def at(self, k: int) -> Fraction:
        return self.base + self.coef / k


def kp(c0: Number = 0, c1: Number = 0) -> KPoly:
    return KPoly(_frac(c0), _frac(c1))


def knot(base: Number, coef: Number = 0) -> Knot:
    return Knot(_frac(base), _frac(coef))


@dataclass(frozen=True)
class PieceRule:
    """One piece ending at `right`; u has `slope` there, w equals the slope unless given."""
    right: Knot
    slope: KPoly = KPoly()
    w: Optional[KPoly] = None
    u_left: Optional[KPoly] = None   # None: u continues from the previous piece


@dataclass(frozen=True)
class PeriodicProfile:
    """Reference cell profile P on [0, period]; u_k(x) = P(k(x-a))/k, w_k(x) = P'(k(x-a))."""
    knots: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("periodic profile needs matching knots/values (at least two)")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])) or self.knots[0] != 0:
            raise ValueError("periodic profile knots must start at 0 and increase strictly")
        if self.values[0] != self.values[-1]:
            raise ValueError("periodic profile must satisfy P(0) = P(T)")

    @property
    def period(self) -> Fraction:
        return self.knots[-1]

    def slopes(self) -> List[Fraction]:
        return [(v1 - v0) / (t1 - t0) for t0, t1, v0, v1 in
                zip(self.knots, self.knots[1:], self.values, self.values[1:])]

    def fractions(self) -> List[Fraction]:
        return [(t1 - t0) / self.period for t0, t1 in zip(self.knots, self.knots[1:])]


@dataclass(frozen=True)
class LimitPiece:
    """Closed-form limit u on [left, right]: u(x) = value + slope·(x - left)."""
    left: float
    right: float
    value: float
    slope: float = 0.0


@dataclass(frozen=True)
class PieceTable:
    left: np.ndarray
    right: np.ndarray
    u_left: np.ndarray
    slope: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return int(self.left.shape[0])

    def locate(self, x) -> np.ndarray:
        # x in (left_i, right_i] -> i; the left end of the domain belongs to the first piece
        idx = np.searchsorted(self.right, np.asarray(x, dtype=float), side="left")
        return np.clip(idx, 0, len(self) - 1)

    def u_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i = self.locate(x)
        return self.u_left[i] + self.slope[i] * (x - self.left[i])

    def w_at(self, x) -> np.ndarray:
        return self.w[self.locate(x)]


def _table(rows: Sequence[Tuple[float, float, float, float, float]]) -> PieceTable:
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    cols = [np.ascontiguousarray(arr[:, j]) for j in range(5)]
    for c in cols:
        c.setflags(write=False)
    return PieceTable(*cols)


@dataclass(frozen=True, eq=False)
class PiecewiseFamily:
    name: str
    domain: Tuple[Fraction, Fraction]
    rules: Tuple[PieceRule, ...] = ()
    start: KPoly = KPoly()
    periodic: Optional[PeriodicProfile] = None
    scaling: Optional["ScalingFamily"] = None
    p: float = 1.0
    q: float = 1.0
    gradient_consistent: bool = True
    limit: Tuple[LimitPiece, ...] = ()
    dimension: int = 1
    equi_integrable: bool = True

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError(f"{self.name}: empty domain [{a}, {b}]")
        sources = sum(x is not None and x != () for x in (self.rules or None, self.periodic, self.scaling))
        if sources != 1:
            raise ValueError(f"{self.name}: exactly one of rules / periodic / scaling must be given")
        if self.rules and self.rules[-1].right != Knot(_frac(b)):
            raise ValueError(f"{self.name}: last piece must end at the domain end {b}")
        if self.p < 1 or self.q < 1:
            raise ValueError(f"{self.name}: exponents must satisfy p, q >= 1")

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.domain[0]), float(self.domain[1])

    @property
    def is_radial(self) -> bool:
        return self.dimension > 1

    def volume(self) -> float:
        """|Ω| (interval length, or ball volume for radial families)."""
        a, b = self.bounds
        if not self.is_radial:
            return b - a
        n = self.dimension
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * b ** n

    def pieces(self, k: int) -> PieceTable:
        return _piece_table(self, int(k))

    def limit_u(self, x) -> np.ndarray:
        return self._limit_eval(x, derivative=False)

    def limit_grad(self, x) -> np.ndarray:
        return self._limit_eval(x, derivative=True)

    def _limit_eval(self, x, derivative: bool) -> np.ndarray:
        if not self.limit:
            raise ValueError(f"{self.name}: no closed-form limit declared")
        x = np.asarray(x, dtype=float)
        rights = np.array([lp.right for lp in self.limit])
        i = np.clip(np.searchsorted(rights, x, side="left"), 0, len(self.limit) - 1)
        left = np.array([lp.left for lp in self.limit])[i]
        value = np.array([lp.value for lp in self.limit])[i]
        slope = np.array([lp.slope for lp in self.limit])[i]
        return slope if derivative else value + slope * (x - left)


@functools.lru_cache(maxsize=512)
def _piece_table(family: PiecewiseFamily, k: int) -> PieceTable:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if family.periodic is not None:
        return _periodic_table(family, k)
    if family.scaling is not None:
        return family.scaling.table(k)
    rows = []
    left = Knot(family.domain[0])
    current = family.start.at(k)
    for i, rule in enumerate(family.rules):
        l, r = left.at(k), rule.right.at(k)
        if r < l:
            raise ValueError(f"{family.name}: breakpoints decrease at piece {i} for k={k}")
        u_left = rule.u_left.at(k) if rule.u_left is not None else current
        slope = rule.slope.at(k)
        w = rule.w.at(k) if rule.w is not None else slope
        if r > l:
            rows.append((float(l), float(r), float(u_left), float(slope), float(w)))
        current = u_left + slope * (r - l)
        left = rule.right
    return _table(rows)


def _periodic_table(family: PiecewiseFamily, k: int) -> PieceTable:
    prof = family.periodic
    a, b = family.domain
    span = k * (b - a)
    m = len(prof.knots) - 1
    n_per = math.ceil(span / prof.period)
    tk = np.array([float(t) for t in prof.knots])
    vals = np.array([float(v) for v in prof.values])
    j = np.repeat(np.arange(n_per), m)
    i = np.tile(np.arange(m), n_per)
    t_left = j * float(prof.period) + tk[i]
    keep = t_left < float(span)
    t_left, i = t_left[keep], i[keep]
    t_right = np.append(t_left[1:], float(span))
    slope = (vals[i + 1] - vals[i]) / (tk[i + 1] - tk[i])
    x_left = float(a) + t_left / k
    x_right = float(a) + t_right / k
    rows = np.column_stack([x_left, x_right, vals[i] / k, slope, slope])
    return _table(rows)


@dataclass(frozen=True, eq=False)
class ScalingFamily:
    """u_k(x) = k^{n/p-1}·w(kx) for a piecewise-affine profile w on [-1,1] vanishing at ±1."""
    name: str
    knots: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]
    p: float
    dimension: int = 1
    radius: float = 1.0

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError(f"{self.name}: scaling family needs p > 1")
        if len(self.knots) != len(self.values) or self.knots[0] != -1 or self.knots[-1] != 1:
            raise ValueError(f"{self.name}: profile knots must run from -1 to 1")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError(f"{self.name}: profile knots must increase strictly")
        if self.values[0] != 0 or self.values[-1] != 0:
            raise ValueError(f"{self.name}: profile must vanish at the endpoints")
        if self.radius < 1:
            raise ValueError(f"{self.name}: domain radius must be >= 1")
        if self.dimension > 1:
            mirrored = list(zip([-t for t in reversed(self.knots)], reversed(self.values)))
            if mirrored != list(zip(self.knots, self.values)):
                raise ValueError(f"{self.name}: radial scaling needs an even profile")

    def amplitude(self, k: int) -> float:
        return float(k) ** (self.dimension / self.p - 1.0)

    def profile_pieces(self) -> List[Tuple[float, float, float, float]]:
        """(t0, t1, w(t0), w'(t)) on the profile support; the r >= 0 half for radial families."""
        out = []
        for t0, t1, v0, v1 in zip(self.knots, self.knots[1:], self.values, self.values[1:]):
            if self.dimension > 1 and t1 <= 0:
                continue
            out.append((float(t0), float(t1), float(v0), float((v1 - v0) / (t1 - t0))))
        return out

    def table(self, k: int) -> PieceTable:
        amp = self.amplitude(k)
        rows = []
        if self.dimension == 1 and self.radius > 1.0 / k:
            rows.append((-self.radius, -1.0 / k, 0.0, 0.0, 0.0))
        for t0, t1, v0, s in self.profile_pieces():
            slope = amp * k * s
            rows.append((t0 / k, t1 / k, amp * v0, slope, slope))
        if self.radius > 1.0 / k:
            rows.append((1.0 / k, self.radius, 0.0, 0.0, 0.0))
        return _table(rows)

    def gradient_energy(self) -> float:
        """∫_{B_1} |∇w|^p dy (radial: surface factor times ∫ |w'|^p r^{n-1} dr)."""
        n = self.dimension
        total = 0.0
        for t0, t1, _v0, s in self.profile_pieces():
            if n == 1:
                total += (t1 - t0) * abs(s) ** self.p
            else:
                total += abs(s) ** self.p * (t1 ** n - t0 ** n) / n
        if n > 1:
            total *= 2 * math.pi ** (n / 2) / math.gamma(n / 2)
        return total

    def reference_limit(self, g, f0: RingFunction, psi0: RingFunction) -> float:
        """
        Closed-form lim ∫ g f₀(u_k) ψ₀(∇u_k)(1+|∇u_k|^p), available for p >= n:
        f₀(0)ψ₀(0)∫g + g(0)∫_{B_1} f₀(r∞)ψ₀^∞ |∇w|^p with r∞ = w (p = n) or 0 (p > n).
        """
        n = self.dimension
        if self.p < n:
            raise ValueError(f"{self.name}: no closed-form limit for p < n")
        if n > 1 and not psi0.isotropic:
            raise ValueError(f"{self.name}: radial reference limit needs an isotropic ψ₀")
        a = -self.radius if n == 1 else 0.0
        radial = (lambda r: r ** (n - 1)) if n > 1 else (lambda r: 1.0)
        bulk = float(f0(0.0)) * float(psi0(0.0)) * integrate_intervals(
            [a], [self.radius], lambda x: np.asarray(g(x), dtype=float) * radial(x))
        conc = 0.0
        for t0, t1, v0, s in self.profile_pieces():
            if s == 0:
                continue
            rec = scalar_recession(psi0, 1.0 if s > 0 else -1.0)
            if self.p == n:
                cuts = cut_interval(t0, t1, [(v0 - s * t0, s)], f0.kinks)
                inner = integrate_intervals(cuts[:-1], cuts[1:], lambda y: f0(v0 + s * (y - t0)) * radial(y))
            else:
                inner = float(f0(0.0)) * integrate_intervals([t0], [t1], lambda y: np.ones_like(y) * radial(y))
            conc += rec * abs(s) ** self.p * inner
        if n > 1:
            surface = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
            bulk *= surface
            conc *= surface
        return bulk + float(np.asarray(g(0.0), dtype=float)) * conc

    def as_piecewise(self) -> PiecewiseFamily:
        a = -self.radius if self.dimension == 1 else 0.0
        return PiecewiseFamily(
            name=self.name,
            domain=(_frac(a), _frac(self.radius)),
            scaling=self,
            p=self.p,
            q=1.0,
            limit=(LimitPiece(a, self.radius, 0.0, 0.0),),
            dimension=self.dimension,
        )


# --- catalog ---

def _ex_first() -> PiecewiseFamily:
    # 0 | kx-k+1 | spike down to -1 with slope -2k | -1
    return PiecewiseFamily(
        name="ex_first",
        domain=(_frac(0), _frac(2)),
        rules=(
            PieceRule(knot(1, -1)),
            PieceRule(knot(1), kp(0, 1)),
            PieceRule(knot(1, 1), kp(0, -2)),
            PieceRule(knot(2)),
        ),
        limit=(LimitPiece(0.0, 1.0, 0.0), LimitPiece(1.0, 2.0, -1.0)),
    )


def _down_up_down() -> PiecewiseFamily:
    return PiecewiseFamily(
        name="down_up_down",
        domain=(_frac(0), _frac(2)),
        rules=(
            PieceRule(knot(1, -2)),
            PieceRule(knot(1, -1), kp(0, -1)),
            PieceRule(knot(1), kp(0, 1)),
            PieceRule(knot(1, 1), kp(0, -1)),
            PieceRule(knot(2)),
        ),
        limit=(LimitPiece(0.0, 1.0, 0.0), LimitPiece(1.0, 2.0, -1.0)),
    )


def _fixed_u() -> PiecewiseFamily:
    # w_k of ex_first, u_k frozen at the jump function u
    return PiecewiseFamily(
        name="fixed_u",
        domain=(_frac(0), _frac(2)),
        rules=(
            PieceRule(knot(1, -1), u_left=kp(0)),
            PieceRule(knot(1), w=kp(0, 1), u_left=kp(0)),
            PieceRule(knot(1, 1), w=kp(0, -2), u_left=kp(-1)),
            PieceRule(knot(2), u_left=kp(-1)),
        ),
        gradient_consistent=False,
        limit=(LimitPiece(0.0, 1.0, 0.0), LimitPiece(1.0, 2.0, -1.0)),
    )


def _ex_simple() -> PiecewiseFamily:
    return PiecewiseFamily(
        name="ex_simple",
        domain=(_frac(0), _frac(2)),
        rules=(
            PieceRule(knot(1, -1)),
            PieceRule(knot(1), kp(0, 1)),
            PieceRule(knot(2)),
        ),
        limit=(LimitPiece(0.0, 1.0, 0.0), LimitPiece(1.0, 2.0, 1.0)),
    )


def _ramp() -> PiecewiseFamily:
    return PiecewiseFamily(
        name="ramp",
        domain=(_frac(-1), _frac(1)),
        rules=(
            PieceRule(knot(0)),
            PieceRule(knot(0, 1), kp(0, 1)),
            PieceRule(knot(1)),
        ),
        limit=(LimitPiece(-1.0, 0.0, 0.0), LimitPiece(0.0, 1.0, 1.0)),
    )


def _sawtooth() -> PiecewiseFamily:
    # triangle wave: amplitude 1/(2k), period 2/k, slopes ±1
    return PiecewiseFamily(
        name="sawtooth",
        domain=(_frac(0), _frac(1)),
        periodic=PeriodicProfile(
            knots=(Fraction(0), Fraction(1), Fraction(2)),
            values=(Fraction(-1, 2), Fraction(1, 2), Fraction(-1, 2)),
        ),
        p=2.0,
        limit=(LimitPiece(0.0, 1.0, 0.0),),
    )


def _constant(c: float = 0.5) -> PiecewiseFamily:
    return PiecewiseFamily(
        name=f"constant({c:g})",
        domain=(_frac(0), _frac(1)),
        rules=(PieceRule(knot(1)),),
        start=kp(c),
        limit=(LimitPiece(0.0, 1.0, float(c)),),
    )


def hat_scaling(p: float = 2.0, dimension: int = 1) -> ScalingFamily:
    return ScalingFamily(
        name=f"hat_scaling({p:g})" if dimension == 1 else f"hat_scaling({p:g},{dimension})",
        knots=(Fraction(-1), Fraction(0), Fraction(1)),
        values=(Fraction(0), Fraction(1), Fraction(0)),
        p=float(p),
        dimension=int(dimension),
    )


_CATALOG = {
    "ex_first": _ex_first,
    "down_up_down": _down_up_down,
    "fixed_u": _fixed_u,
    "ex_simple": _ex_simple,
    "ramp": _ramp,
    "sawtooth": _sawtooth,
    "constant": _constant,
    "hat_scaling": lambda p=2.0, n=1.0: hat_scaling(p, int(n)).as_piecewise(),
}

FAMILY_NAMES = tuple(_CATALOG)


@functools.lru_cache(maxsize=64)
def builtin(name: str) -> PiecewiseFamily:
    """Catalog family by stable name, e.g. 'ex_first', 'constant(0.25)', 'hat_scaling(3)'."""
    base, args = parse_call(name)
    if base not in _CATALOG:
        raise CatalogError(f"Невідома сім'я: {base}")
    try:
        return _CATALOG[base](*args)
    except TypeError:
        raise CatalogError(f"{base}: wrong number of parameters {args}")


def breakpoints(family: PiecewiseFamily, k: int) -> List[float]:
    """Exact kink/discontinuity set of (u_k, w_k) including the domain ends."""
    table = family.pieces(k)
    return [float(table.left[0])] + [float(r) for r in table.right]


def evaluate(family: PiecewiseFamily, k: int, x) -> Tuple[float, float | np.ndarray]:
    """(u_k(x), w_k(x)); left-limit convention at breakpoints. Radial families take x in R^n."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    a, b = family.bounds
    if family.is_radial:
        vec = np.asarray(x, dtype=float).reshape(-1)
        if vec.shape[0] != family.dimension:
            raise DomainError(f"{family.name}: expected a point of R^{family.dimension}")
        r = float(np.linalg.norm(vec))
        if r > b:
            raise DomainError(f"{family.name}: |x|={r} outside the ball of radius {b}")
        table = family.pieces(k)
        direction = vec / r if r > 0 else np.zeros_like(vec)
        return float(table.u_at(r)), float(table.w_at(r)) * direction
    xf = float(x)
    if not (a <= xf <= b):
        raise DomainError(f"{family.name}: x={xf} outside [{a}, {b}]")
    table = family.pieces(k)
    return float(table.u_at(xf)), float(table.w_at(xf))


def check_continuity(family: PiecewiseFamily, k: int, atol: float = 1e-12) -> float:
    """Largest jump of u_k across interior breakpoints."""
    t = family.pieces(k)
    if len(t) < 2:
        return 0.0
    right_vals = t.u_left[:-1] + t.slope[:-1] * (t.right[:-1] - t.left[:-1])
    jump = float(np.max(np.abs(right_vals - t.u_left[1:])))
    if family.gradient_consistent and jump > atol * max(1.0, float(np.max(np.abs(t.slope)))):
        logger.warning(f"{family.name}: u_{k} jumps by {jump:.3g} although declared Sobolev")
    return jump


def _rule_from_dict(raw: Mapping, idx: int) -> PieceRule:
    def pair(key, default=None):
        if key not in raw:
            return default
        v = raw[key]
        vals = list(v) if isinstance(v, (list, tuple)) else [v]
        if not 1 <= len(vals) <= 2:
            raise ValueError(f"pieces[{idx}].{key}: expected [c0, c1]")
        return vals + [0] * (2 - len(vals))

    right = pair("right")
    if right is None:
        raise ValueError(f"pieces[{idx}].right: missing")
    slope = pair("slope", [0, 0])
    w = pair("w")
    u_left = pair("u_left")
    try:
        return PieceRule(
            right=knot(*right),
            slope=kp(*slope),
            w=kp(*w) if w is not None else None,
            u_left=kp(*u_left) if u_left is not None else None,
        )
    except (TypeError, ValueError) as e:
        raise ValueError(f"pieces[{idx}]: {e}")


def family_from_dict(raw: Mapping) -> PiecewiseFamily:
    """Custom symbolic family: knots [base, coef] = base + coef/k, slopes [c0, c1] = c0 + c1·k."""
    try:
        a, b = raw["domain"]
    except (KeyError, TypeError, ValueError):
        raise ValueError("domain: expected [a, b]")
    pieces = raw.get("pieces")
    if not isinstance(pieces, list) or not pieces:
        raise ValueError("pieces: expected a non-empty list")
    rules = tuple(_rule_from_dict(p, i) for i, p in enumerate(pieces))
    limit = tuple(
        LimitPiece(float(lp["left"]), float(lp["right"]), float(lp.get("value", 0.0)), float(lp.get("slope", 0.0)))
        for lp in raw.get("limit", [])
    )
    return PiecewiseFamily(
        name=str(raw.get("name", "custom")),
        domain=(_frac(a), _frac(b)),
        rules=rules,
        start=kp(raw.get("start", 0)),
        p=float(raw.get("p", 1.0)),
        q=float(raw.get("q", 1.0)),
        gradient_consistent=bool(raw.get("gradient_consistent", True)),
        limit=limit,
        equi_integrable=bool(raw.get("equi_integrable", True)),
    )
