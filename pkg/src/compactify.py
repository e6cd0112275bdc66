"""
compactify: rings of bounded test functions, their compactifications and boundary data.

A RingFunction is the bounded factor ψ₀ (or f₀); `lift` turns it into the full-growth
function ψ(s) = ψ₀(s)(1+|s|^p). Boundary values live on {±∞} (two-point), on
directions of the unit sphere, or on a single point at infinity.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from utils import CatalogError, parse_call

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


class KindMismatchError(ValueError):
    """Direction argument does not fit the compactification kind."""


class RecessionError(ValueError):
    """Ring function has no boundary data where it is needed."""


class CompactKind(str, enum.Enum):
    TWO_POINT = "two-point"
    SPHERE = "sphere"
    ONE_POINT = "one-point"


@dataclass(frozen=True)
class Compactification:
    kind: CompactKind
    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.kind is CompactKind.TWO_POINT and self.dimension != 1:
            raise KindMismatchError("two-point compactification is only defined for scalar targets")

    def scalar_directions(self) -> Tuple[float, ...]:
        if self.dimension != 1:
            raise KindMismatchError(f"{self.kind.value} of dimension {self.dimension} has no scalar directions")
        return (1.0, -1.0)


TWO_POINT = Compactification(CompactKind.TWO_POINT)
ONE_POINT = Compactification(CompactKind.ONE_POINT)


@dataclass(frozen=True, eq=False)
class SphereParts:
    # ψ₀(s) = c + core(s) + direction(s/|s|)·|s|^p/(1+|s|^p), core ∈ C₀
    c: float
    core: ArrayFn
    direction: ArrayFn
    p: float


@dataclass(frozen=True, eq=False)
class RingFunction:
    name: str
    finite: ArrayFn
    compactification: Compactification = TWO_POINT
    boundary: Optional[Callable[[object], float]] = None
    kinks: Tuple[float, ...] = ()
    bound: float = 1.0
    isotropic: bool = False
    sphere: Optional[SphereParts] = None

    def __post_init__(self):
        if self.sphere is not None:
            zero = np.zeros(self.compactification.dimension)
            at_zero = float(self.finite(zero))
            expected = self.sphere.c + float(self.sphere.core(zero))
            if abs(at_zero - expected) > 1e-12:
                raise ValueError(f"{self.name}: ψ₀(0)={at_zero} differs from c+ψ₀₀(0)={expected}")

    def __call__(self, s) -> np.ndarray:
        return np.asarray(self.finite(np.asarray(s, dtype=float)), dtype=float)

    @property
    def dimension(self) -> int:
        return self.compactification.dimension

    def norm(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.dimension > 1:
            return np.linalg.norm(s, axis=-1)
        return np.abs(s)


def recession(psi0: RingFunction, direction=None) -> float:
    """Boundary value of ψ₀ in `direction` (±1, a unit vector, or None for one-point)."""
    comp = psi0.compactification
    if psi0.boundary is None and psi0.sphere is None:
        raise RecessionError(f"{psi0.name}: no boundary data declared")
    if comp.kind is CompactKind.ONE_POINT:
        if direction is not None:
            raise KindMismatchError(f"{psi0.name}: one-point compactification takes no direction")
        return float(psi0.boundary(None))
    if direction is None:
        raise KindMismatchError(f"{psi0.name}: {comp.kind.value} boundary needs a direction")
    if comp.kind is CompactKind.TWO_POINT:
        d = float(np.asarray(direction, dtype=float).reshape(-1)[0]) if np.ndim(direction) else float(direction)
        if d not in (1.0, -1.0):
            raise KindMismatchError(f"{psi0.name}: two-point direction must be +1 or -1, got {direction}")
        return float(psi0.boundary(d))
    theta = np.asarray(direction, dtype=float).reshape(comp.dimension)
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise ValueError(f"{psi0.name}: direction {theta} is not a unit vector")
    if psi0.sphere is not None:
        return float(psi0.sphere.c + psi0.sphere.direction(theta))
    return float(psi0.boundary(theta))


def scalar_recession(psi0: RingFunction, sign: float) -> float:
    """Boundary value seen by a scalar sequence running off to sign·∞."""
    kind = psi0.compactification.kind
    if kind is CompactKind.ONE_POINT:
        return recession(psi0, None)
    if kind is CompactKind.SPHERE:
        if psi0.dimension != 1:
            raise KindMismatchError(f"{psi0.name}: sphere of dimension {psi0.dimension} used with scalar data")
        return recession(psi0, np.array([sign]))
    return recession(psi0, sign)


@dataclass(frozen=True, eq=False)
class LiftedFunction:
    """ψ(s) = ψ₀(s)(1+|s|^p); boundary data of ψ₀ is kept on `base`."""
    base: RingFunction
    p: float

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.base(s) * (1.0 + self.base.norm(s) ** self.p)

    @property
    def name(self) -> str:
        return f"{self.base.name}*(1+|s|^{self.p:g})"

    @property
    def kinks(self) -> Tuple[float, ...]:
        return self.base.kinks

    def recession(self, direction=None) -> float:
        return recession(self.base, direction)


def lift(psi0: RingFunction, p: float) -> LiftedFunction:
    if p < 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")
    return LiftedFunction(psi0, float(p))


# --- ring catalog ---

def _two_point(name: str, fn: ArrayFn, plus: float, minus: float, kinks=(), bound=1.0,
               isotropic=False) -> RingFunction:
    return RingFunction(
        name=name,
        finite=fn,
        compactification=TWO_POINT,
        boundary=lambda d: plus if d > 0 else minus,
        kinks=tuple(kinks),
        bound=float(bound),
        isotropic=isotropic,
    )


def _one_point(name: str, fn: ArrayFn, value: float, kinks=(), bound=1.0) -> RingFunction:
    return RingFunction(name=name, finite=fn, compactification=ONE_POINT,
                        boundary=lambda _d: value, kinks=tuple(kinks), bound=float(bound), isotropic=True)


def sphere_function(name: str, c: float, core: ArrayFn, direction: ArrayFn, p: float, dimension: int,
                    bound: float = 1.0) -> RingFunction:
    parts = SphereParts(float(c), core, direction, float(p))

    def finite(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if dimension == 1 and (s.ndim == 0 or s.shape[-1] != 1):
            s = s[..., None]
        norm = np.linalg.norm(s, axis=-1)
        safe = np.where(norm > 0, norm, 1.0)
        theta = s / safe[..., None]
        radial = norm ** parts.p / (1.0 + norm ** parts.p)
        return parts.c + core(s) + np.where(norm > 0, direction(theta), 0.0) * radial

    return RingFunction(name=name, finite=finite, compactification=Compactification(CompactKind.SPHERE, dimension),
                        sphere=parts, bound=float(bound))


def _clamp(radius: float) -> ArrayFn:
    return lambda r: np.clip(r, -radius, radius)


def _poly_clamped(alpha: float, radius: float) -> RingFunction:
    if alpha < 0 or alpha != int(alpha):
        raise CatalogError(f"poly_clamped: exponent must be a nonnegative integer, got {alpha}")
    a = int(alpha)
    return _two_point(
        f"poly_clamped({a})",
        lambda r: np.clip(r, -radius, radius) ** a,
        radius ** a, (-radius) ** a,
        kinks=(-radius, radius), bound=radius ** a,
    )


def _ring_factories(radius: float) -> Dict[str, Callable[..., RingFunction]]:
    return {
        "one": lambda: _two_point("one", lambda s: np.ones_like(s, dtype=float), 1.0, 1.0, isotropic=True),
        "abs_frac": lambda: _two_point("abs_frac", lambda s: np.abs(s) / (1.0 + np.abs(s)), 1.0, 1.0,
                                       kinks=(0.0,), isotropic=True),
        "signed_frac": lambda: _two_point("signed_frac", lambda s: s / (1.0 + np.abs(s)), 1.0, -1.0, kinks=(0.0,)),
        "sqrt_frac": lambda: _two_point("sqrt_frac", lambda s: np.sqrt(1.0 + s * s) / (1.0 + np.abs(s)), 1.0, 1.0,
                                        kinks=(0.0,), isotropic=True),
        "bump": lambda: _two_point("bump", lambda s: 1.0 / (1.0 + s * s), 0.0, 0.0, isotropic=True),
        "power_frac": lambda q=2.0: _two_point(
            f"power_frac({q:g})", lambda s: np.abs(s) ** q / (1.0 + np.abs(s) ** q), 1.0, 1.0,
            kinks=(0.0,), isotropic=True),
        "double_well_frac": lambda: _two_point(
            "double_well_frac", lambda s: (s * s - 1.0) ** 2 / (1.0 + s ** 4), 1.0, 1.0, isotropic=True),
        "clamp": lambda r=radius: _two_point(f"clamp({r:g})", _clamp(r), r, -r, kinks=(-r, r), bound=r),
        "poly_clamped": lambda alpha=1.0, r=radius: _poly_clamped(alpha, r),
        "abs_frac_one_point": lambda: _one_point("abs_frac_one_point", lambda s: np.abs(s) / (1.0 + np.abs(s)),
                                                 1.0, kinks=(0.0,)),
        "bump_one_point": lambda: _one_point("bump_one_point", lambda s: 1.0 / (1.0 + s * s), 0.0),
        "sphere_first": lambda dim=2.0, p=1.0: sphere_function(
            f"sphere_first({int(dim)},{p:g})", 0.0,
            lambda s: np.zeros(np.shape(s)[:-1]), lambda th: th[..., 0], p, int(dim)),
    }


RING_NAMES = tuple(sorted(_ring_factories(1.0)))


def ring_function(spec: str, clamp_radius: Optional[float] = None) -> RingFunction:
    """Resolve a catalog name such as 'abs_frac' or 'poly_clamped(2)'."""
    name, args = parse_call(spec)
    radius = float(clamp_radius if clamp_radius is not None else settings.CLAMP_RADIUS)
    factories = _ring_factories(radius)
    if name not in factories:
        raise CatalogError(f"Невідома функція кільця: {name}")
    try:
        return factories[name](*args)
    except TypeError:
        raise CatalogError(f"{name}: wrong number of parameters {args}")


@dataclass(frozen=True)
class RayCheck:
    direction: Tuple[float, ...]
    value: float
    boundary: float
    defect: float
    passed: bool


def check_rays(psi0: RingFunction, radius: Optional[float] = None, n_rays: int = 8,
               tol: Optional[float] = None, seed: Optional[int] = None) -> List[RayCheck]:
    """Finite values at |s| = radius must approach the boundary values."""
    radius = float(radius if radius is not None else settings.RAY_RADIUS)
    tol = float(tol if tol is not None else settings.RAY_TOL)
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    dim = psi0.dimension
    out: List[RayCheck] = []
    for i in range(n_rays):
        if dim == 1:
            theta = np.array([1.0 if i % 2 == 0 else -1.0])
        else:
            v = rng.normal(size=dim)
            theta = v / np.linalg.norm(v)
        point = theta * radius if dim > 1 else float(theta[0]) * radius
        value = float(psi0(point))
        if psi0.compactification.kind is CompactKind.ONE_POINT:
            bval = recession(psi0)
        elif psi0.compactification.kind is CompactKind.TWO_POINT:
            bval = recession(psi0, float(theta[0]))
        else:
            bval = recession(psi0, theta)
        defect = abs(value - bval)
        out.append(RayCheck(tuple(float(t) for t in theta), value, bval, defect, defect <= tol))
    failed = [r for r in out if not r.passed]
    if failed:
        logger.warning(f"{psi0.name}: {len(failed)}/{n_rays} rays off boundary data (max defect {max(r.defect for r in failed):.3g})")
    return out


# --- test weights g on the closed domain and the battery ---

@dataclass(frozen=True, eq=False)
class TestWeight:
    __test__ = False
    name: str
    fn: ArrayFn

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape)


_WEIGHTS: Dict[str, ArrayFn] = {
    "one": lambda x: np.ones_like(x),
    "x": lambda x: x,
    "x2": lambda x: x * x,
    "cos_pi": lambda x: np.cos(np.pi * x),
}

WEIGHT_NAMES = tuple(sorted(_WEIGHTS))


def weight_function(name: str) -> TestWeight:
    if name not in _WEIGHTS:
        raise CatalogError(f"Невідома вагова функція g: {name}")
    return TestWeight(name, _WEIGHTS[name])


@dataclass(frozen=True)
class BatteryMember:
    g: TestWeight
    f0: RingFunction
    psi0: RingFunction

    @property
    def label(self) -> Tuple[str, str, str]:
        return self.g.name, self.f0.name, self.psi0.name


@dataclass(frozen=True)
class TestBattery:
    __test__ = False
    name: str
    members: Tuple[BatteryMember, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# Members separate the catalog reference triples on [0,2]: the clamp rows see the μ̂ tables
# at x=1, the signed_frac rows see the split of ν̂ between ±∞.
DEFAULT_BATTERY_SPEC: Tuple[Tuple[str, str, str], ...] = (
    ("one", "one", "one"),
    ("one", "clamp", "one"),
    ("one", "one", "signed_frac"),
    ("one", "clamp", "signed_frac"),
    ("x", "one", "abs_frac"),
    ("x", "clamp", "one"),
    ("one", "poly_clamped(2)", "one"),
    ("one", "poly_clamped(2)", "signed_frac"),
    ("x2", "poly_clamped(3)", "abs_frac"),
    ("one", "bump", "one"),
    ("x", "bump", "signed_frac"),
    ("one", "clamp", "abs_frac"),
)


def make_battery(spec: Sequence[Sequence[str]], name: str = "custom",
                 clamp_radius: Optional[float] = None) -> TestBattery:
    members = []
    for triple in spec:
        if len(triple) != 3:
            raise CatalogError(f"battery member needs (g, f0, psi0), got {list(triple)}")
        g, f0, psi0 = triple
        members.append(BatteryMember(weight_function(g), ring_function(f0, clamp_radius),
                                     ring_function(psi0, clamp_radius)))
    return TestBattery(name, tuple(members))


def default_battery(clamp_radius: Optional[float] = None) -> TestBattery:
    return make_battery(DEFAULT_BATTERY_SPEC, "default", clamp_radius)
