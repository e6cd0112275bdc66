"""
quasiconvex: upper bounds for the quasiconvex envelope, counterexample search and the
boundary growth-from-below test.

Test functions are piecewise affine on a uniform grid of the unit cell (0, 1) and vanish
at both ends, so ∫ψ(s₀+φ') is an exact finite sum. Matrix-valued s₀ is reduced to
laminates s₀ + t·b⊗a along a fixed list of directions.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from metrics import ENVELOPE_STARTS
from utils import CatalogError, parallel_map, parse_call

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

MIN_CELLS = 4


class EvaluationError(ValueError):
    """ψ returned a non-finite value."""


def _checked(psi: ArrayFn, s: np.ndarray) -> np.ndarray:
    values = np.asarray(psi(s), dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError("ψ is not finite on the trial gradients")
    return values


def _energy(psi: ArrayFn, s0: float, phi: np.ndarray) -> float:
    """(1/|Ω|)∫ψ(s₀+φ') with nodal values φ (interior nodes only)."""
    n = phi.shape[0] + 1
    full = np.concatenate(([0.0], phi, [0.0]))
    return float(np.mean(_checked(psi, s0 + np.diff(full) * n)))


def _descend(psi: ArrayFn, s0: float, phi: np.ndarray, max_sweeps: int = 200, min_step: float = 1e-9) -> np.ndarray:
    """Red-black coordinate descent with shrinking steps; only strict improvements are kept."""
    n = phi.shape[0] + 1
    h = 1.0 / n
    phi = phi.copy()
    step = 0.25 * max(1.0, abs(s0))
    while step >= min_step * h:
        for _ in range(max_sweeps):
            moved = False
            for color in (0, 1):
                idx = np.arange(color, n - 1, 2)
                if idx.size == 0:
                    continue
                full = np.concatenate(([0.0], phi, [0.0]))
                left, right = full[idx], full[idx + 2]

                def local(v):
                    return _checked(psi, s0 + (v - left) * n) + _checked(psi, s0 + (right - v) * n)

                current = local(phi[idx])
                up, down = local(phi[idx] + step), local(phi[idx] - step)
                best = np.minimum(up, down)
                better = best < current
                if np.any(better):
                    moved = True
                    delta = np.where(up <= down, step, -step)
                    phi[idx] = np.where(better, phi[idx] + delta, phi[idx])
            if not moved:
                break
        step *= 0.5
    return phi


def _laminate(n: int, n_plus: int, t_plus: float) -> np.ndarray:
    """Nodal values of the function with slope t₊ on the first n₊ cells and zero mean slope."""
    lam = n_plus / n
    t_minus = -lam * t_plus / (1.0 - lam)
    slopes = np.where(np.arange(n) < n_plus, t_plus, t_minus)
    return np.cumsum(slopes / n)[:-1]


def _best_laminate(psi: ArrayFn, s0: float, n: int, radius: float = 4.0, n_t: int = 241) -> np.ndarray:
    """Grid scan over two-slope laminates realizable on n cells."""
    lam = np.arange(1, n)[:, None] / n
    t_plus = np.linspace(0.0, radius, n_t)[None, :]
    t_minus = -lam * t_plus / (1.0 - lam)
    energy = lam * _checked(psi, s0 + t_plus) + (1.0 - lam) * _checked(psi, s0 + t_minus)
    i, j = np.unravel_index(int(np.argmin(energy)), energy.shape)
    return _laminate(n, i + 1, float(t_plus[0, j]))


def _random_laminate(rng: np.random.Generator, n: int, radius: float = 4.0) -> np.ndarray:
    n_plus = int(rng.integers(1, n))
    t_plus = float(rng.uniform(-radius, radius))
    return _laminate(n, n_plus, t_plus)


def _prolong(phi: np.ndarray) -> np.ndarray:
    """Same piecewise-affine function on the grid refined by two."""
    full = np.concatenate(([0.0], phi, [0.0]))
    fine = np.empty(2 * full.shape[0] - 1)
    fine[0::2] = full
    fine[1::2] = 0.5 * (full[:-1] + full[1:])
    return fine[1:-1]


def _levels(n: int) -> List[int]:
    out = [n]
    while out[-1] % 2 == 0 and out[-1] // 2 >= MIN_CELLS:
        out.append(out[-1] // 2)
    return out[::-1]


def _scalar_envelope(psi: ArrayFn, s0: float, n: int, starts: int, seed: int, jobs: int) -> Tuple[float, np.ndarray]:
    best_value, best_phi = None, None
    for level in _levels(n):
        def run(i: int, level=level) -> Tuple[float, np.ndarray]:
            ENVELOPE_STARTS.inc()
            if i == 0:
                phi0 = np.zeros(level - 1)
            elif i == 1:
                phi0 = _best_laminate(psi, s0, level)
            else:
                phi0 = _random_laminate(np.random.default_rng([seed, level, i]), level)
            phi = _descend(psi, s0, phi0)
            return _energy(psi, s0, phi), phi

        candidates = parallel_map(run, range(max(1, starts)), jobs)
        if best_phi is not None:
            coarse = _prolong(best_phi)
            refined = _descend(psi, s0, coarse)
            candidates.append((_energy(psi, s0, refined), refined))
            # the coarse optimum lives in the finer space
            candidates.append((best_value, coarse))
        value, phi = min(candidates, key=lambda c: c[0])
        best_value, best_phi = value, phi
    return best_value, best_phi


def laminate_directions(m: int, n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Rank-one directions b⊗a with a, b from coordinate and diagonal unit vectors."""
    def units(d: int) -> List[np.ndarray]:
        out = [np.eye(d)[i] for i in range(d)]
        for i, j in itertools.combinations(range(d), 2):
            for sgn in (1.0, -1.0):
                v = np.zeros(d)
                v[i], v[j] = 1.0, sgn
                out.append(v / np.sqrt(2.0))
        return out
    return [(b, a) for b in units(m) for a in units(n)]


def qc_envelope_upper(psi: ArrayFn, s0, N: int = 64, M: int = 16, seed: Optional[int] = None,
                      jobs: Optional[int] = None) -> float:
    """
    min over M multistarts of (1/|Ω|)∫ψ(s₀+∇φ), φ in the span of the zero-boundary hats of an
    N-cell grid. Always >= Qψ(s₀). For matrix s₀ the minimum also runs over laminate directions.
    """
    if N < MIN_CELLS:
        raise ValueError(f"grid needs at least {MIN_CELLS} cells, got {N}")
    seed = settings.SEED if seed is None else int(seed)
    jobs = jobs or settings.JOBS
    s0_arr = np.asarray(s0, dtype=float)
    if s0_arr.ndim == 0:
        value, _ = _scalar_envelope(psi, float(s0_arr), int(N), int(M), seed, jobs)
        return value
    if s0_arr.ndim != 2:
        raise ValueError("s₀ must be a scalar or an m×n matrix")
    best = float(np.asarray(psi(s0_arr), dtype=float))
    for b, a in laminate_directions(*s0_arr.shape):
        direction = np.outer(b, a)
        along = lambda t, d=direction: psi(s0_arr + np.asarray(t, dtype=float)[..., None, None] * d)
        value, _ = _scalar_envelope(along, 0.0, int(N), int(M), seed, jobs)
        best = min(best, value)
    return best


def convex_envelope_1d(values: np.ndarray, grid: np.ndarray, n_slopes: int = 2001) -> np.ndarray:
    """Legendre–Fenchel biconjugate of grid data; slopes are the chord slopes plus a uniform fan."""
    s = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    chords = np.diff(v) / np.diff(s)
    slopes = np.union1d(chords, np.linspace(chords.min(), chords.max(), n_slopes))
    conj = np.max(slopes[:, None] * s[None, :] - v[None, :], axis=1)
    return np.max(s[:, None] * slopes[None, :] - conj[None, :], axis=1)


def envelope_oracle(psi: ArrayFn, s0, radius: float = 4.0, n: int = 1601) -> np.ndarray:
    """Convex (= quasiconvex, scalar case) envelope of ψ interpolated at s₀."""
    grid = np.linspace(-radius, radius, n)
    env = convex_envelope_1d(_checked(psi, grid), grid)
    return np.interp(np.asarray(s0, dtype=float), grid, env)


@dataclass(frozen=True)
class Witness:
    phi: np.ndarray
    value: float
    baseline: float
    direction: Optional[np.ndarray] = None


def qc_witness_search(psi: ArrayFn, s0, trials: int = 16, N: int = 16, seed: Optional[int] = None,
                      margin: Optional[float] = None) -> Optional[Witness]:
    """Laminate trials φ with ∫ψ(s₀+φ') < ψ(s₀)|Ω| - margin; the first trial is the symmetric one, slopes ±1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    margin = settings.WITNESS_MARGIN if margin is None else margin
    rng = np.random.default_rng([settings.SEED if seed is None else int(seed), N])
    s0_arr = np.asarray(s0, dtype=float)
    if s0_arr.ndim == 0:
        lines = [(lambda t: psi(float(s0_arr) + t), None)]
    else:
        lines = [(lambda t, d=np.outer(b, a): psi(s0_arr + np.asarray(t, dtype=float)[..., None, None] * d), np.outer(b, a))
                 for b, a in laminate_directions(*s0_arr.shape)]
    baseline = float(np.asarray(psi(s0_arr), dtype=float))
    for i in range(trials):
        if i == 0:
            n_plus, alpha = N // 2, 1.0
        else:
            n_plus, alpha = int(rng.integers(1, N)), float(rng.uniform(0.05, 4.0))
        phi = _laminate(N, n_plus, alpha)
        for along, direction in lines:
            value = _energy(along, 0.0, phi)
            if value < baseline - margin:
                logger.info(f"quasiconvexity witness at trial {i}: {value:.6g} < {baseline:.6g}")
                return Witness(phi, value, baseline, direction)
    return None


# --- boundary growth from below ---

@dataclass(frozen=True)
class PqscbRow:
    eps: float
    constant: float
    exponent: float
    violated: bool


def pqscb_test(h: ArrayFn, p: float, eps_grid: Sequence[float], amplitudes: Optional[Sequence[float]] = None,
               lengths: Optional[Sequence[float]] = None) -> List[PqscbRow]:
    """
    ∫_{(-1,0)} h(φ') >= -ε∫|φ'|^p - C for ramps φ' = ±a·ℓ^{-1/p} on (-ℓ, 0), zero elsewhere
    (energy ∫|φ'|^p = a^p). C(a) is the smallest constant that works up to amplitude a; the verdict
    is "violated" when log C grows at least BLOWUP_EXPONENT times faster than log a.
    """
    if p <= 1:
        raise ValueError("pqscb test needs p > 1")
    amplitudes = np.asarray(amplitudes if amplitudes is not None else 2.0 ** np.arange(0, 11), dtype=float)
    lengths = np.asarray(lengths if lengths is not None else 2.0 ** -np.arange(0, 7), dtype=float)
    h0 = float(np.asarray(h(np.array(0.0)), dtype=float))
    a = amplitudes[:, None, None]
    ell = lengths[None, :, None]
    sign = np.array([1.0, -1.0])[None, None, :]
    grad = sign * a * ell ** (-1.0 / p)
    integral = ell * np.asarray(h(grad), dtype=float) + (1.0 - ell) * h0
    energy = np.broadcast_to(a ** p, integral.shape)
    rows = []
    half = amplitudes.shape[0] // 2
    for eps in eps_grid:
        need = np.max((-integral - eps * energy).reshape(amplitudes.shape[0], -1), axis=1)
        c = np.maximum.accumulate(np.maximum(need, 0.0))
        tail = slice(half, None)
        positive = c[tail] > 0
        exponent = 0.0
        if np.count_nonzero(positive) >= 2:
            xs, ys = np.log(amplitudes[tail][positive]), np.log(c[tail][positive])
            exponent = float(np.polyfit(xs, ys, 1)[0])
        violated = exponent >= settings.BLOWUP_EXPONENT
        rows.append(PqscbRow(float(eps), float(c[-1]), exponent, violated))
    return rows


# --- catalog of full-growth functions for the envelope command ---

def _full_growth():
    return {
        "square": lambda: (lambda s: np.asarray(s) ** 2),
        "abs": lambda: (lambda s: np.abs(s)),
        "double_well": lambda: (lambda s: (np.asarray(s) ** 2 - 1.0) ** 2),
        "power": lambda p=2.0: (lambda s: np.abs(s) ** p),
        "neg_power": lambda p=2.0: (lambda s: -np.abs(s) ** p),
        # (|F|²-1)² on matrices
        "frobenius_well": lambda: (lambda F: (np.sum(np.asarray(F) ** 2, axis=(-2, -1)) - 1.0) ** 2),
    }


FULL_GROWTH_NAMES = tuple(_full_growth())


def full_growth_function(spec: str) -> ArrayFn:
    name, args = parse_call(spec)
    factories = _full_growth()
    if name not in factories:
        raise CatalogError(f"Невідома функція ψ: {name}")
    try:
        return factories[name](*args)
    except TypeError:
        raise CatalogError(f"{name}: wrong number of parameters {args}")
