# src/quadrature.py
# Кусково-точна квадратура Гаусса–Лежандра з розбиттям у точках зламу

from __future__ import annotations

import functools
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from config import settings

ArrayFn = Callable[[np.ndarray], np.ndarray]


@functools.lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    if order < 1:
        raise ValueError(f"quadrature order must be positive, got {order}")
    t, w = leggauss(order)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def split_points(left: np.ndarray, right: np.ndarray, u_left: np.ndarray, slope: np.ndarray,
                 kinks: Sequence[float] = ()) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Cut every piece [left_i, right_i] where the affine map u = u_left + slope·(x - left)
    crosses a kink value. Returns (a, b, piece index) ordered left to right.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    n = left.shape[0]
    points = [left, right]
    owners = [np.arange(n), np.arange(n)]
    u_left = np.asarray(u_left, dtype=float)
    slope = np.asarray(slope, dtype=float)
    for r in kinks:
        with np.errstate(divide="ignore", invalid="ignore"):
            x = left + (float(r) - u_left) / slope
        ok = (slope != 0) & (x > left) & (x < right)
        points.append(x[ok])
        owners.append(np.nonzero(ok)[0])
    pts = np.concatenate(points)
    own = np.concatenate(owners)
    order = np.lexsort((pts, own))
    pts, own = pts[order], own[order]
    same = own[1:] == own[:-1]
    a, b, idx = pts[:-1][same], pts[1:][same], own[:-1][same]
    keep = b > a
    return a[keep], b[keep], idx[keep]


def integrate_pieces(left: np.ndarray, right: np.ndarray, u_left: np.ndarray, slope: np.ndarray,
                     w: np.ndarray, g: ArrayFn, f: ArrayFn, psi: ArrayFn, kinks: Sequence[float] = (),
                     order: Optional[int] = None, radial_dim: int = 1) -> float:
    """
    Σ_i ∫_{piece i} g(x)·f(u(x))·psi(w_i) dx with u affine and w constant on each piece.

    radial_dim > 1 integrates over a ball in polar form (factor |S^{n-1}|·r^{n-1}).
    Summation is left to right over subintervals and pairwise (np.sum), independent of workers.
    """
    order = int(order or settings.QUAD_ORDER)
    left = np.asarray(left, dtype=float)
    a, b, idx = split_points(left, right, u_left, slope, kinks)
    if a.size == 0:
        return 0.0
    t, wq = gauss_legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * t[None, :]
    u = np.asarray(u_left, dtype=float)[idx][:, None] + np.asarray(slope, dtype=float)[idx][:, None] * (x - left[idx][:, None])
    vals = np.asarray(g(x), dtype=float) * np.asarray(f(u), dtype=float)
    if radial_dim > 1:
        vals = vals * x ** (radial_dim - 1)
    inner = np.sum(vals * wq[None, :], axis=1)
    contrib = half * inner * np.asarray(psi(np.asarray(w, dtype=float)[idx]), dtype=float)
    total = float(np.sum(contrib))
    if radial_dim > 1:
        total *= 2 * math.pi ** (radial_dim / 2) / math.gamma(radial_dim / 2)
    return total


def integrate_intervals(lefts: Sequence[float], rights: Sequence[float], fn: ArrayFn,
                        order: Optional[int] = None) -> float:
    """Σ ∫_{[a_i, b_i]} fn(x) dx by fixed-order Gauss–Legendre; fn is vectorized."""
    order = int(order or settings.QUAD_ORDER)
    a = np.asarray(lefts, dtype=float)
    b = np.asarray(rights, dtype=float)
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0
    t, wq = gauss_legendre(order)
    half = 0.5 * (b - a)
    x = 0.5 * (a + b)[:, None] + half[:, None] * t[None, :]
    vals = np.asarray(fn(x), dtype=float)
    return float(np.sum(half * np.sum(vals * wq[None, :], axis=1)))


def cut_interval(a: float, b: float, maps: Sequence[Tuple[float, float]], kinks: Sequence[float]) -> np.ndarray:
    """
    Sorted cut points of [a, b] where any affine map x -> c0 + c1·x crosses a kink value.
    """
    pts = {float(a), float(b)}
    for c0, c1 in maps:
        if c1 == 0:
            continue
        for r in kinks:
            x = (float(r) - c0) / c1
            if a < x < b:
                pts.add(float(x))
    return np.array(sorted(pts))


def gauss_nodes(a: float, b: float, order: Optional[int] = None) -> np.ndarray:
    t, _ = gauss_legendre(int(order or settings.QUAD_ORDER))
    return 0.5 * (a + b) + 0.5 * (b - a) * t
