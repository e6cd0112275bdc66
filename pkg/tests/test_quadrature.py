# tests/test_quadrature.py
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from quadrature import cut_interval, gauss_legendre, gauss_nodes, integrate_intervals, integrate_pieces, split_points


@pytest.mark.parametrize("degree", range(0, 16))
def test_order_eight_is_exact_to_degree_fifteen(degree):
    value = integrate_intervals([0.0], [2.0], lambda x: x ** degree, order=8)
    assert value == pytest.approx(2.0 ** (degree + 1) / (degree + 1), rel=1e-12)


def test_bad_order():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_split_points_cut_at_kinks():
    a, b, idx = split_points(np.array([0.0]), np.array([2.0]), np.array([-1.0]), np.array([1.0]), kinks=(0.0,))
    assert list(a) == [0.0, 1.0]
    assert list(b) == [1.0, 2.0]
    assert list(idx) == [0, 0]


def test_integrate_pieces_kinked_f_is_exact():
    # u(x) = x - 1 on [0, 2], ∫|u| = 1
    value = integrate_pieces(np.array([0.0]), np.array([2.0]), np.array([-1.0]), np.array([1.0]), np.array([1.0]),
                             g=np.ones_like, f=np.abs, psi=np.ones_like, kinks=(0.0,))
    assert value == pytest.approx(1.0, abs=1e-14)


def test_integrate_pieces_radial_disc_area():
    value = integrate_pieces(np.array([0.0]), np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([0.0]),
                             g=np.ones_like, f=np.ones_like, psi=np.ones_like, radial_dim=2)
    assert value == pytest.approx(math.pi)


def test_cut_interval():
    cuts = cut_interval(0.0, 2.0, [(1.0, -1.0)], kinks=(0.0, 5.0))
    assert list(cuts) == [0.0, 1.0, 2.0]
    assert list(cut_interval(0.0, 1.0, [(3.0, 0.0)], (3.0,))) == [0.0, 1.0]


def test_gauss_nodes_inside():
    xs = gauss_nodes(1.0, 3.0)
    assert xs.shape == (8,)
    assert np.all((xs > 1.0) & (xs < 3.0))


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.1, max_value=5))
@hsettings(max_examples=100, deadline=None)
def test_piecewise_linear_abs_exact(c0, c1):
    # ∫_0^1 |c0 + c1 x| dx in closed form
    root = -c0 / c1
    if 0 < root < 1:
        exact = 0.5 * abs(c0) * root + 0.5 * abs(c0 + c1) * (1 - root)
    else:
        exact = abs(c0 + 0.5 * c1)
    cuts = cut_interval(0.0, 1.0, [(c0, c1)], (0.0,))
    value = integrate_intervals(cuts[:-1], cuts[1:], lambda x: np.abs(c0 + c1 * x))
    assert value == pytest.approx(exact, abs=1e-12)
