# tests/test_compactify.py
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from compactify import (ONE_POINT, TWO_POINT, CompactKind, Compactification, KindMismatchError, RecessionError,
                        RingFunction, check_rays, default_battery, lift, make_battery, recession, ring_function,
                        scalar_recession, weight_function, DEFAULT_BATTERY_SPEC, RING_NAMES)
from utils import CatalogError


def test_abs_frac_values():
    f = ring_function("abs_frac")
    assert np.allclose(f(np.array([0.0, 1.0, -3.0])), [0.0, 0.5, 0.75])


@pytest.mark.parametrize("name,plus,minus", [
    ("one", 1.0, 1.0),
    ("abs_frac", 1.0, 1.0),
    ("signed_frac", 1.0, -1.0),
    ("bump", 0.0, 0.0),
    ("clamp", 1.0, -1.0),
])
def test_two_point_recession(name, plus, minus):
    f = ring_function(name)
    assert recession(f, 1.0) == plus
    assert recession(f, -1.0) == minus


def test_two_point_needs_direction():
    with pytest.raises(KindMismatchError):
        recession(ring_function("abs_frac"))
    with pytest.raises(KindMismatchError):
        recession(ring_function("abs_frac"), 0.5)


def test_one_point_takes_no_direction():
    f = ring_function("abs_frac_one_point")
    assert recession(f) == 1.0
    assert scalar_recession(f, -1.0) == 1.0
    with pytest.raises(KindMismatchError):
        recession(f, 1.0)


def test_missing_boundary_data():
    bare = RingFunction("bare", lambda s: np.zeros_like(s))
    with pytest.raises(RecessionError):
        recession(bare, 1.0)


def test_two_point_is_scalar_only():
    assert TWO_POINT.kind is CompactKind.TWO_POINT
    assert ONE_POINT.kind is CompactKind.ONE_POINT
    with pytest.raises(KindMismatchError):
        Compactification(CompactKind.TWO_POINT, 2)


def test_sphere_recession_is_direction_function():
    f = ring_function("sphere_first(2,1)")
    assert recession(f, np.array([1.0, 0.0])) == pytest.approx(1.0)
    assert recession(f, np.array([0.0, -1.0])) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        recession(f, np.array([2.0, 0.0]))


def test_lift_multiplies_growth():
    psi = lift(ring_function("power_frac(2)"), 2.0)
    assert float(psi(3.0)) == pytest.approx(9.0)
    assert psi.recession(1.0) == 1.0
    with pytest.raises(ValueError):
        lift(ring_function("one"), 0.5)


def test_clamp_radius_is_configurable():
    f = ring_function("clamp", 2.0)
    assert f.name == "clamp(2)"
    assert float(f(5.0)) == 2.0
    assert recession(f, -1.0) == -2.0


def test_unknown_ring_name():
    with pytest.raises(CatalogError):
        ring_function("nope")
    with pytest.raises(CatalogError):
        ring_function("abs_frac(1, 2, 3)")


@pytest.mark.parametrize("name", ["one", "abs_frac", "signed_frac", "sqrt_frac", "bump", "power_frac(2)",
                                  "double_well_frac", "abs_frac_one_point", "bump_one_point"])
def test_catalog_rays_reach_boundary(name):
    assert all(r.passed for r in check_rays(ring_function(name)))


def test_rays_flag_wrong_boundary_data():
    wrong = RingFunction("wrong", lambda s: np.abs(s) / (1.0 + np.abs(s)), boundary=lambda d: 0.5)
    assert not any(r.passed for r in check_rays(wrong))


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
@hsettings(max_examples=200, deadline=None)
def test_catalog_functions_are_bounded(s):
    for name in RING_NAMES:
        if name == "sphere_first":
            continue
        f = ring_function(name)
        assert abs(float(f(s))) <= f.bound + 1e-12


def test_weights_broadcast():
    g = weight_function("one")
    assert g(np.zeros((3, 2))).shape == (3, 2)
    with pytest.raises(CatalogError):
        weight_function("x3")


def test_default_battery_has_twelve_members():
    b = default_battery()
    assert len(b) == 12 == len(DEFAULT_BATTERY_SPEC)
    assert b.members[1].label == ("one", "clamp(1)", "one")


def test_custom_battery_rejects_short_member():
    with pytest.raises(CatalogError):
        make_battery([("one", "one")])
