# tests/test_families.py
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from compactify import ring_function, weight_function
from families import (DomainError, FAMILY_NAMES, breakpoints, builtin, check_continuity, evaluate,
                      family_from_dict, hat_scaling)
from limits import functional_value
from utils import CatalogError


def test_catalog_names():
    for name in ("ex_first", "down_up_down", "fixed_u", "ex_simple", "ramp", "sawtooth", "constant", "hat_scaling"):
        assert name in FAMILY_NAMES


@pytest.mark.parametrize("x,u,w", [(0.5, 0.0, 0.0), (1.5, -1.0, 0.0)])
def test_ex_first_outside_the_spike(x, u, w):
    assert evaluate(builtin("ex_first"), 64, x) == (pytest.approx(u), pytest.approx(w))


def test_ex_first_up_and_down_ramps():
    fam = builtin("ex_first")
    k = 64
    u, w = evaluate(fam, k, 1.0 - 0.5 / k)
    assert (u, w) == (pytest.approx(0.5), pytest.approx(k))
    u, w = evaluate(fam, k, 1.0 + 0.5 / k)
    assert (u, w) == (pytest.approx(0.0), pytest.approx(-2 * k))


def test_ex_first_breakpoints():
    assert breakpoints(builtin("ex_first"), 4) == pytest.approx([0.0, 0.75, 1.0, 1.25, 2.0])


def test_evaluate_rejects_bad_input():
    fam = builtin("ex_first")
    with pytest.raises(DomainError):
        evaluate(fam, 8, 3.0)
    with pytest.raises(ValueError):
        evaluate(fam, 0, 0.5)


@pytest.mark.parametrize("name", ["ex_first", "down_up_down", "ex_simple", "ramp", "sawtooth", "constant(0.25)",
                                  "hat_scaling(2)"])
@pytest.mark.parametrize("k", [2, 16, 1024])
def test_sobolev_families_are_continuous(name, k):
    assert check_continuity(builtin(name), k) == pytest.approx(0.0, abs=1e-9)


def test_fixed_u_is_not_gradient_consistent():
    fam = builtin("fixed_u")
    assert not fam.gradient_consistent
    assert check_continuity(fam, 16) == pytest.approx(1.0)


@given(st.integers(min_value=1, max_value=2 ** 12), st.floats(min_value=0.0, max_value=1.0))
@hsettings(max_examples=200, deadline=None)
def test_sawtooth_is_small_with_unit_slopes(k, x):
    u, w = evaluate(builtin("sawtooth"), k, x)
    assert abs(u) <= 0.5 / k + 1e-12
    assert abs(w) == pytest.approx(1.0)


def test_constant_family():
    fam = builtin("constant(0.25)")
    assert evaluate(fam, 8, 0.3) == (pytest.approx(0.25), pytest.approx(0.0))
    assert float(fam.limit_u(0.7)) == pytest.approx(0.25)


def test_limit_u_and_grad():
    fam = builtin("ramp")
    assert float(fam.limit_u(-0.5)) == 0.0
    assert float(fam.limit_u(0.5)) == 1.0
    assert float(fam.limit_grad(0.5)) == 0.0


def test_unknown_family():
    with pytest.raises(CatalogError):
        builtin("exfirst")


def test_hat_scaling_energy_and_reference_limit():
    fam = hat_scaling(2.0)
    one = weight_function("one")
    f0, psi0 = ring_function("one"), ring_function("power_frac(2)")
    assert fam.gradient_energy() == pytest.approx(2.0)
    assert fam.reference_limit(one, f0, psi0) == pytest.approx(2.0)
    # the energy does not depend on k
    assert functional_value(fam.as_piecewise(), 1024, one, f0, psi0) == pytest.approx(2.0)


def test_radial_hat_reference_limit():
    fam = hat_scaling(2.0, 2)
    one = weight_function("one")
    assert fam.reference_limit(one, ring_function("one"), ring_function("power_frac(2)")) == pytest.approx(math.pi)


def test_reference_limit_needs_p_at_least_n():
    with pytest.raises(ValueError):
        hat_scaling(1.5, 2).reference_limit(weight_function("one"), ring_function("one"), ring_function("one"))


def test_radial_reference_limit_needs_isotropic_psi():
    with pytest.raises(ValueError):
        hat_scaling(2.0, 2).reference_limit(weight_function("one"), ring_function("one"),
                                            ring_function("signed_frac"))


def test_family_from_dict_matches_catalog():
    raw = {
        "name": "ramp_copy",
        "domain": [-1, 1],
        "pieces": [
            {"right": [0, 0]},
            {"right": [0, 1], "slope": [0, 1]},
            {"right": [1, 0]},
        ],
        "limit": [{"left": -1, "right": 0, "value": 0}, {"left": 0, "right": 1, "value": 1}],
    }
    custom = family_from_dict(raw)
    ref = builtin("ramp")
    for k in (4, 64):
        assert np.allclose(custom.pieces(k).right, ref.pieces(k).right)
        assert np.allclose(custom.pieces(k).slope, ref.pieces(k).slope)


@pytest.mark.parametrize("raw", [
    {"pieces": [{"right": [1, 0]}]},
    {"domain": [0, 1]},
    {"domain": [0, 1], "pieces": [{"slope": [1, 0]}]},
    {"domain": [0, 1], "pieces": [{"right": [2, 0]}]},
])
def test_family_from_dict_rejects_malformed(raw):
    with pytest.raises(ValueError):
        family_from_dict(raw)


@pytest.mark.parametrize("name", FAMILY_NAMES)
@pytest.mark.parametrize("k", [2 ** j for j in range(4, 15)])
def test_w_is_the_derivative_of_u_between_breakpoints(name, k):
    fam = builtin(name)
    if not fam.gradient_consistent:
        pytest.skip(f"{name}: w_k is not the gradient of u_k")
    cuts = np.asarray(breakpoints(fam, k))
    widths = np.diff(cuts)
    keep = widths > 0
    mid = (cuts[:-1] + widths / 2)[keep]
    h = widths[keep] / 4
    table = fam.pieces(k)
    slope = (table.u_at(mid + h) - table.u_at(mid - h)) / (2 * h)
    w = table.w_at(mid)
    assert np.max(np.abs(slope - w) / np.maximum(1.0, np.abs(w))) < 1e-8
    x = float(mid[len(mid) // 2])
    assert evaluate(fam, k, x)[1] == pytest.approx(float(table.w_at(x)))
