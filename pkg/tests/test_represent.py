# tests/test_represent.py
import pytest

from compactify import ring_function, weight_function
from families import builtin
from measures import integrate_triple, validate_triple
from represent import (OUTSIDE_HYPOTHESES, SubcriticalityError, builtin_integrand, dirac_completion, dual_triple,
                       integrand_from_dict, integrate_dual, marginal, represent_limit, simplify_check,
                       sobolev_exponent)
from triples import reference_triple
from utils import CatalogError


@pytest.mark.parametrize("family, integrand, total", [
    ("ex_first", "r_weighted_mass", -0.5),
    ("ex_first", "abs_grad", 3.0),
    ("ex_first", "signed_grad", -1.0),
    ("ramp", "limit0", 4.0 / 3.0),
    ("sawtooth", "grad_power(2)", 1.0),
])
def test_represent_catalog(family, integrand, total):
    rep = represent_limit(builtin(family), reference_triple(family), builtin_integrand(integrand))
    assert rep.total == pytest.approx(total, abs=1e-9)
    assert rep.total == pytest.approx(rep.oscillation + rep.concentration)


def test_ex_first_split():
    rep = represent_limit(builtin("ex_first"), reference_triple("ex_first"), builtin_integrand("r_weighted_mass"))
    assert rep.oscillation == pytest.approx(-1.0, abs=1e-12)
    assert rep.concentration == pytest.approx(0.5, abs=1e-12)


def test_p_one_is_labelled():
    rep = represent_limit(builtin("ex_first"), reference_triple("ex_first"), builtin_integrand("abs_grad"))
    assert not rep.within_hypotheses
    assert rep.note.startswith(OUTSIDE_HYPOTHESES)


def test_sawtooth_within_hypotheses():
    rep = represent_limit(builtin("sawtooth"), reference_triple("sawtooth"), builtin_integrand("grad_power(2)"))
    assert rep.within_hypotheses
    assert rep.concentration == 0.0


def test_inconsistent_gradient_is_labelled():
    rep = represent_limit(builtin("fixed_u"), reference_triple("fixed_u"), builtin_integrand("abs_grad"))
    assert "not the gradient" in rep.note


def test_exponent_mismatch():
    with pytest.raises(ValueError):
        represent_limit(builtin("ex_first"), reference_triple("ex_first"), builtin_integrand("grad_power(2)"))


def test_supercritical_q():
    integrand = integrand_from_dict({"name": "heavy", "h02": [["one", "one", "one"]], "p": 1.5, "q": 10})
    assert sobolev_exponent(1.5, 2) == pytest.approx(6.0)
    with pytest.raises(SubcriticalityError):
        represent_limit(builtin("hat_scaling(3,2)"), reference_triple("sawtooth"), integrand)


def test_integrand_catalog_errors():
    with pytest.raises(CatalogError):
        builtin_integrand("no_such")
    with pytest.raises(ValueError):
        integrand_from_dict({"name": "empty"})
    with pytest.raises(ValueError):
        integrand_from_dict({"h01": [["one", "one"]]})


def test_integrand_growth_bound():
    assert builtin_integrand("r_weighted_mass").growth_defect([0.0, 1.0]) == 0.0


def test_simplify_check_ramp(schedule):
    report = simplify_check(builtin("ramp"), builtin_integrand("u_mass(2)"), schedule=schedule)
    assert report.simplified == pytest.approx(3.0, abs=1e-12)
    assert report.passed


@pytest.mark.parametrize("g, f0, psi0, expected", [
    ("one", "one", "one", 3.0),
    ("one", "clamp", "one", 2.0),
    ("x", "one", "one", 0.5),
    ("one", "bump", "one", 2.0),
])
def test_ramp_dual(g, f0, psi0, expected, schedule):
    dual = dual_triple(builtin("ramp"), q=2.0, schedule=schedule)
    assert validate_triple(dual).passed
    value = integrate_dual(dual, weight_function(g), ring_function(f0), ring_function(psi0))
    assert value == pytest.approx(expected, abs=1e-12)


def test_sawtooth_dual_sees_gradient_law(schedule):
    dual = dual_triple(builtin("sawtooth"), q=2.0, schedule=schedule)
    # ψ₀ = abs_frac at s = ±1 gives ½
    value = integrate_dual(dual, weight_function("one"), ring_function("one"), ring_function("abs_frac"))
    assert value == pytest.approx(0.5, abs=1e-12)


def test_marginal_is_trace(schedule):
    dual = dual_triple(builtin("ramp"), q=2.0, schedule=schedule)
    nu = marginal(dual, 0.5)
    assert [(a.location, a.weight) for a in nu.atoms] == [(1.0, 1.0)]


def test_dirac_completion():
    t = dirac_completion(reference_triple("ex_first"), lambda x: -0.5)
    one = weight_function("one")
    # u = -1 on (1,2) plus 3·(-½) at the atom
    assert integrate_triple(t, one, ring_function("clamp"), ring_function("one")) == pytest.approx(-2.5)
    assert integrate_triple(t, one, ring_function("one"), ring_function("one")) == pytest.approx(5.0)
