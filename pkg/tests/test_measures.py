# tests/test_measures.py
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from compactify import ring_function, weight_function
from measures import (Atom, CompactifiedProbability, DegenerateFiberError, DensityPiece, FiberCell, FiberFamily,
                      IncompleteTripleError, RadonMeasure, barycenter_check, boundary_law, dirac, finite_mu_is_trace,
                      integrate_triple, mixture, triple_from_dict, triple_to_dict, uniform, validate_dm,
                      validate_triple, young_from_dm)
from triples import TRIPLE_NAMES, reference_triple

CATALOG = [n for n in TRIPLE_NAMES if n not in ("constant", "hat_scaling")] + ["constant(0.25)", "hat_scaling(2)"]


def _mutate_cell(triple, index, **changes):
    cells = list(triple.fibers.cells)
    cells[index] = replace(cells[index], **changes)
    return FiberFamily(triple.domain, tuple(cells))


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_triples_validate(name):
    report = validate_triple(reference_triple(name))
    assert report.passed, report.failed()


def test_unnormalized_fiber_is_caught():
    t = reference_triple("sawtooth")
    nu = CompactifiedProbability(atoms=(Atom(-1.0, 0.5), Atom(1.0, 0.6)))
    report = validate_dm(t.sigma, _mutate_cell(t, 0, nu_hat=nu), t.p)
    assert not report["normalization"].passed


def test_broken_density_formula_is_caught():
    t = reference_triple("sawtooth")
    sigma = RadonMeasure((DensityPiece(0.0, 1.0, (1.5,)),))
    report = validate_dm(sigma, t.fibers, t.p)
    assert not report["density_formula"].passed
    assert report["normalization"].passed


@pytest.mark.parametrize("name", ["ex_first", "ex_simple", "ramp", "sawtooth", "constant(0.25)"])
def test_doubled_fiber_breaks_density_formula(name):
    t = reference_triple(name)
    cell = next(i for i, c in enumerate(t.fibers.cells) if not c.is_point and c.nu_hat.finite_mass() > 0)
    nu = t.fibers.cells[cell].nu_hat
    doubled = replace(nu, atoms=tuple(replace(a, weight=2 * a.weight) for a in nu.atoms),
                      density=tuple(dp.scaled(2.0) for dp in nu.density))
    report = validate_dm(t.sigma, _mutate_cell(t, cell, nu_hat=doubled), t.p)
    assert not report["density_formula"].passed
    assert validate_dm(t.sigma, t.fibers, t.p)["density_formula"].passed


def test_negative_weight_is_caught():
    t = reference_triple("ex_first")
    point = next(i for i, c in enumerate(t.fibers.cells) if c.is_point)
    fibers = _mutate_cell(t, point, nu_hat=boundary_law(1.5, -0.5))
    report = validate_dm(t.sigma, fibers, t.p)
    assert not report["positivity"].passed


def test_finite_mass_at_sigma_atom_is_caught():
    t = reference_triple("ramp")
    point = next(i for i, c in enumerate(t.fibers.cells) if c.is_point)
    fibers = _mutate_cell(t, point, nu_hat=dirac(0.0))
    report = validate_dm(t.sigma, fibers, t.p)
    assert not report["absolute_continuity"].passed


def test_missing_mu_hat_is_caught():
    t = reference_triple("ex_first")
    point = next(i for i, c in enumerate(t.fibers.cells) if c.is_point)
    broken = replace(t, fibers=_mutate_cell(t, point, mu_boundary=()))
    assert not validate_triple(broken)["mu_hat"].passed
    with pytest.raises(IncompleteTripleError):
        integrate_triple(broken, weight_function("one"), ring_function("one"), ring_function("one"))


def test_fiber_family_must_tile_domain():
    with pytest.raises(ValueError):
        FiberFamily((0.0, 1.0), (FiberCell(0.0, 0.5, dirac(0.0)),))
    with pytest.raises(ValueError):
        FiberFamily((0.0, 1.0), (FiberCell(0.0, 1.0, dirac(0.0)), FiberCell(2.0, 2.0, boundary_law(1.0))))


def test_sawtooth_young_measure():
    nu_hat = reference_triple("sawtooth").fibers.cells[0].nu_hat
    nu = young_from_dm(nu_hat, 2.0)
    assert sorted((a.location, a.weight) for a in nu.atoms) == [(-1.0, 0.5), (1.0, 0.5)]


@given(st.lists(st.tuples(st.floats(min_value=-50, max_value=50), st.floats(min_value=0.01, max_value=1.0)),
                min_size=1, max_size=6),
       st.sampled_from([1.0, 2.0, 3.0]))
@hsettings(max_examples=100, deadline=None)
def test_young_pairing_moment_defect(atoms, p):
    # ∫ φ dν = d_σ ∫ φ/(1+|s|^p) dν̂ with d_σ = 1/∫ dν̂/(1+|s|^p)
    total = sum(w for _s, w in atoms)
    nu_hat = CompactifiedProbability(atoms=tuple(Atom(s, w / total) for s, w in atoms))
    nu = young_from_dm(nu_hat, p)
    z = sum(a.weight / (1.0 + abs(a.location) ** p) for a in nu_hat.atoms)
    lhs = sum(a.weight * np.cos(a.location) for a in nu.atoms)
    rhs = sum(a.weight * np.cos(a.location) / (1.0 + abs(a.location) ** p) for a in nu_hat.atoms) / z
    assert abs(lhs - rhs) < 1e-10
    assert sum(a.weight for a in nu.atoms) == pytest.approx(1.0, abs=1e-12)


def test_young_from_boundary_only_fiber():
    with pytest.raises(DegenerateFiberError):
        young_from_dm(boundary_law(1.0), 1.0)
    with pytest.raises(ValueError):
        young_from_dm(uniform(0.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        young_from_dm(dirac(0.0, slope=1.0), 1.0)


@pytest.mark.parametrize("name", ["ex_first", "ex_simple", "ramp", "sawtooth", "constant(0.25)"])
def test_barycenter_matches_limit_gradient(name):
    assert barycenter_check(reference_triple(name)) < 1e-12


def test_ex_first_battery_values():
    t = reference_triple("ex_first")
    one = weight_function("one")
    # L¹(0,2) + 3δ₁
    assert integrate_triple(t, one, ring_function("one"), ring_function("one")) == pytest.approx(5.0)
    # u on (1,2) plus the μ̂ means: 3(⅓·½ + ⅔·0)
    assert integrate_triple(t, one, ring_function("clamp"), ring_function("one")) == pytest.approx(-0.5)
    # split of ν̂ between ±∞
    assert integrate_triple(t, one, ring_function("one"), ring_function("signed_frac")) == pytest.approx(-1.0)


@pytest.mark.parametrize("alpha", [0, 1, 2, 3])
def test_ex_simple_mu_moments(alpha):
    t = reference_triple("ex_simple")
    point = t.fibers.point_cell(1.0, 1e-9)
    mu = point.mu_at(1.0)
    moment = mu.expect(ring_function(f"poly_clamped({alpha})"))
    assert float(moment) == pytest.approx(1.0 / (alpha + 1), abs=1e-12)


def test_part_split_adds_up():
    t = reference_triple("ex_first")
    args = (weight_function("x"), ring_function("clamp"), ring_function("abs_frac"))
    whole = integrate_triple(t, *args)
    finite = integrate_triple(t, *args, part="finite")
    boundary = integrate_triple(t, *args, part="boundary")
    assert whole == pytest.approx(finite + boundary)
    with pytest.raises(ValueError):
        integrate_triple(t, *args, part="middle")
    with pytest.raises(ValueError):
        integrate_triple(t, *args, p=2.0)


def test_mixture_normalizes():
    mix = mixture([(1.0, dirac(0.0)), (3.0, uniform(0.0, 1.0))])
    assert mix.mass() == pytest.approx(1.0)
    assert mix.atoms[0].weight == pytest.approx(0.25)


def test_uniform_needs_interval():
    with pytest.raises(ValueError):
        uniform(1.0, 1.0)


def test_finite_mu_is_trace():
    assert finite_mu_is_trace(reference_triple("ex_first"))
    assert finite_mu_is_trace(reference_triple("constant(0.25)"))


@pytest.mark.parametrize("name", CATALOG)
def test_serialized_triple_integrates_identically(name, battery):
    t = reference_triple(name)
    text = json.dumps(triple_to_dict(t))
    back = triple_from_dict(json.loads(text))
    assert json.loads(json.dumps(triple_to_dict(back))) == json.loads(text)
    for m in battery:
        expected = integrate_triple(t, m.g, m.f0, m.psi0)
        assert integrate_triple(back, m.g, m.f0, m.psi0) == expected


def test_triple_from_dict_rejects_malformed():
    with pytest.raises(ValueError):
        triple_from_dict({"name": "x"})
