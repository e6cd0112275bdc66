# tests/test_triples.py
import pytest

from compactify import ring_function
from families import builtin
from measures import finite_mu_is_trace, moment_match, triple_to_dict, validate_triple
from triples import BoundednessError, TRIPLE_NAMES, generate_triple, reference_triple, resolve_triple
from utils import CatalogError


@pytest.mark.parametrize("name", ["ex_first", "down_up_down", "fixed_u", "ex_simple", "ramp", "sawtooth",
                                  "constant(0.25)"])
def test_generated_triple_matches_reference(name, battery):
    generated = generate_triple(builtin(name))
    worst, ok = moment_match(generated, reference_triple(name), battery)
    assert ok, f"{name}: moments differ by {worst}"
    assert "generated" in generated.notes


def test_generated_triples_validate():
    for name in ("ex_first", "ramp", "sawtooth", "hat_scaling(2)"):
        report = validate_triple(generate_triple(builtin(name)))
        assert report.passed, (name, report.failed())


def test_generated_ex_first_structure():
    t = generate_triple(builtin("ex_first"))
    assert [(a.location, a.weight) for a in t.sigma.atoms] == [(1.0, 3.0)]
    point = t.fibers.point_cell(1.0, 1e-9)
    assert point.nu_hat.boundary_weight(1.0) == pytest.approx(1 / 3)
    assert point.nu_hat.boundary_weight(-1.0) == pytest.approx(2 / 3)
    assert finite_mu_is_trace(t)


def test_sawtooth_generated_density():
    t = generate_triple(builtin("sawtooth"))
    assert t.sigma.total_mass() == pytest.approx(2.0)
    assert t.p == 2.0
    assert sorted(a.location for a in t.fibers.cells[0].nu_hat.atoms) == [-1.0, 1.0]


def test_hat_scaling_concentrates_at_origin():
    t = reference_triple("hat_scaling(2)")
    assert t.has_concentration()
    atom = t.sigma.atoms[0]
    assert atom.location == 0.0
    assert atom.weight == pytest.approx(2.0)
    point = t.fibers.point_cell(0.0, 1e-9)
    assert point.nu_hat.boundary_weight(1.0) == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0, 1, 2, 3])
def test_ex_simple_generated_moments(alpha):
    point = generate_triple(builtin("ex_simple")).fibers.point_cell(1.0, 1e-9)
    moment = point.mu_at(1.0).expect(ring_function(f"poly_clamped({alpha})"))
    assert float(moment) == pytest.approx(1.0 / (alpha + 1), abs=1e-12)


def test_spike_needs_linear_growth():
    with pytest.raises(BoundednessError):
        generate_triple(builtin("ex_first"), p=2.0)


def test_unknown_triple():
    with pytest.raises(CatalogError):
        reference_triple("exfirst")
    with pytest.raises(CatalogError):
        reference_triple("sawtooth(3)")
    assert "ex_first" in TRIPLE_NAMES


def test_resolve_inline_record():
    record = triple_to_dict(reference_triple("ramp"))
    t = resolve_triple(record)
    assert t.name == "ramp"
    assert resolve_triple("ramp") is reference_triple("ramp")
