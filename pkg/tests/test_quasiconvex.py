# tests/test_quasiconvex.py
import numpy as np
import pytest

from quasiconvex import (EvaluationError, convex_envelope_1d, envelope_oracle, full_growth_function, pqscb_test,
                         qc_envelope_upper, qc_witness_search)
from utils import CatalogError

double_well = full_growth_function("double_well")
square = full_growth_function("square")


def test_double_well_envelope_at_origin():
    value = qc_envelope_upper(double_well, 0.0, N=64, M=16)
    assert 0.0 <= value <= 0.02


def test_envelope_nonincreasing_in_grid():
    values = [qc_envelope_upper(double_well, 0.5, N=n, M=4) for n in (8, 16, 32, 64)]
    for coarse, fine in zip(values, values[1:]):
        assert fine <= coarse + 1e-12


def test_envelope_same_seed_same_value():
    assert qc_envelope_upper(double_well, 0.3, N=16, M=4, seed=7) == qc_envelope_upper(double_well, 0.3, N=16, M=4, seed=7)


@pytest.mark.parametrize("s0", np.linspace(-2.0, 2.0, 21))
def test_envelope_against_convex_oracle(s0):
    value = qc_envelope_upper(double_well, s0, N=32, M=4)
    oracle = float(envelope_oracle(double_well, s0))
    assert value >= oracle - 1e-9
    assert value <= oracle + 0.05


def test_convex_function_is_its_own_envelope():
    assert qc_envelope_upper(square, 0.7, N=16, M=4) == pytest.approx(0.49, abs=1e-12)


def test_matrix_laminate_envelope():
    well = full_growth_function("frobenius_well")
    assert qc_envelope_upper(well, np.zeros((2, 2)), N=8, M=2) <= 1e-9


def test_envelope_argument_checks():
    with pytest.raises(ValueError):
        qc_envelope_upper(square, 0.0, N=2)
    with pytest.raises(ValueError):
        qc_envelope_upper(square, np.zeros(3), N=8)


def test_non_finite_psi():
    blowup = lambda s: np.where(np.abs(s) > 3.0, np.inf, 0.0)
    with pytest.raises(EvaluationError):
        qc_envelope_upper(blowup, 0.0, N=8, M=2)


def test_convex_envelope_1d():
    grid = np.linspace(-2.0, 2.0, 401)
    env = convex_envelope_1d(double_well(grid), grid)
    inside = np.abs(grid) <= 1.0
    assert np.max(np.abs(env[inside])) < 1e-9
    assert np.allclose(env[~inside], double_well(grid[~inside]), atol=1e-9)
    assert np.allclose(convex_envelope_1d(np.abs(grid), grid), np.abs(grid), atol=1e-12)


def test_witness_for_double_well():
    w = qc_witness_search(double_well, 0.0)
    assert w is not None
    assert w.baseline == pytest.approx(1.0)
    assert w.value == pytest.approx(0.0, abs=1e-12)


def test_no_witness_for_convex():
    assert qc_witness_search(square, 0.0) is None
    assert qc_witness_search(square, 1.5) is None


def test_matrix_witness_has_direction():
    w = qc_witness_search(full_growth_function("frobenius_well"), np.zeros((2, 2)))
    assert w is not None
    assert w.direction.shape == (2, 2)


def test_pqscb_square_holds():
    rows = pqscb_test(square, 2.0, [0.5, 0.1, 0.01])
    assert [r.violated for r in rows] == [False, False, False]
    assert all(r.constant == 0.0 for r in rows)


def test_pqscb_negative_power_blows_up():
    rows = pqscb_test(full_growth_function("neg_power(2)"), 2.0, [0.5])
    assert rows[0].violated
    assert rows[0].exponent == pytest.approx(2.0, abs=1e-6)


def test_pqscb_lower_order_negative_part():
    # -|s|^1.5 is absorbed by ε|s|^2
    rows = pqscb_test(full_growth_function("neg_power(1.5)"), 2.0, [0.5])
    assert not rows[0].violated


def test_pqscb_needs_superlinear_p():
    with pytest.raises(ValueError):
        pqscb_test(square, 1.0, [0.5])


def test_unknown_psi():
    with pytest.raises(CatalogError):
        full_growth_function("quartic")


def test_envelope_outside_the_wells():
    value = qc_envelope_upper(double_well, 2.0, N=32, M=4)
    assert value == pytest.approx(9.0, abs=0.05)


def test_pqscb_linear_term_is_dominated():
    rows = pqscb_test(lambda s: np.asarray(s, dtype=float), 2.0, [0.5, 0.1])
    assert not any(r.violated for r in rows)
