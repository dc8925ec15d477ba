import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_for
from livsic import (AtomicMeasureModel, DirectCharModel, FreeHalfLineModel, PaleyWienerModel,
                    SturmLiouvilleModel, ToeplitzSlitModel, g_inverse_eval, kernel_eval, sl_solve,
                    validate_model)
from livsic.errors import DomainViolation
from livsic.halfplane import blaschke_b
from oracles import CorruptedModel, helson_g, pw_quadrature_kernel, sl_free_kernel

upper = st.builds(complex, st.floats(-5, 5), st.floats(0.05, 5))
off_axis = st.builds(complex, st.floats(-5, 5), st.floats(0.05, 5) | st.floats(-5, -0.05))


def test_paley_wiener_diagonal_at_i():
    k = kernel_eval(PaleyWienerModel(math.pi), 1j, 1j)
    assert k[0, 0].real == pytest.approx(math.sinh(2 * math.pi), rel=1e-12)
    assert k[0, 0].real == pytest.approx(267.74489404, rel=1e-9)


def test_paley_wiener_removable_point():
    m = PaleyWienerModel(2.0)
    lam = 0.3 + 0.5j
    near = m.eval(lam, lam.conjugate() + 1e-7)[0, 0]
    assert near == pytest.approx(4.0, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(off_axis, off_axis)
def test_paley_wiener_matches_quadrature(lam, z):
    got = PaleyWienerModel(math.pi).eval(lam, z)[0, 0]
    ref = pw_quadrature_kernel(lam, z)
    assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(off_axis, off_axis)
def test_free_half_line_hermitian_symmetry(lam, z):
    m = FreeHalfLineModel()
    assert m.eval(lam, z)[0, 0] == pytest.approx(np.conj(m.eval(z, lam)[0, 0]), rel=1e-12, abs=1e-14)


def test_free_half_line_anchor():
    assert FreeHalfLineModel().eval(1j, 1j)[0, 0].real == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_sturm_liouville_solutions_match_cos_sin(sl_model):
    for z in (2 + 1j, -3 + 0.5j, 10j):
        y = sl_model.solutions(z)
        k = np.sqrt(z)
        t = sl_model.nodes - sl_model.x0
        np.testing.assert_allclose(y[0], np.cos(k * t), atol=1e-10)
        np.testing.assert_allclose(y[1], np.sin(k * t) / k, atol=1e-10)


def test_sturm_liouville_kernel_matches_closed_form(sl_model):
    for lam, z in [(1j, 2 + 1j), (-1 + 0.1j, 3 - 2j), (0.5 + 10j, 0.5 + 10j)]:
        ref = sl_free_kernel(lam, z)
        assert np.max(np.abs(sl_model.eval(lam, z) - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_sl_solve_boundary_values(sl_model):
    u, v = sl_solve(sl_model, 1.0 + 1j, check=False)
    mid = sl_model.nodes.size // 2
    assert u[mid] == pytest.approx(1.0)
    assert v[mid] == pytest.approx(0.0, abs=1e-15)


def test_sturm_liouville_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        SturmLiouvilleModel(p=lambda x: x - 1.0)
    with pytest.raises(ValueError):
        SturmLiouvilleModel(a=1.0, b=0.0)


def test_toeplitz_inverse_anchors():
    m = ToeplitzSlitModel(0.5)
    assert abs(g_inverse_eval(m, 1j)) < 1e-14
    assert g_inverse_eval(m, -1j) == pytest.approx(0.5, abs=1e-14)
    assert g_inverse_eval(m, 2j) == pytest.approx((2 - math.sqrt(7)) / 3, abs=1e-12)


def test_toeplitz_mirrored_convention():
    m = ToeplitzSlitModel(0.5, mirrored=True)
    assert g_inverse_eval(m, 2j) == pytest.approx(math.sqrt(7) - 2, abs=1e-12)
    assert -helson_g(g_inverse_eval(m, 2j)) == pytest.approx(2j, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(off_axis)
def test_toeplitz_inverse_round_trip(z):
    m = ToeplitzSlitModel(0.5)
    w = g_inverse_eval(m, z)
    assert abs(w) < 1
    assert helson_g(w) == pytest.approx(z, rel=1e-8, abs=1e-8)


def test_toeplitz_rejects_slit_points():
    m = ToeplitzSlitModel(0.5)
    with pytest.raises(DomainViolation):
        m.eval(1j, 2.0)


def test_atomic_model_validation():
    with pytest.raises(ValueError):
        AtomicMeasureModel([(0.0, [[-1.0]])])
    with pytest.raises(ValueError):
        AtomicMeasureModel([(0.0, [[1.0]]), (0.0, [[1.0]])])
    m = AtomicMeasureModel([(1.0, [[2.0]]), (-1.0, [[1.0]])])
    assert list(m.x) == [-1.0, 1.0]


def test_direct_model_requires_vanishing_at_i():
    with pytest.raises(ValueError):
        DirectCharModel(lambda z: 0.5)
    m = DirectCharModel(lambda z: 0.5 * blaschke_b(z))
    assert m.eval(1j, 1j)[0, 0].real > 0


@pytest.mark.parametrize("name", ["paley_wiener", "free_half_line", "toeplitz_slit", "atomic"])
def test_validate_model_passes(models, name):
    m = models[name]
    report = validate_model(m, grid_for(m))
    assert report.passed, [c for c in report.checks if not c.passed]


def test_validate_model_sturm_liouville(sl_model):
    assert validate_model(sl_model, grid_for(sl_model)).passed


def test_validate_model_square_variant():
    m = ToeplitzSlitModel(0.5, square_variant=True)
    assert validate_model(m, grid_for(m)).passed


def test_validate_model_catches_corruption():
    base = PaleyWienerModel(math.pi)
    report = validate_model(CorruptedModel(base), grid_for(base))
    assert not report.passed
    assert not report.check("hermitian_symmetry").passed
