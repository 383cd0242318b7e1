import numpy as np
import pytest
import sympy

from expr_engine import Evaluator, Point, chart_symbols, scaled_residual
from sck_engine import SckEngine


def residual(pair, point):
    lhs, rhs = (np.asarray(side, dtype=object) for side in pair)
    return scaled_residual(Evaluator(lhs, point.n)(point), Evaluator(rhs, point.n)(point))


@pytest.fixture(scope="module")
def benenti(lifts):
    return SckEngine(lifts("E3"))


@pytest.fixture(scope="module")
def sphere_line(lifts):
    return SckEngine(lifts("E4"))


def test_benenti_tensor_is_special_conformal_killing(benenti, samples):
    for p in samples("E3"):
        assert residual(benenti.sck_residual(), p) <= 1e-9
        assert residual(benenti.sck_mixed(), p) <= 1e-9
        assert residual(benenti.sck_intrinsic(), p) <= 1e-9


def test_wrong_conformal_factor_is_detected(lifts, probe):
    q, _ = chart_symbols(3)
    wrong = SckEngine(lifts("E4"), f=q[0])
    assert residual(wrong.sck_residual(), probe(3)) > 0.1


def test_parallel_tensor_is_sck_with_constant_factor(sphere_line, samples):
    assert sympy.diff(sphere_line.f, chart_symbols(3)[0][0]) == 0
    for p in samples("E4", count=3):
        assert residual(sphere_line.sck_residual(), p) <= 1e-9


def test_conformal_field_and_recovered_factor(benenti):
    p = Point((1.0, 2.0), (0.0, 0.0))
    xf = Evaluator(benenti.xf.components, 2)(p)
    np.testing.assert_allclose(xf, [-2.0, -4.0])
    q, _ = chart_symbols(2)
    assert sympy.expand(benenti.recover_f - (q[0] ** 2 + q[1] ** 2 + 2)) == 0


def test_cofactor_and_determinant(benenti):
    p = Point((1.0, 2.0), (0.0, 0.0))
    np.testing.assert_allclose(Evaluator(benenti.cofactor, 2)(p), [[5.0, -2.0], [-2.0, 2.0]])
    q, _ = chart_symbols(2)
    assert sympy.expand(benenti.det_J - (1 + q[0] ** 2 + q[1] ** 2)) == 0


@pytest.mark.parametrize("key", ["scKU", "PhiJ", "dhJ", "Ubis", "PhiJ2"])
def test_identities_on_TQ(benenti, samples, key):
    pair = benenti.lifted_identities()[key]
    for p in samples("E3"):
        assert residual(pair, p) <= 1e-8


@pytest.mark.parametrize("key", ["killing2", "killing1", "dJdetJ", "aux", "dhscK", "dJ-detJ"])
def test_cofactor_killing_chain(benenti, samples, key):
    pair = benenti.cofactor_killing()[key]
    for p in samples("E3"):
        assert residual(pair, p) <= 1e-8


def test_trace_laws(benenti, samples):
    for p in samples("E3"):
        assert residual(benenti.trace_law(), p) <= 1e-12
        assert residual(benenti.nabla_trace_law(), p) <= 1e-12


def test_R_minus_complete_lift(benenti, lifts, samples):
    L = lifts("E3")
    offset = Evaluator(benenti.sck_R_offset(), 2)
    for p in samples("E3"):
        np.testing.assert_allclose(L.R_at(p) - L.Jc.at(p), offset(p), atol=1e-12)


def test_covariant_derivatives_of_U(benenti, samples):
    for p in samples("E3", count=3):
        assert residual(benenti.dv_U(), p) <= 1e-8
        assert residual(benenti.dh_U(), p) <= 1e-7


@pytest.mark.parametrize("key", ["PhiJ-commute", "ricci-commute", "J-riemann", "aux2", "aux3", "aux5", "aux6"])
def test_parallel_J_identities_on_curved_base(sphere_line, samples, key):
    pair = sphere_line.parallel_identities()[key]
    for p in samples("E4", count=3):
        assert residual(pair, p) <= 1e-8


def test_needs_a_declared_metric(lifts):
    with pytest.raises(ValueError):
        SckEngine(lifts("E6"))
