import numpy as np
import pytest
import sympy

import linalg_engine
from expr_engine import Evaluator, Point, chart_symbols
from lift_engine import (
    adapted_frame,
    complete_lift_vec,
    decompose,
    from_adapted,
    horizontal_lift_11,
    horizontal_lift_vec,
    kahler_lift,
    solve_R,
    to_adapted,
    vertical_endomorphism,
    vertical_lift_11,
    vertical_lift_vec,
)
from scenario_manager import TensorField, object_array

ALL = ["E1", "E2", "E3", "E4", "E5", "E6", "E7"]


def values(array, point):
    return Evaluator(np.asarray(array, dtype=object), point.n)(point)


def test_canonical_symplectic_form(lifts):
    omega = lifts("E1").omega_L.at(Point((0.5, 1.0), (0.3, -0.2)))
    expected = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    np.testing.assert_allclose(omega, expected)


def test_R_of_constant_diagonal_J(lifts):
    R = lifts("E2").R_at(Point((0.5, 1.0), (0.3, -0.2)))
    np.testing.assert_allclose(R, np.diag([2.0, 3.0, 2.0, 3.0]), atol=1e-14)


def test_U_of_the_benenti_tensor(lifts):
    U = lifts("E3").U.at(Point((1.0, 0.0), (0.0, 1.0)))
    np.testing.assert_allclose(U, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14)


def test_U_coordinate_and_intrinsic_forms_agree(lifts, samples):
    L = lifts("E3")
    for p in samples("E3"):
        np.testing.assert_allclose(L.U_general.at(p), L.U_coord.at(p), atol=1e-12)


@pytest.mark.parametrize("name", ALL)
def test_closed_form_matches_solved_R(lifts, samples, name):
    L = lifts(name)
    for p in samples(name, count=3):
        np.testing.assert_allclose(L.closed_form_R.at(p), L.R_at(p), atol=1e-10)


@pytest.mark.parametrize("name", ["E1", "E3", "E4", "E6"])
def test_legendre_pullback_matches_solved_R(lifts, samples, name):
    L = lifts(name)
    for p in samples(name, count=10):
        R = L.R_at(p)
        assert linalg_engine.max_norm(L.legendre_R_at(p) - R) <= 1e-8 * (1.0 + linalg_engine.max_norm(R))


@pytest.mark.parametrize("name", ["E1", "E2"])
def test_R_is_the_complete_lift_for_constant_symmetric_J(lifts, probe, name):
    L = lifts(name)
    np.testing.assert_allclose(L.R_at(probe(2)), L.Jc.at(probe(2)), atol=1e-12)


def test_R_differs_from_the_complete_lift_on_benenti(lifts, probe):
    L = lifts("E3")
    assert linalg_engine.max_norm(L.R_at(probe(2)) - L.Jc.at(probe(2))) > 0.1


def test_R_is_self_adjoint_for_omega(lifts, samples):
    L = lifts("E4")
    for p in samples("E4", count=3):
        R, omega = L.R_at(p), L.omega_L.at(p)
        np.testing.assert_allclose(R.T @ omega, omega @ R, atol=1e-10)


def test_kahler_lift_is_omega_L(lifts, samples):
    L = lifts("E4")
    for p in samples("E4", count=3):
        g = L.connection.metric.at(p)
        np.testing.assert_allclose(L.omega_L.at(p), kahler_lift(g, L.frame_at(p)), atol=1e-12)


def test_R_in_the_adapted_frame(lifts, samples):
    L = lifts("E4")
    n = 3
    for p in samples("E4", count=3):
        blocks = to_adapted(L.R_at(p), L.frame_at(p))
        np.testing.assert_allclose(blocks[:n, :n], L.J.at(p), atol=1e-12)
        np.testing.assert_allclose(blocks[:n, n:], 0.0, atol=1e-12)
        np.testing.assert_allclose(blocks[n:, :n], L.U.at(p), atol=1e-12)
        np.testing.assert_allclose(blocks[n:, n:], L.J_bar.at(p), atol=1e-12)


def test_complete_lift_as_horizontal_plus_vertical(lifts, samples):
    L = lifts("E3")
    for p in samples("E3", count=3):
        frame = L.frame_at(p)
        lifted = horizontal_lift_11(L.J.at(p), frame) + vertical_lift_11(L.nabla_J.at(p), frame)
        np.testing.assert_allclose(L.Jc.at(p), lifted, atol=1e-12)


def test_U_is_skew_for_g(lifts, samples):
    L = lifts("E6")
    for p in samples("E6", count=3):
        g, U = L.connection.metric.at(p), L.U.at(p)
        np.testing.assert_allclose(g @ U, -(g @ U).T, atol=1e-12)


def test_transpose_J(lifts, probe):
    np.testing.assert_allclose(lifts("E7").J_bar.at(probe(2)), [[0.0, 0.0], [1.0, 0.0]])
    L = lifts("E3")
    np.testing.assert_allclose(L.J_bar.at(probe(2)), L.J.at(probe(2)), atol=1e-14)


def test_adapted_frame_round_trip():
    conn = np.array([[0.3, -1.2], [0.5, 2.0]])
    frame = adapted_frame(conn)
    A = np.arange(16.0).reshape(4, 4)
    np.testing.assert_allclose(from_adapted(to_adapted(A, frame), frame), A, atol=1e-12)
    X, Y = np.array([1.0, 2.0]), np.array([-0.5, 0.25])
    xi = frame[:, :2] @ X + frame[:, 2:] @ Y
    split = decompose(xi, frame)
    np.testing.assert_allclose(split[0], X)
    np.testing.assert_allclose(split[1], Y)


def test_vertical_lifts_of_tensors_are_nilpotent():
    frame = adapted_frame(np.array([[0.3, -1.2], [0.5, 2.0]]))
    V = vertical_lift_11(np.array([[1.0, 2.0], [3.0, 4.0]]), frame)
    np.testing.assert_allclose(V @ V, 0.0, atol=1e-12)
    np.testing.assert_allclose(horizontal_lift_11(np.eye(2), frame), np.eye(4), atol=1e-12)


def test_vertical_endomorphism_on_lifts():
    q, u = chart_symbols(2)
    S = vertical_endomorphism(2).components
    X = TensorField("Q", "vector", object_array([q[1], q[0] ** 2]), 2)
    Xc = complete_lift_vec(X).components
    XV = vertical_lift_vec(X).components
    SXc = [sympy.Add(*[S[a, b] * Xc[b] for b in range(4)]) for a in range(4)]
    assert all(sympy.expand(x - y) == 0 for x, y in zip(SXc, XV))
    assert sympy.expand(Xc[3] - 2 * q[0] * u[0]) == 0


def test_horizontal_lift_of_a_vector(lifts, probe):
    L = lifts("E4")
    X = TensorField("Q", "vector", object_array([1, 0, 0]), 3)
    XH = horizontal_lift_vec(X, L.connection.conn).components
    p = probe(3)
    np.testing.assert_allclose(values(XH, p), L.frame_at(p)[:, 0], atol=1e-12)


def test_omega_1_on_vertical_horizontal_pairs(lifts, samples):
    L = lifts("E3")
    for p in samples("E3", count=3):
        frame = L.frame_at(p)
        H, V = frame[:, :2], frame[:, 2:]
        g = L.connection.metric.at(p)
        np.testing.assert_allclose(V.T @ L.omega_1.at(p) @ H, g @ L.J.at(p), atol=1e-12)


def test_degenerate_omega_is_reported():
    with pytest.raises(linalg_engine.SingularMatrixError, match="omega_L is degenerate"):
        solve_R(np.zeros((4, 4)), np.eye(4))
