import math

import numpy as np
import pytest
import sympy

from connection_engine import ConnectionData, ConnectionEngine, SingularHessianError
from expr_engine import Evaluator, Point, chart_symbols
from scenario_manager import TensorField, load_scenario, object_array
from tensor_engine import lie_bracket


def values(array, point):
    return Evaluator(np.asarray(array, dtype=object), point.n)(point)


def sample_points(samples, name):
    return list(samples(name, count=4))


@pytest.fixture(scope="module")
def sphere(scenario):
    return ConnectionEngine(scenario("E4"))


@pytest.fixture(scope="module")
def at_sphere():
    return Point((0.7, 0.9, 0.5), (0.4, -0.6, 0.3))


def test_christoffel_symbols_of_the_sphere(sphere, at_sphere):
    G = values(sphere.christoffel, at_sphere)
    s, c = math.sin(0.7), math.cos(0.7)
    assert G[0, 1, 1] == pytest.approx(-s * c)
    assert G[1, 0, 1] == pytest.approx(c / s)
    assert G[1, 1, 0] == pytest.approx(c / s)
    assert np.count_nonzero(np.abs(G) > 1e-12) == 3


def test_forces_are_minus_christoffel_contracted(sphere, at_sphere):
    f = values(sphere.forces, at_sphere)
    s, c = math.sin(0.7), math.cos(0.7)
    u1, u2, _ = at_sphere.u
    np.testing.assert_allclose(f, [s * c * u2 ** 2, -2.0 * c / s * u1 * u2, 0.0], atol=1e-12)


def test_connection_is_christoffel_along_u(sphere, at_sphere):
    G = values(sphere.christoffel, at_sphere)
    expected = np.einsum("ijk,k->ij", G, np.array(at_sphere.u))
    np.testing.assert_allclose(values(sphere.conn, at_sphere), expected, atol=1e-12)
    np.testing.assert_allclose(values(sphere.berwald, at_sphere), G, atol=1e-12)


def test_riemann_of_the_sphere(sphere, at_sphere):
    Rm = values(sphere.riemann, at_sphere)
    assert Rm[0, 1, 0, 1] == pytest.approx(math.sin(0.7) ** 2)
    assert Rm[0, 1, 1, 0] == pytest.approx(-math.sin(0.7) ** 2)
    np.testing.assert_allclose(Rm[2], 0.0, atol=1e-12)


def test_jacobi_endomorphism_from_riemann(sphere, samples):
    for p in sample_points(samples, "E4"):
        np.testing.assert_allclose(values(sphere.phi, p), values(sphere.phi_from_riemann(), p), atol=1e-10)
        np.testing.assert_allclose(
            values(sphere.curvature, p), values(sphere.curvature_from_riemann(), p), atol=1e-10
        )


def test_sphere_has_curvature(sphere, probe):
    assert np.max(np.abs(values(sphere.phi, probe(3)))) > 0.01


@pytest.mark.parametrize("name", ["E1", "E2", "E3", "E4", "E6"])
def test_energy_is_conserved(scenario, samples, name):
    c = ConnectionEngine(scenario(name))
    gamma_E = object_array([c.gamma(c.energy)])
    for p in sample_points(samples, name):
        assert abs(values(gamma_E, p)[0]) <= 1e-10


def test_energy_of_general_lagrangian(scenario):
    c = ConnectionEngine(scenario("E6"))
    _, u = chart_symbols(2)
    assert sympy.expand(c.energy - ((u[0] ** 2 + u[1] ** 2) / 2 + 3 * u[0] ** 4 / 4)) == 0
    assert all(f == 0 for f in c.forces)


def test_flat_plane_has_no_curvature(scenario):
    c = ConnectionEngine(scenario("E1"))
    data = c.data()
    assert isinstance(data, ConnectionData)
    assert all(e == 0 for e in data.conn.reshape(-1))
    assert all(e == 0 for e in data.curvature.reshape(-1))
    assert all(e == 0 for e in data.phi.reshape(-1))


def test_liouville_field_commutes_to_the_spray(sphere, at_sphere):
    bracket = lie_bracket(sphere.liouville, sphere.spray, 3)
    np.testing.assert_allclose(values(bracket, at_sphere), values(sphere.spray, at_sphere), atol=1e-12)
    np.testing.assert_allclose(values(sphere.homogeneity_defect, at_sphere), 0.0, atol=1e-12)


def test_total_time_covariant_derivatives(sphere, at_sphere):
    Z = sphere.tau("vector", [sympy.Integer(1), sympy.Integer(2), sympy.Integer(-1)])
    T = sphere.total_time
    np.testing.assert_allclose(values(sphere.dv_cov(Z, T).components, at_sphere), [1.0, 2.0, -1.0])
    np.testing.assert_allclose(values(sphere.dh_cov(Z, T).components, at_sphere), 0.0, atol=1e-12)
    np.testing.assert_allclose(values(sphere.nabla(T).components, at_sphere), 0.0, atol=1e-12)


def test_metric_is_parallel(sphere, at_sphere):
    np.testing.assert_allclose(values(sphere.nabla(sphere.metric).components, at_sphere), 0.0, atol=1e-12)
    for k in range(3):
        dh = sphere.dh_direction(sphere.metric, k).components
        np.testing.assert_allclose(values(dh, at_sphere), 0.0, atol=1e-12)


def test_bianchi_identity(sphere, at_sphere):
    np.testing.assert_allclose(values(sphere.bianchi_cyclic(), at_sphere), 0.0, atol=1e-10)


def test_curvature_derivative_relation(sphere, at_sphere):
    np.testing.assert_allclose(
        values(sphere.dv_phi(), at_sphere), 3.0 * values(sphere.curvature, at_sphere), atol=1e-10
    )
    np.testing.assert_allclose(
        values(sphere.phi, at_sphere), values(sphere.phi_from_curvature(), at_sphere), atol=1e-10
    )


def test_degenerate_lagrangian():
    s = load_scenario({
        "name": "degenerate", "dim": 2, "mode": "lagrangian",
        "lagrangian": "u1 + u2^2", "J": [["1", "0"], ["0", "1"]],
    })
    with pytest.raises(SingularHessianError):
        ConnectionEngine(s).forces


def test_covariant_derivatives_reject_fields_on_TQ(sphere):
    field = TensorField("TQ", "vector", object_array([0] * 6), 3)
    with pytest.raises(ValueError):
        sphere.nabla(field)
