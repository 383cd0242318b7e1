"""
connection_engine.py

Euler-Lagrange second-order field and the calculus along the projection.
- Forces f^i from the Lagrangian via symbolic cofactor inversion of the Hessian.
- Nonlinear connection, Berwald and Christoffel coefficients.
- Curvature of the horizontal distribution, Jacobi endomorphism, Riemann tensor.
- Dynamical covariant derivative and the horizontal/vertical covariant derivatives.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional

import numpy as np
import sympy

from expr_engine import Expr, chart_symbols
from scenario_manager import Scenario, TensorField, hessian_metric, map_array, object_array, zeros
from tensor_engine import lie_bracket

logger = logging.getLogger(__name__)

HALF = sympy.Rational(1, 2)


class SingularHessianError(ArithmeticError):
    """The Lagrangian is not regular: det of d2L/du du vanishes identically."""


@dataclass(frozen=True, eq=False)
class ConnectionData:
    forces: np.ndarray
    conn: np.ndarray
    berwald: np.ndarray
    curvature: np.ndarray
    phi: np.ndarray
    christoffel: Optional[np.ndarray] = None
    riemann: Optional[np.ndarray] = None


# --- Symbolic building blocks ---

def _sum(terms) -> Expr:
    return sympy.Add(*terms)


def inverse_metric(g: np.ndarray):
    """Returns (g^-1 as object array, det g) through the adjugate."""
    n = g.shape[0]
    matrix = sympy.Matrix(n, n, lambda i, j: g[i, j])
    det = matrix.det()
    if det == 0 or sympy.expand(det) == 0:
        raise SingularHessianError("Hessian d2L/du du is identically singular")
    adjugate = matrix.adjugate()
    return object_array([[adjugate[i, j] / det for j in range(n)] for i in range(n)]), det


def euler_lagrange_forces(L: Expr, n: int) -> np.ndarray:
    """f^i solving g_ij f^j = dL/dq^i - (d2L/du^i dq^k) u^k."""
    q, u = chart_symbols(n)
    g = object_array([[sympy.diff(L, u[i], u[j]) for j in range(n)] for i in range(n)])
    g_inv, _ = inverse_metric(g)
    rhs = [
        sympy.diff(L, q[i]) - _sum(sympy.diff(L, u[i], q[k]) * u[k] for k in range(n))
        for i in range(n)
    ]
    return object_array([_sum(g_inv[i, j] * rhs[j] for j in range(n)) for i in range(n)])


def connection_coeffs(forces: np.ndarray, n: int) -> np.ndarray:
    """Gamma^i_j = -1/2 df^i/du^j, stored [i][j]."""
    _, u = chart_symbols(n)
    return object_array([[-HALF * sympy.diff(forces[i], u[j]) for j in range(n)] for i in range(n)])


def berwald(conn: np.ndarray, n: int) -> np.ndarray:
    """Gamma^i_jk = dGamma^i_j/du^k, stored [i][j][k]."""
    _, u = chart_symbols(n)
    out = zeros(n, n, n)
    for i, j, k in np.ndindex(n, n, n):
        out[i, j, k] = sympy.diff(conn[i, j], u[k])
    return out


def christoffel(g: np.ndarray, n: int) -> np.ndarray:
    """Levi-Civita symbols of a metric on Q, stored [i][j][k] (upper index first)."""
    q, _ = chart_symbols(n)
    g_inv, _ = inverse_metric(g)
    dg = [[[sympy.diff(g[a, b], q[c]) for c in range(n)] for b in range(n)] for a in range(n)]
    out = zeros(n, n, n)
    for i, j, k in np.ndindex(n, n, n):
        out[i, j, k] = HALF * _sum(
            g_inv[i, l] * (dg[l][k][j] + dg[l][j][k] - dg[j][k][l]) for l in range(n)
        )
    return out


def _contract(Z: np.ndarray, parts: List[np.ndarray], shape) -> np.ndarray:
    """Z^k parts[k], entry by entry."""
    out = np.empty(shape, dtype=object)
    for index in np.ndindex(shape):
        out[index] = _sum(Z[k] * parts[k][index] for k in range(len(parts)))
    return out


def horizontal_derivative(F: Expr, k: int, conn: np.ndarray, n: int) -> Expr:
    """H_k F = dF/dq^k - Gamma^m_k dF/du^m."""
    q, u = chart_symbols(n)
    return sympy.diff(F, q[k]) - _sum(conn[m, k] * sympy.diff(F, u[m]) for m in range(n))


def curvature(conn: np.ndarray, n: int) -> np.ndarray:
    """
    Curvature of the horizontal distribution, [H_i, H_j] = V(R(d_i, d_j)).
    Stored [k][i][j] = H_j(Gamma^k_i) - H_i(Gamma^k_j); antisymmetric in (i, j).
    """
    out = zeros(n, n, n)
    for k, i, j in np.ndindex(n, n, n):
        if i < j:
            value = horizontal_derivative(conn[k, i], j, conn, n) - horizontal_derivative(conn[k, j], i, conn, n)
            out[k, i, j] = value
            out[k, j, i] = -value
    return out


def spray_field(forces: np.ndarray, n: int) -> np.ndarray:
    """Components (u, f) of the second-order field on TQ."""
    _, u = chart_symbols(n)
    return object_array(list(u) + list(forces))


def horizontal_frame(conn: np.ndarray, n: int) -> np.ndarray:
    """Columns H_1..H_n as TQ vector components, stored [j][a]."""
    out = zeros(n, 2 * n)
    for j in range(n):
        out[j, j] = sympy.S.One
        for m in range(n):
            out[j, n + m] = -conn[m, j]
    return out


def jacobi_endomorphism(forces: np.ndarray, conn: np.ndarray, n: int):
    """
    Decomposes [Gamma, H_j] = H(nabla d_j) + V(Phi(d_j)) in the adapted frame.
    Returns (phi[i][j], nabla_frame[i][j]); the horizontal part reproduces Gamma^i_j.
    """
    gamma = spray_field(forces, n)
    frame = horizontal_frame(conn, n)
    phi = zeros(n, n)
    nabla_frame = zeros(n, n)
    for j in range(n):
        bracket = lie_bracket(gamma, frame[j], n)
        a = bracket[:n]
        b = bracket[n:]
        for i in range(n):
            nabla_frame[i, j] = a[i]
            phi[i, j] = b[i] + _sum(conn[i, k] * a[k] for k in range(n))
    return phi, nabla_frame


def riemann(chris: np.ndarray, n: int) -> np.ndarray:
    """Rm[i][l][j][k] = d_j G^i_kl - d_k G^i_jl + G^i_jp G^p_kl - G^i_kp G^p_jl."""
    q, _ = chart_symbols(n)
    out = zeros(n, n, n, n)
    for i, l, j, k in np.ndindex(n, n, n, n):
        if j == k:
            continue
        out[i, l, j, k] = (
            sympy.diff(chris[i, k, l], q[j])
            - sympy.diff(chris[i, j, l], q[k])
            + _sum(chris[i, j, p] * chris[p, k, l] - chris[i, k, p] * chris[p, j, l] for p in range(n))
        )
    return out


# --- Engine ---

class ConnectionEngine:
    """Symbolic connection data of one scenario, built lazily and cached."""

    def __init__(self, scenario: Scenario):
        self.logger = logging.getLogger(__name__)
        self.scenario = scenario
        self.n = scenario.n
        self.q, self.u = chart_symbols(self.n)

    @cached_property
    def metric(self) -> TensorField:
        return hessian_metric(self.scenario)

    @cached_property
    def _metric_inverse(self):
        return inverse_metric(self.metric.components)

    @property
    def metric_inverse(self) -> np.ndarray:
        return self._metric_inverse[0]

    @property
    def metric_det(self) -> Expr:
        return self._metric_inverse[1]

    @cached_property
    def forces(self) -> np.ndarray:
        self.logger.debug(f"[{self.scenario.name}] Inverting the Hessian for Euler-Lagrange forces")
        return euler_lagrange_forces(self.scenario.lagrangian, self.n)

    @cached_property
    def conn(self) -> np.ndarray:
        return connection_coeffs(self.forces, self.n)

    @cached_property
    def berwald(self) -> np.ndarray:
        return berwald(self.conn, self.n)

    @cached_property
    def christoffel(self) -> Optional[np.ndarray]:
        if not self.scenario.riemannian:
            return None
        return christoffel(self.scenario.metric, self.n)

    @cached_property
    def curvature(self) -> np.ndarray:
        self.logger.debug(f"[{self.scenario.name}] Building curvature of the horizontal distribution")
        return curvature(self.conn, self.n)

    @cached_property
    def _bracket_decomposition(self):
        return jacobi_endomorphism(self.forces, self.conn, self.n)

    @property
    def phi(self) -> np.ndarray:
        return self._bracket_decomposition[0]

    @property
    def nabla_frame(self) -> np.ndarray:
        return self._bracket_decomposition[1]

    @cached_property
    def riemann(self) -> Optional[np.ndarray]:
        if not self.scenario.riemannian:
            return None
        return riemann(self.christoffel, self.n)

    def data(self) -> ConnectionData:
        return ConnectionData(
            forces=self.forces,
            conn=self.conn,
            berwald=self.berwald,
            curvature=self.curvature,
            phi=self.phi,
            christoffel=self.christoffel,
            riemann=self.riemann,
        )

    # --- Scalar operators ---

    @cached_property
    def energy(self) -> Expr:
        L = self.scenario.lagrangian
        return _sum(self.u[i] * sympy.diff(L, self.u[i]) for i in range(self.n)) - L

    @cached_property
    def spray(self) -> np.ndarray:
        return spray_field(self.forces, self.n)

    @cached_property
    def liouville(self) -> np.ndarray:
        """Delta = u^i d/du^i on TQ."""
        return object_array([sympy.S.Zero] * self.n + list(self.u))

    def gamma(self, F: Expr) -> Expr:
        """Gamma(F) = u^i dF/dq^i + f^i dF/du^i."""
        return _sum(self.u[i] * sympy.diff(F, self.q[i]) + self.forces[i] * sympy.diff(F, self.u[i]) for i in range(self.n))

    def horizontal(self, F: Expr, k: int) -> Expr:
        return horizontal_derivative(F, k, self.conn, self.n)

    def vertical(self, F: Expr, k: int) -> Expr:
        return sympy.diff(F, self.u[k])

    def dh(self, F: Expr) -> np.ndarray:
        return object_array([self.horizontal(F, k) for k in range(self.n)])

    def dv(self, F: Expr) -> np.ndarray:
        return object_array([self.vertical(F, k) for k in range(self.n)])

    @cached_property
    def homogeneity_defect(self) -> np.ndarray:
        """u^k df^i/du^k - 2 f^i; zero exactly when Gamma is a spray."""
        return object_array([
            _sum(self.u[k] * sympy.diff(self.forces[i], self.u[k]) for k in range(self.n)) - 2 * self.forces[i]
            for i in range(self.n)
        ])

    # --- Fields along the projection ---

    def tau(self, signature: str, components) -> TensorField:
        return TensorField("tau", signature, object_array(components), self.n)

    @cached_property
    def total_time(self) -> TensorField:
        """T = u^i d/dq^i as a vector field along the projection."""
        return self.tau("vector", list(self.u))

    @staticmethod
    def _coerce(field: TensorField) -> TensorField:
        if field.space == "TQ":
            raise ValueError("Covariant derivatives act on fields along the projection, not on TQ")
        return field

    def nabla(self, field: TensorField) -> TensorField:
        """Dynamical covariant derivative; acts like Gamma on functions."""
        field = self._coerce(field)
        n, c, G = self.n, field.components, self.conn
        sig = field.signature
        if sig == "scalar":
            out = object_array(self.gamma(c[()]))
        elif sig == "vector":
            out = object_array([self.gamma(c[i]) + _sum(G[i, k] * c[k] for k in range(n)) for i in range(n)])
        elif sig == "1-form":
            out = object_array([self.gamma(c[j]) - _sum(G[k, j] * c[k] for k in range(n)) for j in range(n)])
        elif sig == "(1,1)":
            out = zeros(n, n)
            for i, j in np.ndindex(n, n):
                out[i, j] = self.gamma(c[i, j]) + _sum(G[i, k] * c[k, j] - c[i, k] * G[k, j] for k in range(n))
        elif sig in ("(0,2)", "2-form"):
            out = zeros(n, n)
            for i, j in np.ndindex(n, n):
                out[i, j] = self.gamma(c[i, j]) - _sum(G[k, i] * c[k, j] + G[k, j] * c[i, k] for k in range(n))
        else:
            raise ValueError(f"nabla is not defined for signature {sig}")
        return self.tau(sig, out)

    def _dh_coordinate(self, field: TensorField, k: int) -> np.ndarray:
        """D^H along the coordinate direction d_k."""
        n, c, B = self.n, field.components, self.berwald
        sig = field.signature
        if sig == "scalar":
            return object_array(self.horizontal(c[()], k))
        if sig == "vector":
            return object_array([self.horizontal(c[i], k) + _sum(B[i, k, m] * c[m] for m in range(n)) for i in range(n)])
        if sig == "1-form":
            return object_array([self.horizontal(c[j], k) - _sum(B[m, k, j] * c[m] for m in range(n)) for j in range(n)])
        out = zeros(n, n)
        if sig == "(1,1)":
            for i, j in np.ndindex(n, n):
                out[i, j] = self.horizontal(c[i, j], k) + _sum(B[i, k, m] * c[m, j] - B[m, k, j] * c[i, m] for m in range(n))
            return out
        if sig in ("(0,2)", "2-form"):
            for i, j in np.ndindex(n, n):
                out[i, j] = self.horizontal(c[i, j], k) - _sum(B[m, k, i] * c[m, j] + B[m, k, j] * c[i, m] for m in range(n))
            return out
        raise ValueError(f"D^H is not defined for signature {sig}")

    def dh_cov(self, Z: TensorField, field: TensorField) -> TensorField:
        """(D^H_Z F) = Z^k D^H_k F."""
        field = self._coerce(field)
        Z = self._coerce(Z)
        parts = [self._dh_coordinate(field, k) for k in range(self.n)]
        return self.tau(field.signature, _contract(Z.components, parts, field.components.shape))

    def dv_cov(self, Z: TensorField, field: TensorField) -> TensorField:
        """(D^V_Z F) = Z^k dF/du^k, componentwise."""
        field = self._coerce(field)
        Z = self._coerce(Z)
        parts = [map_array(lambda e, k=k: sympy.diff(e, self.u[k]), field.components) for k in range(self.n)]
        return self.tau(field.signature, _contract(Z.components, parts, field.components.shape))

    def dh_direction(self, field: TensorField, k: int) -> TensorField:
        return self.tau(field.signature, self._dh_coordinate(self._coerce(field), k))

    def dv_direction(self, field: TensorField, k: int) -> TensorField:
        return self.tau(field.signature, map_array(lambda e: sympy.diff(e, self.u[k]), field.components))

    def coordinate(self, k: int) -> TensorField:
        return self.tau("vector", [sympy.S.One if i == k else sympy.S.Zero for i in range(self.n)])

    def basic(self, field: TensorField) -> TensorField:
        """A field on Q viewed along the projection."""
        return TensorField("tau", field.signature, field.components, self.n)


    # --- Curvature identities ---

    def bianchi_cyclic(self) -> np.ndarray:
        """B[a][b][c] = g(R(d_a,d_b),d_c) + g(R(d_b,d_c),d_a) + g(R(d_c,d_a),d_b)."""
        n, g, R = self.n, self.metric.components, self.curvature
        out = zeros(n, n, n)
        for a, b, c in np.ndindex(n, n, n):
            out[a, b, c] = _sum(
                g[c, i] * R[i, a, b] + g[a, i] * R[i, b, c] + g[b, i] * R[i, c, a] for i in range(n)
            )
        return out

    def dv_phi(self) -> np.ndarray:
        """(d^v Phi)^i_ab = dPhi^i_b/du^a - dPhi^i_a/du^b."""
        n, phi = self.n, self.phi
        out = zeros(n, n, n)
        for i, a, b in np.ndindex(n, n, n):
            out[i, a, b] = sympy.diff(phi[i, b], self.u[a]) - sympy.diff(phi[i, a], self.u[b])
        return out

    def phi_from_curvature(self) -> np.ndarray:
        """R(T, d_a)^i = R^i_ka u^k."""
        n, R = self.n, self.curvature
        return object_array([[_sum(R[i, k, a] * self.u[k] for k in range(n)) for a in range(n)] for i in range(n)])

    def phi_from_riemann(self) -> np.ndarray:
        """Phi^i_j = Rm^i_ljk u^l u^k."""
        n, Rm = self.n, self.riemann
        return object_array([
            [_sum(Rm[i, l, j, k] * self.u[l] * self.u[k] for l in range(n) for k in range(n)) for j in range(n)]
            for i in range(n)
        ])

    def curvature_from_riemann(self) -> np.ndarray:
        """R^i_kj = Rm^i_ljk u^l, stored like curvature."""
        n, Rm = self.n, self.riemann
        out = zeros(n, n, n)
        for i, k, j in np.ndindex(n, n, n):
            out[i, k, j] = _sum(Rm[i, l, j, k] * self.u[l] for l in range(n))
        return out
