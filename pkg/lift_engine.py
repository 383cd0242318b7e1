"""
lift_engine.py

Objects lifted to the tangent bundle and the recursion tensor R.
- Vertical endomorphism S, complete and vertical lifts of vectors, complete lift J^c.
- Poincare-Cartan forms theta_L, omega_L and the deformed form omega_1.
- R solved pointwise from i_{R xi} omega_L = i_xi omega_1, and its closed form
  in terms of J, J-bar and U.
- Legendre pullback of the cotangent tensor J-tilde.
- Adapted frame (H_i, V_i), Kaehler lift of g and lifts of (1,1) tensors along the projection.
"""

import logging
from functools import cached_property
from typing import Tuple

import numpy as np
import sympy

import linalg_engine
from connection_engine import ConnectionEngine
from expr_engine import Evaluator, Expr, Point, chart_symbols
from scenario_manager import TensorField, map_array, object_array, zeros
from tensor_engine import ext_deriv, lie_derivative_11

logger = logging.getLogger(__name__)


def _sum(terms) -> Expr:
    return sympy.Add(*terms)


def _block(qq, qu, uq, uu) -> np.ndarray:
    return np.block([[np.asarray(qq, dtype=object), np.asarray(qu, dtype=object)],
                     [np.asarray(uq, dtype=object), np.asarray(uu, dtype=object)]])


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    _, p = b.shape
    out = zeros(m, p)
    for i, j in np.ndindex(m, p):
        out[i, j] = _sum(a[i, s] * b[s, j] for s in range(k) if a[i, s] != 0 and b[s, j] != 0)
    return out


# --- Lifts ---

def vertical_endomorphism(n: int) -> TensorField:
    """S = d/du^i (x) dq^i."""
    S = zeros(2 * n, 2 * n)
    for i in range(n):
        S[n + i, i] = sympy.S.One
    return TensorField("TQ", "(1,1)", S, n)


def complete_lift_vec(X: TensorField) -> TensorField:
    """X^c = X^i d/dq^i + u^j (dX^i/dq^j) d/du^i."""
    n = X.n
    q, u = chart_symbols(n)
    x = X.components
    fiber = [_sum(u[j] * sympy.diff(x[i], q[j]) for j in range(n)) for i in range(n)]
    return TensorField("TQ", "vector", object_array(list(x) + fiber), n)


def vertical_lift_vec(X: TensorField) -> TensorField:
    n = X.n
    return TensorField("TQ", "vector", object_array([sympy.S.Zero] * n + list(X.components)), n)


def horizontal_lift_vec(X: TensorField, conn: np.ndarray) -> TensorField:
    """X^H = X^i H_i = X^i d/dq^i - Gamma^m_i X^i d/du^m."""
    n = X.n
    x = X.components
    fiber = [-_sum(conn[m, i] * x[i] for i in range(n)) for m in range(n)]
    return TensorField("TQ", "vector", object_array(list(x) + fiber), n)


def complete_lift_J(J: TensorField) -> TensorField:
    """[[J, 0], [u^k dJ/dq^k, J]] in the (q, u) coordinate basis."""
    n = J.n
    q, u = chart_symbols(n)
    j = J.components
    lower = map_array(lambda e: _sum(u[k] * sympy.diff(e, q[k]) for k in range(n)), j)
    return TensorField("TQ", "(1,1)", _block(j, zeros(n, n), lower, j), n)


def theta_omega(L: Expr, J: TensorField) -> Tuple[TensorField, TensorField, TensorField]:
    """theta_L = (dL/du^i) dq^i, omega_L = d theta_L, omega_1 = d((dL/du^m) J^m_i dq^i)."""
    n = J.n
    _, u = chart_symbols(n)
    p = [sympy.diff(L, u[i]) for i in range(n)]
    theta = TensorField("TQ", "1-form", object_array(p + [sympy.S.Zero] * n), n)
    alpha = [_sum(p[m] * J.components[m, i] for m in range(n)) for i in range(n)]
    alpha_form = TensorField("TQ", "1-form", object_array(alpha + [sympy.S.Zero] * n), n)
    return theta, ext_deriv(theta), ext_deriv(alpha_form)


def solve_R(omega_L: np.ndarray, omega_1: np.ndarray) -> np.ndarray:
    """Pointwise R with omega_L R = omega_1 (matrices of the two 2-forms)."""
    try:
        return linalg_engine.solve(omega_L, omega_1)
    except linalg_engine.SingularMatrixError as e:
        raise linalg_engine.SingularMatrixError("omega_L is degenerate", condition=e.condition) from e


def transpose_J(J: TensorField, g: np.ndarray, g_inv: np.ndarray) -> TensorField:
    """J-bar = g^-1 J^T g, so that g(JX, Y) = g(X, J-bar Y)."""
    n = J.n
    j = J.components
    out = zeros(n, n)
    for i, k in np.ndindex(n, n):
        out[i, k] = _sum(g_inv[i, a] * j[m, a] * g[m, k] for a in range(n) for m in range(n))
    return TensorField("tau", "(1,1)", out, n)


def closed_form_R(J: TensorField, J_bar: TensorField, conn: np.ndarray, U: TensorField) -> TensorField:
    """R = [[J, 0], [U + J-bar Gamma - Gamma J, J-bar]] in the coordinate basis."""
    n = J.n
    j, jb, u = J.components, J_bar.components, U.components
    lower = zeros(n, n)
    for i, k in np.ndindex(n, n):
        lower[i, k] = u[i, k] + _sum(jb[i, m] * conn[m, k] - conn[i, m] * j[m, k] for m in range(n))
    return TensorField("TQ", "(1,1)", _block(j, zeros(n, n), lower, jb), n)


# --- Adapted frame helpers (numeric) ---

def adapted_frame(conn: np.ndarray) -> np.ndarray:
    """Columns H_1..H_n, V_1..V_n in coordinates: [[I, 0], [-Gamma, I]]."""
    conn = np.asarray(conn, dtype=float)
    n = conn.shape[0]
    return np.block([[np.eye(n), np.zeros((n, n))], [-conn, np.eye(n)]])


def to_adapted(A: np.ndarray, frame: np.ndarray) -> np.ndarray:
    return linalg_engine.solve(frame, A @ frame)


def from_adapted(blocks: np.ndarray, frame: np.ndarray) -> np.ndarray:
    return frame @ linalg_engine.solve(frame.T, blocks.T).T


def decompose(xi: np.ndarray, frame: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Splits xi = X^H + Y^V and returns (X, Y)."""
    n = frame.shape[0] // 2
    coords = linalg_engine.solve(frame, np.asarray(xi, dtype=float))
    return coords[:n], coords[n:]


def kahler_lift(g: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """K(g)(X^V, Y^H) = g(X, Y) = -K(g)(X^H, Y^V), zero on HH and VV pairs."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    adapted = np.block([[np.zeros((n, n)), -g], [g, np.zeros((n, n))]])
    inverse = linalg_engine.inverse(frame)
    return inverse.T @ adapted @ inverse


def horizontal_lift_11(A: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """H(A)(X^H) = (AX)^H, H(A)(X^V) = (AX)^V."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    adapted = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), A]])
    return frame @ linalg_engine.solve(frame.T, adapted.T).T


def vertical_lift_11(A: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """V(A)(X^H) = (AX)^V, V(A)(X^V) = 0."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    adapted = np.block([[np.zeros((n, n)), np.zeros((n, n))], [A, np.zeros((n, n))]])
    return frame @ linalg_engine.solve(frame.T, adapted.T).T


# --- Engine ---

class LiftEngine:
    """Lifted structures of one scenario on top of its connection."""

    def __init__(self, connection: ConnectionEngine):
        self.logger = logging.getLogger(__name__)
        self.connection = connection
        self.scenario = connection.scenario
        self.n = connection.n
        self.q, self.u = chart_symbols(self.n)

    # --- Symbolic ---

    @cached_property
    def J(self) -> TensorField:
        return TensorField("Q", "(1,1)", self.scenario.J, self.n)

    @cached_property
    def J_tau(self) -> TensorField:
        return self.connection.basic(self.J)

    @cached_property
    def S(self) -> TensorField:
        return vertical_endomorphism(self.n)

    @cached_property
    def Jc(self) -> TensorField:
        return complete_lift_J(self.J)

    @cached_property
    def JcS(self) -> TensorField:
        return TensorField("TQ", "(1,1)", _matmul(self.Jc.components, self.S.components), self.n)

    @cached_property
    def _forms(self):
        self.logger.debug(f"[{self.scenario.name}] Building theta_L, omega_L and omega_1")
        return theta_omega(self.scenario.lagrangian, self.J)

    @property
    def theta(self) -> TensorField:
        return self._forms[0]

    @property
    def omega_L(self) -> TensorField:
        return self._forms[1]

    @property
    def omega_1(self) -> TensorField:
        return self._forms[2]

    @cached_property
    def theta_tau(self) -> TensorField:
        """theta_L as a semi-basic form along the projection: (dL/du^i)."""
        return self.connection.tau("1-form", [sympy.diff(self.scenario.lagrangian, ui) for ui in self.u])

    @cached_property
    def J_bar(self) -> TensorField:
        c = self.connection
        return transpose_J(self.J, c.metric.components, c.metric_inverse)

    @cached_property
    def nabla_J(self) -> TensorField:
        return self.connection.nabla(self.J_tau)

    @cached_property
    def U_general(self) -> TensorField:
        """g(UX, Y) = d^h(J theta_L)(X, Y)."""
        c = self.connection
        n = self.n
        theta = self.theta_tau.components
        alpha = [_sum(theta[m] * self.J.components[m, j] for m in range(n)) for j in range(n)]
        dh_alpha = [[c.horizontal(alpha[j], k) for j in range(n)] for k in range(n)]
        out = zeros(n, n)
        for i, k in np.ndindex(n, n):
            out[i, k] = _sum(c.metric_inverse[i, j] * (dh_alpha[k][j] - dh_alpha[j][k]) for j in range(n))
        return c.tau("(1,1)", out)

    @cached_property
    def J_covariant(self) -> np.ndarray:
        """Classical J^m_{k|j}, stored [m][k][j]; riemannian mode only."""
        chris = self.connection.christoffel
        if chris is None:
            raise ValueError("Classical covariant derivative needs a declared metric")
        n = self.n
        j = self.J.components
        out = zeros(n, n, n)
        for m, k, l in np.ndindex(n, n, n):
            out[m, k, l] = sympy.diff(j[m, k], self.q[l]) + _sum(
                chris[m, l, p] * j[p, k] - chris[p, l, k] * j[m, p] for p in range(n)
            )
        return out

    @cached_property
    def U_coord(self) -> TensorField:
        """U^i_j = g^ik (J^m_{k|j} - J^m_{j|k}) g_ml u^l."""
        c = self.connection
        n = self.n
        g = self.scenario.metric
        g_inv = c.metric_inverse
        Jc = self.J_covariant
        lowered_u = [_sum(g[m, l] * self.u[l] for l in range(n)) for m in range(n)]
        out = zeros(n, n)
        for i, j in np.ndindex(n, n):
            out[i, j] = _sum(
                g_inv[i, k] * (Jc[m, k, j] - Jc[m, j, k]) * lowered_u[m]
                for k in range(n) for m in range(n)
            )
        return c.tau("(1,1)", out)

    @property
    def U(self) -> TensorField:
        return self.U_coord if self.scenario.riemannian else self.U_general

    @cached_property
    def closed_form_R(self) -> TensorField:
        return closed_form_R(self.J, self.J_bar, self.connection.conn, self.U)

    @cached_property
    def spray_field(self) -> TensorField:
        return TensorField("TQ", "vector", self.connection.spray, self.n)

    @cached_property
    def lie_gamma_R(self) -> TensorField:
        """L_Gamma R of the closed-form R."""
        self.logger.debug(f"[{self.scenario.name}] Building the Lie derivative of R along Gamma")
        return lie_derivative_11(self.spray_field, self.closed_form_R)

    @cached_property
    def energy_form(self) -> TensorField:
        """dE_L on TQ."""
        return ext_deriv(TensorField("TQ", "scalar", object_array(self.connection.energy), self.n))

    @cached_property
    def legendre_map(self) -> np.ndarray:
        """p_i = dL/du^i."""
        return object_array([sympy.diff(self.scenario.lagrangian, ui) for ui in self.u])

    @cached_property
    def _legendre_parts(self):
        n = self.n
        p = self.legendre_map
        dp_dq = object_array([[sympy.diff(p[i], self.q[j]) for j in range(n)] for i in range(n)])
        return Evaluator(p, n), Evaluator(dp_dq, n)

    # --- Pointwise ---

    def R_at(self, point: Point) -> np.ndarray:
        return solve_R(self.omega_L.at(point), self.omega_1.at(point))

    def frame_at(self, point: Point) -> np.ndarray:
        return adapted_frame(self.conn_at(point))

    def conn_at(self, point: Point) -> np.ndarray:
        return self._conn_evaluator(point)

    @cached_property
    def _conn_evaluator(self) -> Evaluator:
        return Evaluator(self.connection.conn, self.n)

    def J_tilde_at(self, p: np.ndarray, point: Point) -> np.ndarray:
        """
        Cotangent tensor J-tilde at (q, p): [[J, 0], [K, J^T]]
        with K_ij = p_k (dJ^k_i/dq^j - dJ^k_j/dq^i).
        """
        n = self.n
        j = self.J.at(point)
        dj = self.J.gradient(point)
        K = np.einsum("k,jki->ij", p, dj) - np.einsum("k,ikj->ij", p, dj)
        return np.block([[j, np.zeros((n, n))], [K, j.T]])

    def legendre_R_at(self, point: Point) -> np.ndarray:
        """Leg* J-tilde = D^-1 J-tilde D with D the Jacobian of (q, u) -> (q, p)."""
        n = self.n
        p_eval, dp_dq_eval = self._legendre_parts
        p = p_eval(point)
        g = self.connection.metric.at(point)
        D = np.block([[np.eye(n), np.zeros((n, n))], [dp_dq_eval(point), g]])
        J_tilde = self.J_tilde_at(p, point)
        try:
            return linalg_engine.solve(D, J_tilde @ D)
        except linalg_engine.SingularMatrixError as e:
            raise linalg_engine.SingularMatrixError(
                "Legendre map Jacobian is singular (Hessian degenerate)", condition=e.condition
            ) from e
