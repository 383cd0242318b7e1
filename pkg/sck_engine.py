"""
sck_engine.py

Special conformal Killing tensors on a Riemannian base.

Every identity is returned as an (lhs, rhs) pair of component arrays of sympy
expressions; the suite runner evaluates both sides at the sample points.
"""

import logging
from functools import cached_property
from typing import Dict, Tuple

import numpy as np
import sympy

from expr_engine import Expr
from lift_engine import LiftEngine
from scenario_manager import TensorField, object_array, zeros

logger = logging.getLogger(__name__)

HALF = sympy.Rational(1, 2)

Identity = Tuple[np.ndarray, np.ndarray]


def _sum(terms) -> Expr:
    return sympy.Add(*terms)


def _delta(i: int, j: int) -> Expr:
    return sympy.S.One if i == j else sympy.S.Zero


def _zero_like(a: np.ndarray) -> np.ndarray:
    return np.full(np.shape(a), sympy.S.Zero, dtype=object)


class SckEngine:
    """Identities satisfied by a g-symmetric J with conformal factor f."""

    def __init__(self, lifts: LiftEngine, f: Expr = None):
        self.logger = logging.getLogger(__name__)
        self.lifts = lifts
        self.connection = lifts.connection
        self.scenario = lifts.scenario
        self.n = lifts.n
        self.q, self.u = lifts.q, lifts.u
        self.f = f if f is not None else self.scenario.f_or_trace
        if not self.scenario.riemannian:
            raise ValueError(f"[{self.scenario.name}] SCK diagnostics need a declared metric")

    # --- Building blocks ---

    @cached_property
    def g(self) -> np.ndarray:
        return self.scenario.metric

    @cached_property
    def df(self) -> np.ndarray:
        return object_array([sympy.diff(self.f, qi) for qi in self.q])

    @cached_property
    def theta(self) -> np.ndarray:
        """theta_j = g_jk u^k."""
        return object_array([_sum(self.g[j, k] * self.u[k] for k in range(self.n)) for j in range(self.n)])

    @cached_property
    def xf(self) -> TensorField:
        """X_f = -g^-1 df, i.e. X_f contracted with g equals -d^h f."""
        g_inv = self.connection.metric_inverse
        return self.connection.tau(
            "vector", [-_sum(g_inv[i, j] * self.df[j] for j in range(self.n)) for i in range(self.n)]
        )

    @cached_property
    def recover_f(self) -> Expr:
        return self.scenario.trace_J

    @cached_property
    def dh_J(self):
        """D^H_a J for each coordinate direction a."""
        return [self.connection.dh_direction(self.lifts.J_tau, a).components for a in range(self.n)]

    @cached_property
    def cofactor(self) -> np.ndarray:
        """A = adj(J) = det(J) J^-1."""
        n = self.n
        adjugate = sympy.Matrix(n, n, lambda i, j: self.scenario.J[i, j]).adjugate()
        return object_array([[adjugate[i, j] for j in range(n)] for i in range(n)])

    @cached_property
    def det_J(self) -> Expr:
        return sympy.Matrix(self.n, self.n, lambda i, j: self.scenario.J[i, j]).det()

    # --- Defining condition ---

    def sck_coordinate(self) -> Identity:
        """J_{lj|k} against 1/2 (g_lk df_j + g_jk df_l)."""
        n = self.n
        Jcov = self.lifts.J_covariant
        lhs = zeros(n, n, n)
        rhs = zeros(n, n, n)
        for l, j, k in np.ndindex(n, n, n):
            lhs[l, j, k] = _sum(self.g[l, m] * Jcov[m, j, k] for m in range(n))
            rhs[l, j, k] = HALF * (self.g[l, k] * self.df[j] + self.g[j, k] * self.df[l])
        return lhs, rhs

    def sck_mixed(self) -> Identity:
        """J^i_{j|k} against 1/2 (delta^i_k df_j + g_jk grad f^i)."""
        n = self.n
        g_inv = self.connection.metric_inverse
        grad = [_sum(g_inv[i, l] * self.df[l] for l in range(n)) for i in range(n)]
        lhs = zeros(n, n, n)
        rhs = zeros(n, n, n)
        for i, j, k in np.ndindex(n, n, n):
            lhs[i, j, k] = self.lifts.J_covariant[i, j, k]
            rhs[i, j, k] = HALF * (_delta(i, k) * self.df[j] + self.g[j, k] * grad[i])
        return lhs, rhs

    def sck_intrinsic(self) -> Identity:
        """nabla J = 1/2 (T (x) d^h f - X_f (x) theta_L)."""
        n = self.n
        lhs = self.lifts.nabla_J.components
        xf = self.xf.components
        rhs = object_array([
            [HALF * (self.u[i] * self.df[j] - xf[i] * self.theta[j]) for j in range(n)] for i in range(n)
        ])
        return lhs, rhs

    def sck_residual(self) -> Identity:
        return self.sck_coordinate()

    def trace_law(self) -> Identity:
        """d(tr J) = df; the additive constant is irrelevant."""
        tr = self.recover_f
        return object_array([sympy.diff(tr, qi) for qi in self.q]), self.df

    def nabla_trace_law(self) -> Identity:
        return object_array(self.connection.gamma(self.recover_f)), object_array(self.connection.gamma(self.f))

    # --- Consequences on TQ ---

    @cached_property
    def beta(self) -> np.ndarray:
        """nabla d^h f as a 1-form along the projection."""
        return self.connection.nabla(self.connection.tau("1-form", self.connection.dh(self.f))).components

    @cached_property
    def phi_commutator(self) -> np.ndarray:
        """Phi J - J Phi."""
        n = self.n
        phi, J = self.connection.phi, self.scenario.J
        return object_array([
            [_sum(phi[i, k] * J[k, j] - J[i, k] * phi[k, j] for k in range(n)) for j in range(n)] for i in range(n)
        ])

    def lifted_identities(self) -> Dict[str, Identity]:
        n = self.n
        xf = self.xf.components
        nabla_xf = self.connection.nabla(self.xf).components
        theta, df, beta = self.theta, self.df, self.beta

        U = self.lifts.U.components
        scKU = object_array([[-HALF * (self.u[i] * df[j] + xf[i] * theta[j]) for j in range(n)] for i in range(n)])

        phiJ = object_array([[HALF * (self.u[i] * beta[j] + nabla_xf[i] * theta[j]) for j in range(n)] for i in range(n)])

        dhJ_lhs = zeros(n, n, n)
        dhJ_rhs = zeros(n, n, n)
        for i, a, b in np.ndindex(n, n, n):
            dhJ_lhs[i, a, b] = self.dh_J[a][i, b] - self.dh_J[b][i, a]
            dhJ_rhs[i, a, b] = -HALF * (df[a] * _delta(i, b) - df[b] * _delta(i, a))

        ubis_lhs = zeros(n, n)
        ubis_rhs = zeros(n, n)
        phij2_lhs = zeros(n, n)
        phij2_rhs = zeros(n, n)
        commutator = self.phi_commutator
        for a, b in np.ndindex(n, n):
            ubis_lhs[a, b] = _sum(self.g[b, i] * U[i, a] for i in range(n))
            ubis_rhs[a, b] = -HALF * (df[a] * theta[b] - df[b] * theta[a])
            phij2_lhs[a, b] = _sum(self.g[b, i] * commutator[i, a] for i in range(n))
            phij2_rhs[a, b] = HALF * (beta[a] * theta[b] - beta[b] * theta[a])

        return {
            "scKU": (U, scKU),
            "PhiJ": (commutator, phiJ),
            "dhJ": (dhJ_lhs, dhJ_rhs),
            "Ubis": (ubis_lhs, ubis_rhs),
            "PhiJ2": (phij2_lhs, phij2_rhs),
        }

    def sck_R_offset(self) -> np.ndarray:
        """-Delta (x) df on TQ: the expected value of R - J^c."""
        n = self.n
        out = zeros(2 * n, 2 * n)
        for i, j in np.ndindex(n, n):
            out[n + i, j] = -self.u[i] * self.df[j]
        return out

    # --- Cofactor Killing chain ---

    def cofactor_killing(self) -> Dict[str, Identity]:
        n = self.n
        c = self.connection
        g, J, A = self.g, self.scenario.J, self.cofactor
        A_field = c.tau("(1,1)", A)
        dh_A = [c.dh_direction(A_field, a).components for a in range(n)]
        A_lower = c.tau("(0,2)", [[_sum(g[b, i] * A[i, d] for i in range(n)) for d in range(n)] for b in range(n)])
        dh_A_lower = [c.dh_direction(A_lower, a).components for a in range(n)]
        xf = self.xf.components

        killing2 = zeros(n, n, n)
        killing1 = zeros(n, n, n)
        for a, b, d in np.ndindex(n, n, n):
            killing2[a, b, d] = dh_A_lower[a][b, d] + dh_A_lower[b][d, a] + dh_A_lower[d][a, b]
            killing1[a, b, d] = _sum(
                g[d, i] * dh_A[a][i, b] + g[a, i] * dh_A[b][i, d] + g[b, i] * dh_A[d][i, a] for i in range(n)
            )

        ddet = [sympy.diff(self.det_J, qi) for qi in self.q]
        dJdet_rhs = object_array([_sum(A[k, a] * self.df[k] for k in range(n)) for a in range(n)])

        aux_lhs = zeros(n, n, n)
        aux_rhs = zeros(n, n, n)
        dhscK_rhs = zeros(n, n, n)
        for a, i, b in np.ndindex(n, n, n):
            aux_lhs[a, i, b] = _sum(self.dh_J[a][i, k] * A[k, b] for k in range(n))
            aux_rhs[a, i, b] = -_sum(J[i, k] * dh_A[a][k, b] for k in range(n)) + ddet[a] * _delta(i, b)
            dhscK_rhs[a, i, b] = HALF * (_delta(i, a) * self.df[b] - xf[i] * g[a, b])
        dhscK_lhs = object_array([self.dh_J[a] for a in range(n)])

        dJ_det_lhs = object_array([_sum(J[k, a] * ddet[k] for k in range(n)) for a in range(n)])
        tr_grad = [sympy.diff(self.recover_f, qi) for qi in self.q]
        dJ_det_rhs = object_array([self.det_J * tr_grad[a] for a in range(n)])

        return {
            "killing2": (killing2, _zero_like(killing2)),
            "killing1": (killing1, _zero_like(killing1)),
            "dJdetJ": (object_array(ddet), dJdet_rhs),
            "aux": (aux_lhs, aux_rhs),
            "dhscK": (dhscK_lhs, dhscK_rhs),
            "dJ-detJ": (dJ_det_lhs, dJ_det_rhs),
        }

    # --- Covariant derivatives of U ---

    def dv_U(self) -> Identity:
        """g(D^V_c U(d_a), d_b) = g(d_c, D^H_a J(d_b) - D^H_b J(d_a))."""
        n = self.n
        g = self.g
        U = self.lifts.U.components
        lhs = zeros(n, n, n)
        rhs = zeros(n, n, n)
        for c, a, b in np.ndindex(n, n, n):
            lhs[c, a, b] = _sum(g[b, i] * sympy.diff(U[i, a], self.u[c]) for i in range(n))
            rhs[c, a, b] = _sum(g[c, k] * (self.dh_J[a][k, b] - self.dh_J[b][k, a]) for k in range(n))
        return lhs, rhs

    def dh_dh_J(self) -> np.ndarray:
        """Second covariant differential D^H D^H J, stored [c][a][i][b]."""
        n = self.n
        c = self.connection
        B = c.berwald
        out = zeros(n, n, n, n)
        first = [c.tau("(1,1)", self.dh_J[a]) for a in range(n)]
        second = [[c.dh_direction(first[a], k).components for a in range(n)] for k in range(n)]
        for k, a, i, b in np.ndindex(n, n, n, n):
            out[k, a, i, b] = second[k][a][i, b] - _sum(B[m, k, a] * self.dh_J[m][i, b] for m in range(n))
        return out

    def dh_U(self) -> Identity:
        """g(D^H_c U(d_a), d_b) = g(T, D2J(c,a,b) - D2J(c,b,a))."""
        n = self.n
        c = self.connection
        g = self.g
        U = self.lifts.U
        second = self.dh_dh_J()
        dh_U = [c.dh_direction(U, k).components for k in range(n)]
        lhs = zeros(n, n, n)
        rhs = zeros(n, n, n)
        for k, a, b in np.ndindex(n, n, n):
            lhs[k, a, b] = _sum(g[b, i] * dh_U[k][i, a] for i in range(n))
            rhs[k, a, b] = _sum(self.theta[i] * (second[k, a, i, b] - second[k, b, i, a]) for i in range(n))
        return lhs, rhs

    # --- Parallel J on a curved base ---

    def parallel_identities(self) -> Dict[str, Identity]:
        """Integrability identities for a symmetric parallel J."""
        n = self.n
        c = self.connection
        J, g, Rm = self.scenario.J, self.g, c.riemann
        R = c.curvature
        phi = c.phi
        u = self.u
        Ju = [_sum(J[k, l] * u[l] for l in range(n)) for k in range(n)]

        ricci_lhs = zeros(n, n, n, n)
        ricci_rhs = zeros(n, n, n, n)
        comm_lhs = zeros(n, n, n, n)
        comm_rhs = zeros(n, n, n, n)
        for i, k, m, l in np.ndindex(n, n, n, n):
            ricci_lhs[i, k, m, l] = _sum(J[i, j] * Rm[j, k, m, l] for j in range(n))
            ricci_rhs[i, k, m, l] = _sum(Rm[i, j, m, l] * J[j, k] for j in range(n))
            comm_lhs[i, k, m, l] = _sum(J[i, j] * (Rm[j, k, m, l] + Rm[j, l, m, k]) for j in range(n))
            comm_rhs[i, k, m, l] = _sum((Rm[i, k, j, l] + Rm[i, l, j, k]) * J[j, m] for j in range(n))

        dv_phi = [[[sympy.diff(phi[i, a], u[k]) for k in range(n)] for a in range(n)] for i in range(n)]

        aux2 = zeros(n, n, n)
        for i, a, b in np.ndindex(n, n, n):
            aux2[i, a, b] = _sum(
                -J[k, b] * dv_phi[i][a][k]
                - R[i, a, k] * J[k, b]
                + J[i, k] * dv_phi[k][a][b]
                + J[i, k] * R[k, a, b]
                for k in range(n)
            )

        aux3 = zeros(n, n)
        for i, a in np.ndindex(n, n):
            aux3[i, a] = self._aux3_entry(i, a, J, R, phi, dv_phi, Ju)

        theta = self.theta
        aux5 = zeros(n, n)
        for a, b in np.ndindex(n, n):
            aux5[a, b] = _sum(theta[i] * R[i, a, k] * J[k, b] for i in range(n) for k in range(n))

        JT_lower = [_sum(g[i, l] * Ju[l] for l in range(n)) for i in range(n)]
        commutator = self.phi_commutator
        aux6_lhs = zeros(n, n)
        aux6_rhs = zeros(n, n)
        for a, b in np.ndindex(n, n):
            aux6_lhs[a, b] = 3 * _sum(JT_lower[i] * R[i, a, b] for i in range(n))
            aux6_rhs[a, b] = -_sum(g[i, b] * commutator[i, a] for i in range(n))

        return {
            "PhiJ-commute": (self.phi_commutator, _zero_like(self.phi_commutator)),
            "ricci-commute": (ricci_lhs, ricci_rhs),
            "J-riemann": (comm_lhs, comm_rhs),
            "aux2": (aux2, _zero_like(aux2)),
            "aux3": (aux3, _zero_like(aux3)),
            "aux5": (aux5, _zero_like(aux5)),
            "aux6": (aux6_lhs, aux6_rhs),
        }

    def _aux3_entry(self, i, a, J, R, phi, dv_phi, Ju) -> Expr:
        n = self.n
        u = self.u
        terms = []
        for k in range(n):
            terms.append(-Ju[k] * dv_phi[i][a][k])
            terms.append(-R[i, a, k] * Ju[k])
            terms.append(2 * J[i, k] * phi[k, a])
            terms.append(_sum(J[i, m] * R[m, a, k] for m in range(n)) * u[k])
        return _sum(terms)
