"""
suite_runner.py

The orchestrator of a verification run.
- Builds the connection, lift, SCK and eigen machinery for one scenario.
- Assembles the check catalogue of each suite, with gating and expected negatives.
- Evaluates every check over the sample set (negatives at the probe point) and
  collects the results into a CheckReport.
"""

import logging
import time
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import sympy

import config
import linalg_engine
from connection_engine import ConnectionEngine
from eigen_engine import EigenEntry, EigenMatchingError, SeparabilityReport, point_eigen, separability_diag
from expr_engine import Evaluator, Point, scaled_residual
from lift_engine import (
    LiftEngine,
    complete_lift_J,
    complete_lift_vec,
    horizontal_lift_11,
    kahler_lift,
    to_adapted,
    vertical_lift_11,
)
from report_manager import FAIL, NOT_APPLICABLE, PASS, Check, CheckReport, CheckResult
from scenario_manager import Scenario, SampleSet, TensorField, object_array, probe_point, sample, zeros
from sck_engine import SckEngine
from tensor_engine import (
    d_A,
    ext_deriv,
    fn_bracket,
    fn_bracket_at,
    haantjes_at,
    lie_bracket,
    lie_derivative_11,
    nijenhuis,
    nijenhuis_at,
)

SUITES = ("connection", "lifts", "torsion", "sck", "eigen")

# Failures inside a check that abort the run with exit code 4
NUMERIC_ERRORS = (ArithmeticError, EigenMatchingError)

# Smallest max |Phi| at the probe that counts as a curved base
PHI_WITNESS = 0.01

Pair = Tuple[np.ndarray, np.ndarray]


class NumericCheckError(RuntimeError):
    """A check could not be evaluated: domain, singular or eigen failure."""

    def __init__(self, check_id: str, cause: Exception):
        self.check_id = check_id
        self.cause = cause
        super().__init__(f"check '{check_id}' failed to evaluate: {cause}")


class IdentityResidual:
    """Scaled residual of a symbolic (lhs, rhs) pair, compiled on first use."""

    def __init__(self, build: Callable[[], Pair], n: int):
        self.build = build
        self.n = n

    @cached_property
    def evaluator(self) -> Evaluator:
        lhs, rhs = self.build()
        lhs = np.asarray(lhs, dtype=object)
        rhs = np.asarray(rhs, dtype=object)
        if lhs.shape != rhs.shape:
            raise ValueError(f"Identity sides differ in shape: {lhs.shape} vs {rhs.shape}")
        stacked = np.empty((2,) + lhs.shape, dtype=object)
        stacked[0, ...] = lhs
        stacked[1, ...] = rhs
        return Evaluator(stacked, self.n)

    def __call__(self, point: Point) -> float:
        values = self.evaluator(point)
        return scaled_residual(values[0], values[1])


def pointwise(fn: Callable[[Point], Optional[Pair]]) -> Callable[[Point], Optional[float]]:
    """Residual of a numeric (lhs, rhs) pair; `None` from `fn` skips the point."""

    def residual(point: Point) -> Optional[float]:
        pair = fn(point)
        if pair is None:
            return None
        return scaled_residual(*pair)

    return residual


class SuiteRunner:
    """Runs the check suites of one scenario over one sample set."""

    def __init__(self, scenario: Scenario, points: int = None, seed: int = None, tol: float = None):
        self.logger = logging.getLogger(__name__)
        self.scenario = scenario
        self.name = scenario.name
        self.n = scenario.n
        self.tol = tol if tol is not None else scenario.sampling.tolerance
        self.samples: SampleSet = sample(scenario, count=points, seed=seed)
        self.probe = probe_point(self.n)
        self.connection = ConnectionEngine(scenario)
        self.lifts = LiftEngine(self.connection)
        self._evaluators: Dict[str, Evaluator] = {}
        self._conditions: Dict[str, bool] = {}
        self._eigen: Dict[Point, EigenEntry] = {}
        self._separability: Dict[Point, SeparabilityReport] = {}
        self.logger.info(
            f"[{self.name}] Runner ready: n={self.n}, mode={scenario.mode}, "
            f"{len(self.samples)} points, seed {self.samples.seed}, tol {self.tol:.1e}"
        )

    # --- Running ---

    def run(self, suite: str = "all") -> CheckReport:
        start = time.perf_counter()
        report = CheckReport(scenario=self.name, seed=self.samples.seed, suite=suite)
        for check in self.checks(suite):
            report.checks.append(self._evaluate(check))
        report.runtime = time.perf_counter() - start
        counts = report.counts()
        self.logger.info(
            f"[{self.name}] Suite '{suite}' finished in {report.runtime:.2f}s: "
            f"{counts[PASS]} passed, {counts[FAIL]} failed, {counts[NOT_APPLICABLE]} not applicable"
        )
        return report

    def checks(self, suite: str = "all") -> List[Check]:
        if suite == "all":
            return [c for name in SUITES for c in self.checks(name)]
        builders = {
            "connection": self._connection_checks,
            "lifts": self._lifts_checks,
            "torsion": self._torsion_checks,
            "sck": self._sck_checks,
            "eigen": self._eigen_checks,
        }
        if suite not in builders:
            raise ValueError(f"Unknown suite '{suite}'. Choose from: all, {', '.join(SUITES)}")
        self.logger.info(f"[{self.name}] Assembling suite '{suite}'")
        checks = builders[suite]()
        for check in checks:
            check.id = f"{suite}.{check.id}"
            if check.id in self.scenario.expect_negative:
                check.negative = True
        return checks

    def _evaluate(self, check: Check) -> CheckResult:
        tol = check.tol if check.tol is not None else self.tol
        expect = "negative" if check.negative else "positive"
        if not check.applicable:
            self.logger.warning(f"[{self.name}] {check.id} not applicable: {check.reason}")
            return CheckResult(check.id, check.anchor, 0.0, tol, NOT_APPLICABLE, None, expect, check.reason)

        try:
            if check.negative:
                residual = check.residual(self.probe)
                if residual is None:
                    reason = "probe point outside the check's hypotheses"
                    return CheckResult(check.id, check.anchor, 0.0, tol, NOT_APPLICABLE, None, expect, reason)
                self._require_finite(check, residual)
                threshold = check.threshold if check.threshold is not None else config.NEGATIVE_THRESHOLD
                verdict = PASS if residual > threshold else FAIL
                result = CheckResult(
                    check.id, check.anchor, residual, threshold, verdict, self.probe, expect, check.reason
                )
            else:
                worst, worst_point, skipped = 0.0, None, 0
                for point in self.samples:
                    residual = check.residual(point)
                    if residual is None:
                        skipped += 1
                        continue
                    self._require_finite(check, residual)
                    if worst_point is None or residual > worst:
                        worst, worst_point = residual, point
                if worst_point is None:
                    reason = check.reason or "no sample point satisfies the check's hypotheses"
                    return CheckResult(check.id, check.anchor, 0.0, tol, NOT_APPLICABLE, None, expect, reason)
                reason = check.reason
                if skipped:
                    reason = f"{reason}; {skipped} points skipped" if reason else f"{skipped} points skipped"
                verdict = PASS if worst <= tol else FAIL
                result = CheckResult(check.id, check.anchor, worst, tol, verdict, worst_point, expect, reason)
        except NUMERIC_ERRORS as e:
            self.logger.error(f"[{self.name}] Numeric failure in {check.id}: {e}")
            raise NumericCheckError(check.id, e) from e

        if result.failed:
            self.logger.warning(f"[{self.name}] {check.id} failed: residual {result.residual:.3e} ({expect})")
        else:
            self.logger.debug(f"[{self.name}] {check.id}: residual {result.residual:.3e}")
        return result

    @staticmethod
    def _require_finite(check: Check, residual: float) -> None:
        if not np.isfinite(residual):
            raise ArithmeticError(f"non-finite residual in {check.id}")

    # --- Shared numeric pieces ---

    def _symbolic(self, build: Callable[[], Pair]) -> IdentityResidual:
        return IdentityResidual(build, self.n)

    def _values(self, key: str, build: Callable[[], np.ndarray], point: Point) -> np.ndarray:
        """Evaluates a symbolic array built on first use and cached under `key`."""
        if key not in self._evaluators:
            self._evaluators[key] = Evaluator(build(), self.n)
        return self._evaluators[key](point)

    def _holds(self, key: str, residual: Callable[[Point], Optional[float]], tol: float = None) -> bool:
        """True when `residual` stays within tolerance at every sample point."""
        if key in self._conditions:
            return self._conditions[key]
        tol = self.tol if tol is None else tol
        try:
            values = [r for r in (residual(p) for p in self.samples) if r is not None]
        except NUMERIC_ERRORS as e:
            self.logger.error(f"[{self.name}] Numeric failure while testing condition '{key}': {e}")
            raise NumericCheckError(f"condition:{key}", e) from e
        holds = all(v <= tol for v in values)
        self._conditions[key] = holds
        self.logger.debug(f"[{self.name}] Condition '{key}': {'holds' if holds else 'fails'}")
        return holds

    @cached_property
    def is_spray(self) -> bool:
        c = self.connection
        return self._holds("spray", lambda p: linalg_engine.max_norm(
            self._values("homogeneity", lambda: c.homogeneity_defect, p)))

    @cached_property
    def J_symmetric(self) -> bool:
        L = self.lifts
        return self._holds("J-symmetric", pointwise(lambda p: (L.J.at(p), L.J_bar.at(p))))

    @cached_property
    def N_J_vanishes(self) -> bool:
        return self._holds("N_J", pointwise(lambda p: (nijenhuis_at(self.lifts.J, p), 0.0)))

    @cached_property
    def J_parallel(self) -> bool:
        return self._holds("parallel-J", pointwise(lambda p: (self.lifts.nabla_J.at(p), 0.0)))

    def _R(self, point: Point) -> np.ndarray:
        return self.lifts.R_at(point)

    def _phi(self, point: Point) -> np.ndarray:
        return self._values("phi", lambda: self.connection.phi, point)

    def _nabla(self, key: str, field: Callable[[], TensorField], point: Point) -> np.ndarray:
        return self._values(f"nabla:{key}", lambda: self.connection.nabla(field()).components, point)

    def _dvU_minus_dhJ(self) -> np.ndarray:
        """(d^vU - d^hJ)^i_ab on coordinate directions."""
        n, c, L = self.n, self.connection, self.lifts
        U = L.U.components
        dh_J = [c.dh_direction(L.J_tau, a).components for a in range(n)]
        out = zeros(n, n, n)
        for i, a, b in np.ndindex(n, n, n):
            out[i, a, b] = (
                sympy.diff(U[i, b], L.u[a]) - sympy.diff(U[i, a], L.u[b])
                - (dh_J[a][i, b] - dh_J[b][i, a])
            )
        return out

    def _basic_vector(self) -> TensorField:
        """A non-constant basic field: q2 d/dq1, or q1 d/dq1 on a line."""
        q = self.lifts.q
        comps = [q[1] if self.n > 1 else q[0]] + [sympy.S.Zero] * (self.n - 1)
        return TensorField("Q", "vector", object_array(comps), self.n)

    # --- connection suite ---

    def _connection_checks(self) -> List[Check]:
        c, L = self.connection, self.lifts
        n = self.n
        riemannian = self.scenario.riemannian
        not_riemannian = "needs a declared metric"
        not_spray = "the second-order field is not a spray"

        def deldv() -> Pair:
            F = self.scenario.lagrangian
            lhs = object_array([c.gamma(c.vertical(F, k)) - c.vertical(c.gamma(F), k) for k in range(n)])
            rhs = object_array([
                sympy.Add(*[c.conn[i, k] * c.vertical(F, i) for i in range(n)]) - c.horizontal(F, k)
                for k in range(n)
            ])
            return lhs, rhs

        def symplectic(p: Point) -> Pair:
            gamma = self._values("spray", lambda: c.spray, p)
            return L.omega_L.at(p).T @ gamma, -L.energy_form.at(p)

        def phi_symmetric() -> Pair:
            g = c.metric.components
            lowered = object_array([
                [sympy.Add(*[g[i, k] * c.phi[k, j] for k in range(n)]) for j in range(n)] for i in range(n)
            ])
            return lowered, lowered.T

        checks = [
            Check("energy", "Eq:defgamma-energy", self._symbolic(lambda: (object_array(c.gamma(c.energy)), object_array(0)))),
            Check("symplectic", "Eq:defgamma", pointwise(symplectic)),
            Check("gammabrackets", "Eq:gammabrackets", self._symbolic(lambda: (c.nabla_frame, c.conn))),
            Check("curvature-antisym", "Eq:hh", self._symbolic(lambda: (c.curvature, -c.curvature.transpose(0, 2, 1)))),
            Check("covT-dv", "Eq:covT-DV",
                  self._symbolic(lambda: (
                      object_array([c.dv_direction(c.total_time, k).components for k in range(n)]),
                      object_array(sympy.eye(n).tolist()),
                  ))),
            Check("deldv", "Eq:deldv", self._symbolic(deldv)),
            Check("hessian-metric", "Eq:dvdvL", self._symbolic(lambda: (c.metric.components, self.scenario.metric)),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("LCconn", "Eq:LCconn",
                  self._symbolic(lambda: (c.conn, object_array([
                      [sympy.Add(*[c.christoffel[i, j, k] * L.u[k] for k in range(n)]) for j in range(n)]
                      for i in range(n)
                  ]))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("berwald-christoffel", "Eq:LCconn-berwald", self._symbolic(lambda: (c.berwald, c.christoffel)),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("coordPhi", "AppA:coordPhi", self._symbolic(lambda: (c.phi, c.phi_from_riemann())),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("coordPhi-curvature", "AppA:coordPhi-R", self._symbolic(lambda: (c.curvature, c.curvature_from_riemann())),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("riemann-antisym", "AppA:riemann-skew",
                  self._symbolic(lambda: (c.riemann, -c.riemann.transpose(0, 1, 3, 2))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("metric-parallel", "Sec5:DHg",
                  self._symbolic(lambda: (
                      object_array([c.dh_direction(c.metric, k).components for k in range(n)]),
                      zeros(n, n, n),
                  )),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("nabla-g", "Sec5:nabla-g", self._symbolic(lambda: (c.nabla(c.metric).components, zeros(n, n))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("covT-nabla", "Eq:covT", self._symbolic(lambda: (c.nabla(c.total_time).components, zeros(n))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("covT-dh", "Eq:covT-DH",
                  self._symbolic(lambda: (
                      object_array([c.dh_direction(c.total_time, k).components for k in range(n)]),
                      zeros(n, n),
                  )),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("Phi-symmetric", "AppA:Phi-g-symmetric", self._symbolic(phi_symmetric),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("Bianchi", "AppA:Bianchi", self._symbolic(lambda: (c.bianchi_cyclic(), zeros(n, n, n))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
        ]

        spray = self.is_spray
        checks += [
            Check("liouville", "Sec2:Delta-Gamma",
                  self._symbolic(lambda: (lie_bracket(c.liouville, c.spray, n), c.spray)),
                  applicable=spray, reason="" if spray else not_spray),
            Check("PhiR", "AppA:PhiR", self._symbolic(lambda: (c.dv_phi(), 3 * c.curvature)),
                  applicable=spray, reason="" if spray else not_spray),
            Check("PhiR-T", "AppA:PhiR-T", self._symbolic(lambda: (c.phi, c.phi_from_curvature())),
                  applicable=spray, reason="" if spray else not_spray),
            Check("PhiT", "AppA:PhiT",
                  self._symbolic(lambda: (
                      object_array([sympy.Add(*[c.phi[i, j] * L.u[j] for j in range(n)]) for i in range(n)]),
                      zeros(n),
                  )),
                  applicable=spray, reason="" if spray else not_spray),
        ]
        return checks

    # --- lifts suite ---

    def _lifts_checks(self) -> List[Check]:
        c, L = self.connection, self.lifts
        n = self.n
        riemannian = self.scenario.riemannian
        not_riemannian = "needs a declared metric"

        def scalar(expr) -> TensorField:
            return TensorField("TQ", "scalar", object_array(expr), n)

        def s_lifts(p: Point) -> Pair:
            S = L.S.at(p)
            X = self._basic_vector()
            Xc = self._values("Xc", lambda: complete_lift_vec(X).components, p)
            XV = np.concatenate([np.zeros(n), self._values("X", lambda: X.components, p)])
            lhs = np.concatenate([(S @ S).ravel(), S @ Xc, S @ XV])
            rhs = np.concatenate([np.zeros(4 * n * n), XV, np.zeros(2 * n)])
            return lhs, rhs

        def defJc(p: Point) -> Pair:
            X = self._basic_vector()
            JX = TensorField("Q", "vector", object_array([
                sympy.Add(*[L.J.components[i, k] * X.components[k] for k in range(n)]) for i in range(n)
            ]), n)
            Jc = L.Jc.at(p)
            Xc = self._values("Xc", lambda: complete_lift_vec(X).components, p)
            JXc = self._values("JXc", lambda: complete_lift_vec(JX).components, p)
            x = self._values("X", lambda: X.components, p)
            jx = self._values("JX", lambda: JX.components, p)
            XV = np.concatenate([np.zeros(n), x])
            JXV = np.concatenate([np.zeros(n), jx])
            return np.concatenate([Jc @ Xc, Jc @ XV]), np.concatenate([JXc, JXV])

        def Jcxh(p: Point) -> Pair:
            frame = L.frame_at(p)
            J = L.J.at(p)
            expected = np.block([[J, np.zeros((n, n))], [L.nabla_J.at(p), J]])
            return to_adapted(L.Jc.at(p), frame), expected

        def kahler(p: Point) -> Pair:
            return L.omega_L.at(p), kahler_lift(c.metric.at(p), L.frame_at(p))

        def omega_vh(p: Point) -> Pair:
            frame = L.frame_at(p)
            H, V = frame[:, :n], frame[:, n:]
            g = c.metric.at(p)
            lhs = np.concatenate([V.T @ L.omega_L.at(p) @ H, V.T @ L.omega_1.at(p) @ H])
            return lhs, np.concatenate([g, g @ L.J.at(p)])

        def r_symmetry(p: Point) -> Pair:
            R, omega = self._R(p), L.omega_L.at(p)
            return R.T @ omega, omega @ R

        def prop1(p: Point) -> Pair:
            J = L.J.at(p)
            expected = np.block([[J, np.zeros((n, n))], [L.U.at(p), L.J_bar.at(p)]])
            return to_adapted(self._R(p), L.frame_at(p)), expected

        def u_skew(p: Point) -> Pair:
            g, U = c.metric.at(p), L.U.at(p)
            return linalg_engine.solve(g, U.T @ g), -U

        def lieJc() -> Pair:
            X = self._basic_vector()
            lhs = lie_derivative_11(complete_lift_vec(X), L.Jc).components
            rhs = complete_lift_J(lie_derivative_11(X, L.J)).components
            return lhs, rhs

        def dSdJc() -> Pair:
            Lf = scalar(self.scenario.lagrangian)
            return d_A(L.S, d_A(L.Jc, Lf)).components, -d_A(L.Jc, d_A(L.S, Lf)).components

        def ddS() -> Pair:
            return ext_deriv(d_A(L.S, scalar(self.scenario.lagrangian))).components, L.omega_L.components

        checks = [
            Check("S-nilpotent-lifts", "Sec2:S-lifts", pointwise(s_lifts)),
            Check("defJc", "Eq:defJc", pointwise(defJc)),
            Check("Jcxh", "Eq:Jcxh", pointwise(Jcxh)),
            Check("Jc-HV", "Eq:Jc", pointwise(lambda p: (
                L.Jc.at(p),
                horizontal_lift_11(L.J.at(p), L.frame_at(p)) + vertical_lift_11(L.nabla_J.at(p), L.frame_at(p)),
            ))),
            Check("lieJc", "Eq:lieJc", self._symbolic(lieJc)),
            Check("JcS-square", "Lemma1:JcS-square", pointwise(lambda p: (L.JcS.at(p) @ L.JcS.at(p), 0.0))),
            Check("N-JcS", "Lemma1:N-JcS", pointwise(lambda p: (nijenhuis_at(L.JcS, p), 0.0))),
            Check("Jc-S-bracket", "Eq:JcS", pointwise(lambda p: (fn_bracket_at(L.Jc, L.S, p), 0.0))),
            Check("thetaL", "Eq:thetaL",
                  self._symbolic(lambda: (d_A(L.S, scalar(self.scenario.lagrangian)).components, L.theta.components))),
            Check("omegaL-ddS", "Sec2:omegaL", self._symbolic(ddS)),
            Check("omega1", "Eq:omega1",
                  self._symbolic(lambda: (
                      ext_deriv(d_A(L.JcS, scalar(self.scenario.lagrangian))).components, L.omega_1.components,
                  ))),
            Check("dSdJc", "Eq:dSdJc", self._symbolic(dSdJc)),
            Check("closed-omegaL", "Sec2:d-omegaL",
                  self._symbolic(lambda: (ext_deriv(L.omega_L).components, zeros(2 * n, 2 * n, 2 * n)))),
            Check("closed-omega1", "Sec2:d-omega1",
                  self._symbolic(lambda: (ext_deriv(L.omega_1).components, zeros(2 * n, 2 * n, 2 * n)))),
            Check("kahler", "Eq:gk2", pointwise(kahler)),
            Check("omega-vh", "Eq:omega1vh", pointwise(omega_vh)),
            Check("Rsymmetry", "Eq:Rsymmetry", pointwise(r_symmetry)),
            Check("Rcoord1", "Eq:Rcoord1", pointwise(lambda p: (L.closed_form_R.at(p), self._R(p)))),
            Check("Prop1-frame", "Prop1:coordR", pointwise(prop1)),
            Check("U-skew", "Prop1:U-skew", pointwise(u_skew)),
            Check("Leg-pullback", "Prop6:Leg-pullback", pointwise(lambda p: (L.legendre_R_at(p), self._R(p)))),
            Check("coordU", "Eq:coordU", self._symbolic(lambda: (L.U_general.components, L.U_coord.components)),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("newthetaL", "Eq:newthetaL",
                  self._symbolic(lambda: (L.theta_tau.components, object_array([
                      sympy.Add(*[c.metric.components[i, k] * L.u[k] for k in range(n)]) for i in range(n)
                  ]))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("nabla-thetaL", "Eq:dhLzero", self._symbolic(lambda: (c.nabla(L.theta_tau).components, zeros(n))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("dhL", "Eq:dhLzero-dh", self._symbolic(lambda: (c.dh(self.scenario.lagrangian), zeros(n))),
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
        ]

        # R = J^c exactly when J = J-bar and U = nabla J
        u_matches = self._holds("U=nablaJ", pointwise(lambda p: (L.U.at(p), L.nabla_J.at(p))))
        prop2_negative = not (self.J_symmetric and u_matches)
        checks.append(Check(
            "R-eq-Jc", "Prop2:R-Jc", pointwise(lambda p: (self._R(p), L.Jc.at(p))), negative=prop2_negative,
            reason="J differs from J-bar or U from nabla J" if prop2_negative else "",
        ))
        prop3_negative = not self.J_symmetric
        checks.append(Check(
            "RS-SR", "Prop3:RS-SR", pointwise(lambda p: (self._R(p) @ L.S.at(p), L.S.at(p) @ self._R(p))),
            negative=prop3_negative, reason="J is not g-symmetric" if prop3_negative else "",
        ))
        return checks

    # --- torsion suite ---

    def _torsion_checks(self) -> List[Check]:
        c, L = self.connection, self.lifts
        n = self.n
        riemannian = self.scenario.riemannian

        def torsion_from_dh() -> Pair:
            J = L.J.components
            dh_J = [c.dh_direction(L.J_tau, a).components for a in range(n)]

            def term(i, a, b):
                return sympy.Add(*[J[k, a] * dh_J[k][i, b] - J[i, k] * dh_J[a][k, b] for k in range(n)])

            lhs = zeros(n, n, n)
            for i, a, b in np.ndindex(n, n, n):
                lhs[i, a, b] = term(i, a, b) - term(i, b, a)
            return lhs, nijenhuis(L.J).components

        def rs_pairs(p: Point) -> Dict[str, np.ndarray]:
            F = fn_bracket_at(L.closed_form_R, L.S, p)
            frame = L.frame_at(p)
            H, V = frame[:, :n], frame[:, n:]

            def on(X, Y):
                raw = np.einsum("kcd,ca,db->kab", F, X, Y)
                return linalg_engine.solve(frame, raw.reshape(2 * n, n * n)).reshape(2 * n, n, n)

            return {"HH": on(H, H), "VV": on(V, V), "VH": on(V, H)}

        def rs_hh(p: Point) -> Pair:
            expected = np.concatenate([
                np.zeros((n, n, n)), self._values("dvU-dhJ", self._dvU_minus_dhJ, p)
            ])
            return rs_pairs(p)["HH"], expected

        def lie_gamma_blocks(p: Point) -> Pair:
            J, Jb, U = L.J.at(p), L.J_bar.at(p), L.U.at(p)
            phi = self._phi(p)
            nabla_U = self._nabla("U", lambda: L.U, p)
            nabla_Jb = self._nabla("J_bar", lambda: L.J_bar, p)
            expected = np.block([
                [L.nabla_J.at(p) - U, J - Jb],
                [nabla_U + phi @ J - Jb @ phi, U + nabla_Jb],
            ])
            return to_adapted(L.lie_gamma_R.at(p), L.frame_at(p)), expected

        def columns(pair: Pair, cols: slice) -> Pair:
            return pair[0][:, cols], pair[1][:, cols]

        checks = [
            Check("N_J", "Sec2:N-J", pointwise(lambda p: (nijenhuis_at(L.J, p), 0.0))),
            Check("N_J-jet", "Sec2:N-J-coords",
                  pointwise(lambda p: (self._values("N_J", lambda: nijenhuis(L.J).components, p), nijenhuis_at(L.J, p)))),
            Check("NJzero", "Lemma2:NJzero", self._symbolic(torsion_from_dh)),
            Check("FN-NR", "Sec4:FN-N", pointwise(lambda p: (
                self._values("FN-RR", lambda: fn_bracket(L.closed_form_R, L.closed_form_R).components, p),
                2.0 * nijenhuis_at(L.closed_form_R, p),
            ))),
            Check("RS-HH", "Prop4:RS-HH", pointwise(rs_hh)),
            Check("RS-VV", "Prop4:RS-VV", pointwise(lambda p: (rs_pairs(p)["VV"], 0.0))),
            Check("lgamR1", "Prop5:lgamR1", pointwise(lambda p: columns(lie_gamma_blocks(p), slice(n, None)))),
            Check("lgamR2", "Prop5:lgamR2", pointwise(lambda p: columns(lie_gamma_blocks(p), slice(None, n)))),
        ]

        nj_zero = self.N_J_vanishes
        checks += [
            Check("N_Jc", "Sec2:N-Jc", pointwise(lambda p: (nijenhuis_at(L.Jc, p), 0.0)),
                  negative=not nj_zero, reason="" if nj_zero else "N_J does not vanish"),
            Check("N_R", "Prop7:N-R", pointwise(lambda p: (nijenhuis_at(L.closed_form_R, p), 0.0)),
                  negative=not nj_zero, reason="" if nj_zero else "N_J does not vanish"),
        ]

        symmetric_riemannian = riemannian and self.J_symmetric
        reason = "" if symmetric_riemannian else "needs a declared metric and g-symmetric J"
        checks.append(Check("RS-VH", "Prop4:RS-VH", pointwise(lambda p: (rs_pairs(p)["VH"], 0.0)),
                            applicable=symmetric_riemannian, reason=reason))
        if symmetric_riemannian:
            dvU_dhJ = self._holds("dvU=dhJ", lambda p: linalg_engine.max_norm(
                self._values("dvU-dhJ", self._dvU_minus_dhJ, p)))
            checks.append(Check(
                "RS-zero", "Prop4:RS-zero",
                pointwise(lambda p: (fn_bracket_at(L.closed_form_R, L.S, p), 0.0)),
                negative=not dvU_dhJ, reason="" if dvU_dhJ else "d^vU differs from d^hJ",
            ))
        else:
            checks.append(Check("RS-zero", "Prop4:RS-zero", applicable=False, reason=reason))

        invariant = (
            self.J_symmetric
            and self._holds("U=0", pointwise(lambda p: (L.U.at(p), 0.0)))
            and self.J_parallel
            and self._holds("PhiJ=JPhi", pointwise(lambda p: (
                self._phi(p) @ L.J.at(p), L.J.at(p) @ self._phi(p))))
        )
        checks.append(Check(
            "invariance", "Prop5:LgammaR", pointwise(lambda p: (L.lie_gamma_R.at(p), 0.0)),
            negative=not invariant, reason="" if invariant else "J-bar, U, nabla J or [Phi, J] obstructs invariance",
        ))

        checks += [
            Check("dvU", "Prop7:dvU", self._symbolic(lambda: self.sck.dv_U()),
                  applicable=symmetric_riemannian, reason=reason),
            Check("dhU", "Prop7:dhU", self._symbolic(lambda: self.sck.dh_U()), tol=max(self.tol, 1e-7),
                  applicable=symmetric_riemannian, reason=reason),
        ]
        checks += self._gauging_checks()
        return checks

    def _gauging_checks(self) -> List[Check]:
        """Gauged invariance chain of an SCK tensor: propCST, gauging, gauging2."""
        L = self.lifts
        n = self.n
        gate = self._sck_gate()

        def xi_f(p: Point) -> np.ndarray:
            return np.concatenate([np.zeros(n), self.sck.xf.at(p)])

        def df_tq(p: Point) -> np.ndarray:
            return np.concatenate([self._values("df", lambda: self.sck.df, p), np.zeros(n)])

        def ddRE(p: Point) -> np.ndarray:
            return self._values("ddRE", lambda: ext_deriv(d_A(L.closed_form_R, TensorField(
                "TQ", "scalar", object_array(self.connection.energy), n))).components, p)

        def propCST(p: Point) -> Pair:
            A, omega = L.lie_gamma_R.at(p), L.omega_L.at(p)
            return A.T @ omega + omega @ A, -2.0 * ddRE(p)

        def gauging(p: Point) -> Pair:
            df, dE = df_tq(p), L.energy_form.at(p)
            return ddRE(p), np.outer(df, dE) - np.outer(dE, df)

        def gauging2(p: Point) -> Pair:
            gamma = L.spray_field.at(p)
            return L.lie_gamma_R.at(p), np.outer(gamma, df_tq(p)) - np.outer(xi_f(p), L.energy_form.at(p))

        return [
            Check("propCST", "Eq:propCST", pointwise(propCST), applicable=gate is None, reason=gate or ""),
            Check("gauging", "Eq:gauging", pointwise(gauging), applicable=gate is None, reason=gate or ""),
            Check("gauging2", "Eq:gauging2", pointwise(gauging2), applicable=gate is None, reason=gate or ""),
        ]

    # --- sck suite ---

    @cached_property
    def sck(self) -> SckEngine:
        return SckEngine(self.lifts)

    @cached_property
    def _sck_residual(self) -> IdentityResidual:
        return self._symbolic(lambda: self.sck.sck_coordinate())

    @cached_property
    def _sck_intrinsic_residual(self) -> IdentityResidual:
        return self._symbolic(lambda: self.sck.sck_intrinsic())

    def _sck_precondition(self) -> Optional[str]:
        if not self.scenario.riemannian:
            return "needs a declared metric"
        if not self.J_symmetric:
            return "J is not g-symmetric"
        return None

    def _sck_gate(self) -> Optional[str]:
        """None when J is an SCK tensor on the sample set, else the reason it is not."""
        reason = self._sck_precondition()
        if reason:
            return reason
        if not self._holds("scK", self._sck_residual):
            return "J is not a special conformal Killing tensor"
        return None

    @cached_property
    def _lifted_identities(self):
        return self.sck.lifted_identities()

    @cached_property
    def _cofactor_killing(self):
        return self.sck.cofactor_killing()

    @cached_property
    def _parallel_identities(self):
        return self.sck.parallel_identities()

    def _sck_checks(self) -> List[Check]:
        L = self.lifts
        n = self.n
        precondition = self._sck_precondition()
        ok = precondition is None
        checks = [
            Check("scKcoord2", "Thm1:scKcoord2", self._sck_residual if ok else None,
                  applicable=ok, reason=precondition or ""),
            Check("scKcoord1", "Thm1:scKcoord1", self._symbolic(lambda: self.sck.sck_mixed()),
                  applicable=ok, reason=precondition or ""),
            Check("scK", "Thm1:scK", self._sck_intrinsic_residual if ok else None,
                  applicable=ok, reason=precondition or ""),
            Check("verdict-consistency", "Thm1:scK-scKcoord2", self._verdicts_agree, tol=0.0,
                  applicable=ok, reason=precondition or ""),
        ]

        gate = self._sck_gate()
        on_sck = gate is None

        def scKR(p: Point) -> Pair:
            return self._R(p) - L.Jc.at(p), self._values("scKR", self.sck.sck_R_offset, p)

        def xi_f(p: Point) -> Pair:
            xi = np.concatenate([np.zeros(n), self.sck.xf.at(p)])
            df = self._values("df", lambda: self.sck.df, p)
            return L.omega_L.at(p).T @ xi, np.concatenate([-df, np.zeros(n)])

        for key in ("scKU", "PhiJ", "dhJ", "Ubis", "PhiJ2"):
            checks.append(Check(key, f"Thm1:{key}", self._symbolic(lambda key=key: self._lifted_identities[key]),
                                applicable=on_sck, reason=gate or ""))
        checks += [
            Check("scKR", "Thm1:scKR", pointwise(scKR), applicable=on_sck, reason=gate or ""),
            Check("xi-f", "Sec4:xi-f", pointwise(xi_f), applicable=on_sck, reason=gate or ""),
            Check("trace-law", "Thm2:f-trJ", self._symbolic(lambda: self.sck.trace_law()),
                  applicable=on_sck, reason=gate or ""),
            Check("nabla-trace-law", "Thm2:nabla-trJ", self._symbolic(lambda: self.sck.nabla_trace_law()),
                  applicable=on_sck, reason=gate or ""),
        ]

        killing_gate = gate
        if on_sck:
            det_J = self._symbolic(lambda: (object_array(self.sck.det_J), object_array(0)))
            singular = sum(1 for p in self.samples if abs(det_J.evaluator(p)[0]) <= 1e-9)
            if singular:
                killing_gate = f"J is singular at {singular} sample points"
        for key in ("killing2", "killing1", "dJdetJ", "aux", "dhscK", "dJ-detJ"):
            checks.append(Check(key, f"Thm2:{key}", self._symbolic(lambda key=key: self._cofactor_killing[key]),
                                applicable=killing_gate is None, reason=killing_gate or ""))

        parallel_gate = precondition
        if parallel_gate is None and not self.J_parallel:
            parallel_gate = "J is not parallel"
        for key in ("PhiJ-commute", "ricci-commute", "J-riemann", "aux2", "aux3", "aux5", "aux6"):
            checks.append(Check(key, f"AppA:{key}", self._symbolic(lambda key=key: self._parallel_identities[key]),
                                applicable=parallel_gate is None, reason=parallel_gate or ""))
        # declared negative on a curved base, where max |Phi| at the probe must exceed PHI_WITNESS
        checks.append(Check(
            "Phi-flat", "AppA:Phi-nonvacuous",
            lambda p: linalg_engine.max_norm(self._phi(p)),
            threshold=PHI_WITNESS, applicable=parallel_gate is None, reason=parallel_gate or "",
        ))
        return checks

    def _verdicts_agree(self, point: Point) -> float:
        """0 when the coordinate and intrinsic SCK conditions give the same verdict at `point`, else 1."""
        coordinate = self._sck_residual(point) <= self.tol
        intrinsic = self._sck_intrinsic_residual(point) <= self.tol
        if coordinate != intrinsic:
            self.logger.warning(f"[{self.name}] Coordinate and intrinsic SCK conditions disagree at {point.to_dict()}")
            return 1.0
        return 0.0

    # --- eigen suite ---

    def _eigen_entry(self, point: Point) -> EigenEntry:
        if point not in self._eigen:
            self._eigen[point] = point_eigen(self.lifts, point)
        return self._eigen[point]

    def _separability_at(self, point: Point) -> Optional[SeparabilityReport]:
        if point not in self._separability:
            self._separability[point] = separability_diag(self.lifts, [point])
        report = self._separability[point]
        return None if report.skipped else report

    def _eigen_checks(self) -> List[Check]:
        L = self.lifts
        riemannian = self.scenario.riemannian

        def from_entry(fn: Callable[[EigenEntry], float]) -> Callable[[Point], Optional[float]]:
            def residual(p: Point) -> Optional[float]:
                entry = self._eigen_entry(p)
                return None if entry.skipped else fn(entry)
            return residual

        def from_separability(fn: Callable[[SeparabilityReport], float]) -> Callable[[Point], Optional[float]]:
            def residual(p: Point) -> Optional[float]:
                report = self._separability_at(p)
                return None if report is None else fn(report)
            return residual

        sep_tol = config.SEPARABILITY_TOLERANCE
        not_riemannian = "needs a declared metric"
        orthogonal = riemannian and self.J_symmetric
        return [
            Check("Prop8-eigenvectors", "Prop8:eigenvectors", from_entry(lambda e: e.max_residual)),
            Check("Prop8-completeness", "Prop8:completeness",
                  from_entry(lambda e: max(0.0, config.COMPLETENESS_FLOOR - e.completeness)), tol=0.0),
            Check("spectra", "Lemma4:spectra", from_entry(lambda e: e.spectrum_gap), tol=max(self.tol, 1e-9)),
            Check("eigenform", "Lemma4:eigenform", lambda p: self._eigen_entry(p).eigenform_residual),
            Check("haantjes", "AppB:haantjes", pointwise(lambda p: (haantjes_at(L.J, p), 0.0))),
            Check("separability", "AppB:separability", from_separability(lambda r: r.derivative), tol=sep_tol,
                  applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("separability-segment", "AppB:separability-segment", from_separability(lambda r: r.segment),
                  tol=sep_tol, applicable=riemannian, reason="" if riemannian else not_riemannian),
            Check("g-orthogonal", "AppB:g-orthogonal", from_separability(lambda r: r.orthogonality),
                  applicable=orthogonal, reason="" if orthogonal else "needs a declared metric and g-symmetric J"),
        ]
