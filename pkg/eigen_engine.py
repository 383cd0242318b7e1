"""
eigen_engine.py

Pointwise eigenstructure of J, J-bar and R, and Darboux-Nijenhuis diagnostics.
- Eigenvectors of R assembled as Z^V and X^H + Y^V from those of J and J-bar.
- Eigenform property of X contracted with g.
- Separability: each eigenvalue of J is constant along the other eigendirections.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

import config
import linalg_engine
from expr_engine import Point, scaled_residual
from lift_engine import LiftEngine
from tensor_engine import haantjes_at

logger = logging.getLogger(__name__)


class EigenMatchingError(RuntimeError):
    """Perturbed eigenvalues cannot be matched unambiguously to the unperturbed ones."""


@dataclass
class EigenEntry:
    point: Point
    values: np.ndarray = None
    X: np.ndarray = None
    Z: np.ndarray = None
    Y: np.ndarray = None
    residuals: List[float] = field(default_factory=list)
    completeness: float = 0.0
    spectrum_gap: float = 0.0
    eigenform_residual: Optional[float] = None
    skipped: Optional[str] = None

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


@dataclass
class SeparabilityReport:
    derivative: float = 0.0
    segment: float = 0.0
    haantjes: float = 0.0
    orthogonality: float = 0.0
    derivative_point: Optional[Point] = None
    segment_point: Optional[Point] = None
    haantjes_point: Optional[Point] = None
    orthogonality_point: Optional[Point] = None
    skipped: int = 0


def _distinct_nonzero(values: np.ndarray, scale: float) -> Optional[str]:
    gaps = np.diff(np.sort(values))
    if gaps.size and np.min(gaps) <= linalg_engine.TIE_TOLERANCE * scale:
        return "non-distinct eigenvalues"
    if np.min(np.abs(values)) <= config.ZERO_EIGENVALUE * scale:
        return "zero eigenvalue"
    return None


def eigenform_check(J: np.ndarray, g: np.ndarray, J_bar: np.ndarray) -> float:
    """max_i |(g X_i)^T (J-bar - lambda_i I)| over the eigenpairs of J."""
    worst = 0.0
    n = J.shape[0]
    for pair in linalg_engine.eig_real(J):
        form = g @ pair.vector
        worst = max(worst, linalg_engine.max_norm(form @ (J_bar - pair.value * np.eye(n))))
    return worst


def point_eigen(lifts: LiftEngine, point: Point) -> EigenEntry:
    """
    Builds the 2n eigenvectors of R at `point`:
    Z_i^V with J-bar Z_i = lambda_i Z_i, and X_i^H + Y_i^V with J X_i = lambda_i X_i and
    (J-bar - lambda_i) Y_i = -U X_i, Y_i g-orthogonal to Z_i.
    The eigenform residual needs only a real eigenbasis of J and is kept for repeated
    or zero eigenvalues.
    """
    n = lifts.n
    entry = EigenEntry(point=point)
    J = lifts.J.at(point)
    J_bar = lifts.J_bar.at(point)
    U = lifts.U.at(point)
    g = lifts.connection.metric.at(point)
    conn = lifts.conn_at(point)
    R = lifts.R_at(point)

    try:
        pairs = linalg_engine.eig_real(J)
        bar_pairs = linalg_engine.eig_real(J_bar)
    except (linalg_engine.ComplexEigenvalueError, linalg_engine.DefectiveMatrixError) as e:
        entry.skipped = str(e)
        logger.warning(f"[{lifts.scenario.name}] Skipping eigen point {point.to_dict()}: {e}")
        return entry
    values = np.array([p.value for p in pairs])
    entry.values = values
    entry.eigenform_residual = eigenform_check(J, g, J_bar)
    reason = _distinct_nonzero(values, 1.0 + linalg_engine.max_norm(J))
    if reason:
        entry.skipped = reason
        logger.warning(f"[{lifts.scenario.name}] Skipping eigen point {point.to_dict()}: {reason}")
        return entry

    entry.spectrum_gap = float(np.max(np.abs(values - np.array([p.value for p in bar_pairs]))))

    X = np.array([p.vector for p in pairs]).T
    Z = np.array([p.vector for p in bar_pairs]).T
    Y = np.zeros((n, n))
    vectors = []
    for i, pair in enumerate(pairs):
        lam = pair.value
        z = Z[:, i]
        gauged = J_bar - lam * np.eye(n) + np.outer(z, g @ z)
        Y[:, i] = linalg_engine.solve(gauged, -U @ X[:, i])

        vertical = np.concatenate([np.zeros(n), z])
        mixed = np.concatenate([X[:, i], -conn @ X[:, i] + Y[:, i]])
        for v in (vertical, mixed):
            entry.residuals.append(scaled_residual(R @ v, lam * v))
            vectors.append(v / np.linalg.norm(v))

    entry.X, entry.Z, entry.Y = X, Z, Y
    entry.completeness = abs(float(np.linalg.det(np.array(vectors).T)))
    return entry


def _matched_value(J: np.ndarray, target: float, step: float) -> float:
    values = linalg_engine.eigenvalues_real(J)
    distances = np.abs(values - target)
    order = np.argsort(distances)
    if len(values) > 1 and distances[order[1]] <= 10.0 * step * (1.0 + abs(target)):
        raise EigenMatchingError(f"Eigenvalue {target:.6g} is within 10 steps of another eigenvalue")
    return float(values[order[0]])


def separability_diag(lifts: LiftEngine, points) -> SeparabilityReport:
    """
    (a) derivative of lambda_i along X_j (i != j) by matched central differences,
    (b) variation of lambda_i along a short segment in direction X_j,
    (c) Haantjes tensor of J,
    (d) g(X_i, X_j) for i != j, normalised.
    """
    report = SeparabilityReport()
    J_field = lifts.J
    g_field = lifts.connection.metric
    h = config.EIGEN_STEP
    ts = np.linspace(-config.EIGEN_SEGMENT, config.EIGEN_SEGMENT, config.EIGEN_SEGMENT_STEPS + 1)

    def J_at(q: np.ndarray, point: Point) -> np.ndarray:
        return J_field.at(Point(tuple(q), point.u))

    for point in points:
        haantjes = linalg_engine.max_norm(haantjes_at(J_field, point))
        if haantjes >= report.haantjes:
            report.haantjes, report.haantjes_point = haantjes, point

        try:
            pairs = linalg_engine.eig_real(J_field.at(point))
        except (linalg_engine.ComplexEigenvalueError, linalg_engine.DefectiveMatrixError) as e:
            report.skipped += 1
            logger.warning(f"[{lifts.scenario.name}] No real eigenbasis at {point.to_dict()}: {e}")
            continue
        if any(not p.distinct for p in pairs):
            report.skipped += 1
            logger.warning(f"[{lifts.scenario.name}] Non-distinct eigenvalues at {point.to_dict()}, skipped")
            continue
        q0 = np.array(point.q)
        g = g_field.at(point)
        for i, pi in enumerate(pairs):
            for j, pj in enumerate(pairs):
                if i == j:
                    continue
                direction = pj.vector / np.linalg.norm(pj.vector)
                upper = _matched_value(J_at(q0 + h * direction, point), pi.value, h)
                lower = _matched_value(J_at(q0 - h * direction, point), pi.value, h)
                derivative = abs(upper - lower) / (2.0 * h)
                if derivative >= report.derivative:
                    report.derivative, report.derivative_point = derivative, point

                along = [_matched_value(J_at(q0 + t * direction, point), pi.value, config.EIGEN_SEGMENT) for t in ts]
                variation = float(np.max(along) - np.min(along))
                if variation >= report.segment:
                    report.segment, report.segment_point = variation, point

                if i < j:
                    xi, xj = pi.vector, pj.vector
                    cosine = abs(xi @ g @ xj) / np.sqrt(abs(xi @ g @ xi) * abs(xj @ g @ xj))
                    if cosine >= report.orthogonality:
                        report.orthogonality, report.orthogonality_point = float(cosine), point
    return report
