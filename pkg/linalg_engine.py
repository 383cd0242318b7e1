"""
linalg_engine.py

Dense linear algebra for the small matrices of the toolkit (at most 8x8).
- Solve, invert and determinant with a conditioning guard.
- Real eigendecomposition of n x n matrices (n <= 4): closed form for 2x2, Newton polishing
  on the characteristic polynomial, eigenvectors from the SVD null space.
"""

import cmath
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

logger = logging.getLogger(__name__)

MAX_DIM = 8
MAX_EIGEN_DIM = 4
SINGULAR_THRESHOLD = 1e-12
TIE_TOLERANCE = 1e-9
COMPLEX_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-8
EPS = float(np.finfo(float).eps)


class SingularMatrixError(ArithmeticError):
    """Raised when a solve meets a (numerically) singular matrix."""

    def __init__(self, message: str, condition: float = float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition indicator {condition:.3e})")


class ComplexEigenvalueError(ArithmeticError):
    pass


class DefectiveMatrixError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    distinct: bool = True


def as_matrix(a, square: bool = False) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2 or max(m.shape) > MAX_DIM:
        raise ValueError(f"Expected a matrix of size at most {MAX_DIM}, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {m.shape}")
    return m


def max_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def det(a) -> float:
    return float(np.linalg.det(as_matrix(a, square=True)))


def solve(a, b) -> np.ndarray:
    """Solves AX = B by LU with partial pivoting; B may be a vector or a matrix."""
    m = as_matrix(a, square=True)
    rhs = np.asarray(b, dtype=float)
    scale = max_norm(m)
    if scale == 0.0:
        raise SingularMatrixError("Zero matrix", condition=float("inf"))
    if abs(np.linalg.det(m / scale)) <= SINGULAR_THRESHOLD:
        raise SingularMatrixError("Matrix is singular to working precision", condition=float(np.linalg.cond(m)))
    try:
        x = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"LU factorization failed: {e}") from e
    return x


def inverse(a) -> np.ndarray:
    m = as_matrix(a, square=True)
    return solve(m, np.eye(m.shape[0]))


def characteristic_polynomial(a) -> np.ndarray:
    """Coefficients of det(tI - A), highest degree first (Faddeev-LeVerrier)."""
    m = as_matrix(a, square=True)
    n = m.shape[0]
    coeffs = [1.0]
    work = np.zeros_like(m)
    for k in range(1, n + 1):
        work = m @ work + coeffs[-1] * np.eye(n)
        coeffs.append(-float(np.trace(m @ work)) / k)
    return np.array(coeffs)


def _discriminant(tr: float, dt: float) -> float:
    """tr^2 - 4 det, with negative values at rounding level taken as a double root."""
    disc = tr * tr - 4.0 * dt
    if disc < 0.0 and -disc <= 8.0 * EPS * (tr * tr + 4.0 * abs(dt)):
        return 0.0
    return disc


def _roots_2x2(m: np.ndarray) -> List[complex]:
    scale = max_norm(m)
    if scale == 0.0:
        return [0j, 0j]
    b = m / scale
    tr = b[0, 0] + b[1, 1]
    dt = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    s = cmath.sqrt(_discriminant(tr, dt))
    w0 = 0.5 * (tr + s) if tr >= 0.0 else 0.5 * (tr - s)
    w1 = dt / w0 if w0 != 0 else tr - w0
    return [w0 * scale, w1 * scale]


def _polish(coeffs: np.ndarray, root: float, iterations: int = 3) -> float:
    derivative = np.polyder(coeffs)
    for _ in range(iterations):
        slope = np.polyval(derivative, root)
        if abs(slope) < 1e-12:
            break
        step = np.polyval(coeffs, root) / slope
        root -= step
        if abs(step) <= 1e-16 * (1.0 + abs(root)):
            break
    return float(root)


def eigenvalues_real(a) -> np.ndarray:
    """Real eigenvalues sorted ascending; raises ComplexEigenvalueError otherwise."""
    m = as_matrix(a, square=True)
    n = m.shape[0]
    if n > MAX_EIGEN_DIM:
        raise ValueError(f"Eigendecomposition supports n <= {MAX_EIGEN_DIM}, got {n}")
    scale = 1.0 + max_norm(m)
    coeffs = characteristic_polynomial(m)
    if n == 1:
        raw = [complex(m[0, 0])]
    elif n == 2:
        raw = _roots_2x2(m)
    else:
        raw = [complex(r) for r in np.linalg.eigvals(m)]
    values = []
    for r in raw:
        if abs(r.imag) > COMPLEX_TOLERANCE * scale:
            raise ComplexEigenvalueError(f"Complex eigenvalue {r:.6g} (imaginary part above tolerance)")
        values.append(r.real)
    # polishing a multiple root on the polynomial is ill-posed
    polished = []
    for v in values:
        close = sum(1 for w in values if abs(w - v) <= 1e-6 * scale)
        polished.append(_polish(coeffs, v) if close == 1 else v)
    return np.sort(np.array(polished))


def _normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    for x in v:
        if abs(x) > 1e-12:
            return v if x > 0 else -v
    return v


def eig_real(a) -> List[EigenPair]:
    """
    Real eigenpairs sorted ascending by eigenvalue.
    Eigenvectors have unit length with first nonzero component positive;
    eigenvalues closer than TIE_TOLERANCE are flagged as non-distinct.
    """
    m = as_matrix(a, square=True)
    n = m.shape[0]
    values = eigenvalues_real(m)
    scale = 1.0 + max_norm(m)

    groups: List[List[float]] = []
    for v in values:
        if groups and abs(v - groups[-1][-1]) <= TIE_TOLERANCE * scale:
            groups[-1].append(v)
        else:
            groups.append([v])

    pairs: List[EigenPair] = []
    for group in groups:
        value = float(np.mean(group))
        multiplicity = len(group)
        _, singular, vt = np.linalg.svd(m - value * np.eye(n))
        null_space = vt[n - multiplicity:]
        if np.any(singular[n - multiplicity:] > RESIDUAL_TOLERANCE * scale):
            raise DefectiveMatrixError(
                f"Eigenvalue {value:.6g} of multiplicity {multiplicity} lacks a full eigenbasis"
            )
        for row in null_space:
            vector = _normalize(row)
            residual = max_norm(m @ vector - value * vector)
            if residual > RESIDUAL_TOLERANCE * scale:
                raise DefectiveMatrixError(f"Eigenvector residual {residual:.3e} for eigenvalue {value:.6g}")
            pairs.append(EigenPair(value=value, vector=vector, distinct=multiplicity == 1))
    return pairs
