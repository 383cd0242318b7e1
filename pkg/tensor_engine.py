"""
tensor_engine.py

Coordinate tensor calculus on a chart of dimension m (m = n on Q, m = 2n on TQ).
- Exterior derivative of 0-, 1- and 2-forms, interior products and wedge.
- Lie bracket of vector fields and Lie derivative of (1,1) tensors.
- Nijenhuis torsion, Froelicher-Nijenhuis bracket and Haantjes tensor, both
  symbolically and pointwise from 1-jets of the components.
- The derivations d_A = i_A d - d i_A for a (1,1) tensor A.
"""

import logging
from typing import Sequence, Union

import numpy as np
import sympy

from expr_engine import Point, all_symbols, chart_symbols
from scenario_manager import TensorField, object_array, zeros

logger = logging.getLogger(__name__)

FORM_SIGNATURES = {0: "scalar", 1: "1-form", 2: "2-form", 3: "3-form"}
FORM_DEGREES = {sig: p for p, sig in FORM_SIGNATURES.items()}

ArrayLike = Union[np.ndarray, Sequence]


def _coordinates(m: int, n: int):
    if m == n:
        return chart_symbols(n)[0]
    if m == 2 * n:
        return all_symbols(n)
    raise ValueError(f"No chart of dimension {m} over a base of dimension {n}")


def _check_same_chart(*fields: TensorField):
    spaces = {(f.space, f.n) for f in fields}
    if len(spaces) != 1:
        raise ValueError(f"Tensors live on different charts: {sorted(spaces)}")


def _components(value: Union[TensorField, ArrayLike]) -> np.ndarray:
    return value.components if isinstance(value, TensorField) else np.asarray(value, dtype=object)


# --- Vector fields ---

def lie_bracket(X: Union[TensorField, ArrayLike], Y: Union[TensorField, ArrayLike], n: int) -> np.ndarray:
    """[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a."""
    x = _components(X)
    y = _components(Y)
    coords = _coordinates(len(x), n)
    return object_array([
        sympy.Add(*[x[b] * sympy.diff(y[a], coords[b]) - y[b] * sympy.diff(x[a], coords[b]) for b in range(len(coords))])
        for a in range(len(coords))
    ])


def lie_derivative_11(V: TensorField, A: TensorField) -> TensorField:
    """(L_V A)^i_j = V^m d_m A^i_j - A^m_j d_m V^i + A^i_m d_j V^m."""
    _check_same_chart(V, A)
    coords = A.coordinates
    m = A.index_dim
    v, a = V.components, A.components
    dv = [[sympy.diff(v[i], x) for x in coords] for i in range(m)]
    out = zeros(m, m)
    for i, j in np.ndindex(m, m):
        out[i, j] = sympy.Add(*[
            v[k] * sympy.diff(a[i, j], coords[k]) - a[k, j] * dv[i][k] + a[i, k] * dv[k][j]
            for k in range(m)
        ])
    return TensorField(A.space, "(1,1)", out, A.n)


# --- Forms ---

def ext_deriv(form: TensorField) -> TensorField:
    """Exterior derivative of a p-form, p in {0, 1, 2}; components are stored fully antisymmetric."""
    p = FORM_DEGREES.get(form.signature)
    if p is None or p > 2:
        raise ValueError(f"ext_deriv takes a 0-, 1- or 2-form, got {form.signature}")
    coords = form.coordinates
    m = form.index_dim
    c = form.components
    if p == 0:
        out = object_array([sympy.diff(c[()], x) for x in coords])
    elif p == 1:
        out = zeros(m, m)
        for a, b in np.ndindex(m, m):
            if a < b:
                value = sympy.diff(c[b], coords[a]) - sympy.diff(c[a], coords[b])
                out[a, b] = value
                out[b, a] = -value
    else:
        out = zeros(m, m, m)
        for a, b, d in np.ndindex(m, m, m):
            if a < b < d:
                value = (
                    sympy.diff(c[b, d], coords[a])
                    + sympy.diff(c[d, a], coords[b])
                    + sympy.diff(c[a, b], coords[d])
                )
                for (i, j, k), sign in _permutations(a, b, d):
                    out[i, j, k] = sign * value
    return TensorField(form.space, FORM_SIGNATURES[p + 1], out, form.n)


def _permutations(a: int, b: int, c: int):
    yield (a, b, c), 1
    yield (b, c, a), 1
    yield (c, a, b), 1
    yield (b, a, c), -1
    yield (a, c, b), -1
    yield (c, b, a), -1


def wedge(alpha: TensorField, beta: TensorField) -> TensorField:
    """(alpha ^ beta)_ab = alpha_a beta_b - alpha_b beta_a for 1-forms."""
    _check_same_chart(alpha, beta)
    m = alpha.index_dim
    a, b = alpha.components, beta.components
    out = zeros(m, m)
    for i, j in np.ndindex(m, m):
        out[i, j] = a[i] * b[j] - a[j] * b[i]
    return TensorField(alpha.space, "2-form", out, alpha.n)


def interior(vector: TensorField, form: TensorField) -> TensorField:
    """Insertion of a vector field into the first slot of a 1- or 2-form."""
    _check_same_chart(vector, form)
    p = FORM_DEGREES[form.signature]
    m = form.index_dim
    v, c = vector.components, form.components
    if p == 1:
        return TensorField(form.space, "scalar", object_array(sympy.Add(*[v[a] * c[a] for a in range(m)])), form.n)
    if p == 2:
        out = object_array([sympy.Add(*[v[a] * c[a, b] for a in range(m)]) for b in range(m)])
        return TensorField(form.space, "1-form", out, form.n)
    raise ValueError(f"interior takes a 1- or 2-form, got {form.signature}")


def interior_11(A: TensorField, form: TensorField) -> TensorField:
    """(i_A w)(X_1..X_p) = sum_s w(X_1, .., A X_s, .., X_p); zero on functions."""
    _check_same_chart(A, form)
    p = FORM_DEGREES[form.signature]
    c = form.components
    if p == 0:
        return TensorField(form.space, "scalar", object_array(sympy.S.Zero), form.n)
    m = form.index_dim
    a = A.components
    out = np.empty(c.shape, dtype=object)
    for index in np.ndindex(c.shape):
        terms = []
        for slot in range(p):
            for k in range(m):
                if a[k, index[slot]] != 0:
                    moved = index[:slot] + (k,) + index[slot + 1:]
                    terms.append(c[moved] * a[k, index[slot]])
        out[index] = sympy.Add(*terms)
    return TensorField(form.space, form.signature, out, form.n)


def d_A(A: TensorField, form: TensorField) -> TensorField:
    """The derivation d_A = i_A d - d i_A on 0-, 1- and 2-forms."""
    p = FORM_DEGREES[form.signature]
    first = interior_11(A, ext_deriv(form))
    if p == 0:
        return first
    second = ext_deriv(interior_11(A, form))
    return TensorField(form.space, first.signature, first.components - second.components, form.n)


# --- Torsion-type tensors (symbolic) ---

def nijenhuis(A: TensorField) -> TensorField:
    """N^k_ij = A^m_i d_m A^k_j - A^m_j d_m A^k_i - A^k_m (d_i A^m_j - d_j A^m_i)."""
    return _torsion(A, A, scale=sympy.Rational(1, 2))


def fn_bracket(A: TensorField, B: TensorField) -> TensorField:
    """Froelicher-Nijenhuis bracket of two (1,1) tensors on coordinate fields."""
    return _torsion(A, B, scale=sympy.S.One)


def _torsion(A: TensorField, B: TensorField, scale) -> TensorField:
    _check_same_chart(A, B)
    coords = A.coordinates
    m = A.index_dim
    a, b = A.components, B.components
    da = [[[sympy.diff(a[i, j], x) for j in range(m)] for i in range(m)] for x in coords]
    db = [[[sympy.diff(b[i, j], x) for j in range(m)] for i in range(m)] for x in coords]
    out = zeros(m, m, m)
    for k, i, j in np.ndindex(m, m, m):
        if i >= j:
            continue
        value = sympy.Add(*[
            a[l, i] * db[l][k][j] - b[l, j] * da[l][k][i]
            + b[l, i] * da[l][k][j] - a[l, j] * db[l][k][i]
            + a[k, l] * (db[j][l][i] - db[i][l][j])
            + b[k, l] * (da[j][l][i] - da[i][l][j])
            for l in range(m)
        ])
        out[k, i, j] = scale * value
        out[k, j, i] = -scale * value
    return TensorField(A.space, "(1,2)", out, A.n)


def haantjes(A: TensorField) -> TensorField:
    """H_A(X,Y) = A^2 N(X,Y) + N(AX,AY) - A N(AX,Y) - A N(X,AY)."""
    m = A.index_dim
    a = A.components
    N = nijenhuis(A).components
    out = zeros(m, m, m)
    for k, i, j in np.ndindex(m, m, m):
        if i >= j:
            continue
        terms = []
        for l in range(m):
            a2 = sympy.Add(*[a[k, s] * a[s, l] for s in range(m)])
            terms.append(a2 * N[l, i, j])
            for s in range(m):
                terms.append(N[k, l, s] * a[l, i] * a[s, j])
                terms.append(-a[k, l] * N[l, s, j] * a[s, i])
                terms.append(-a[k, l] * N[l, i, s] * a[s, j])
        value = sympy.Add(*terms)
        out[k, i, j] = value
        out[k, j, i] = -value
    return TensorField(A.space, "(1,2)", out, A.n)


# --- Torsion-type tensors (pointwise) ---

def nijenhuis_from_jet(a: np.ndarray, da: np.ndarray) -> np.ndarray:
    """Pointwise torsion from values a[k,j] and derivatives da[m,k,j] = d_m a^k_j."""
    return 0.5 * fn_bracket_from_jets(a, da, a, da)


def fn_bracket_from_jets(a: np.ndarray, da: np.ndarray, b: np.ndarray, db: np.ndarray) -> np.ndarray:
    out = (
        np.einsum("li,lkj->kij", a, db) - np.einsum("lj,lki->kij", b, da)
        + np.einsum("li,lkj->kij", b, da) - np.einsum("lj,lki->kij", a, db)
        + np.einsum("kl,jli->kij", a, db) - np.einsum("kl,ilj->kij", a, db)
        + np.einsum("kl,jli->kij", b, da) - np.einsum("kl,ilj->kij", b, da)
    )
    return out


def haantjes_from_jet(a: np.ndarray, da: np.ndarray) -> np.ndarray:
    N = nijenhuis_from_jet(a, da)
    return (
        np.einsum("kl,lij->kij", a @ a, N)
        + np.einsum("kls,li,sj->kij", N, a, a)
        - np.einsum("kl,lsj,si->kij", a, N, a)
        - np.einsum("kl,lis,sj->kij", a, N, a)
    )


def nijenhuis_at(A: TensorField, point: Point) -> np.ndarray:
    return nijenhuis_from_jet(A.at(point), A.gradient(point))


def fn_bracket_at(A: TensorField, B: TensorField, point: Point) -> np.ndarray:
    _check_same_chart(A, B)
    return fn_bracket_from_jets(A.at(point), A.gradient(point), B.at(point), B.gradient(point))


def haantjes_at(A: TensorField, point: Point) -> np.ndarray:
    return haantjes_from_jet(A.at(point), A.gradient(point))
