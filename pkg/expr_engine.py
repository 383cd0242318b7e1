"""
expr_engine.py

Scalar expressions over the chart coordinates (q1..qn, u1..un).
- Parses the small infix grammar used by scenario files into sympy trees.
- Differentiates exactly and evaluates in double precision.
- Prints trees back into the same grammar.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable, Sequence, Tuple, Union

import numpy as np
import pyparsing as pp
import sympy

logger = logging.getLogger(__name__)

Expr = sympy.Expr

FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
}

_IDENT_RE = re.compile(r"^([qu])([0-9]+)$")


class ExprParseError(ValueError):
    """Raised for malformed expression text. `offset` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int = None, text: str = None):
        self.offset = offset
        self.text = text
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class DomainError(ArithmeticError):
    """Raised when an expression cannot be evaluated to a real number at a point."""

    def __init__(self, message: str, subexpression: str = None, point: "Point" = None):
        self.subexpression = subexpression
        self.point = point
        super().__init__(message)


@dataclass(frozen=True)
class Point:
    q: Tuple[float, ...]
    u: Tuple[float, ...]

    def __post_init__(self):
        if len(self.q) != len(self.u):
            raise ValueError(f"Point has {len(self.q)} base and {len(self.u)} fiber coordinates.")

    @property
    def n(self) -> int:
        return len(self.q)

    def args(self) -> Tuple[float, ...]:
        return tuple(self.q) + tuple(self.u)

    def to_dict(self) -> dict:
        return {"q": list(self.q), "u": list(self.u)}


@lru_cache(maxsize=None)
def chart_symbols(n: int) -> Tuple[Tuple[sympy.Symbol, ...], Tuple[sympy.Symbol, ...]]:
    """The base symbols q1..qn and fiber symbols u1..un. Shared by every module."""
    q = tuple(sympy.Symbol(f"q{i + 1}") for i in range(n))
    u = tuple(sympy.Symbol(f"u{i + 1}") for i in range(n))
    return q, u


def all_symbols(n: int) -> Tuple[sympy.Symbol, ...]:
    q, u = chart_symbols(n)
    return q + u


# --- Parser ---

def _fold_binary(tokens):
    items = tokens[0] if isinstance(tokens[0], pp.ParseResults) else tokens
    result = items[0]
    for op, rhs in zip(items[1::2], items[2::2]):
        if op == "+":
            result = result + rhs
        elif op == "-":
            result = result - rhs
        elif op == "*":
            result = result * rhs
        else:
            result = result / rhs
    return result


def _number(tokens):
    return sympy.Rational(Fraction(tokens[0]))


def _exponent(tokens):
    sign = -1 if tokens[0] == "-" else 1
    values = [t for t in tokens if t not in ("-", "/")]
    value = sympy.Rational(Fraction(values[0]))
    if len(values) == 2:
        value = value / sympy.Rational(Fraction(values[1]))
    return sign * value


@lru_cache(maxsize=None)
def _grammar(n: int) -> pp.ParserElement:
    q, u = chart_symbols(n)

    def identifier(s, loc, tokens):
        name = tokens[0]
        offset = len(s[:loc].encode("utf-8"))
        match = _IDENT_RE.match(name)
        if not match:
            raise ExprParseError(f"Unknown identifier '{name}'", offset=offset, text=s)
        index = int(match.group(2))
        if not 1 <= index <= n:
            raise ExprParseError(
                f"Index out of range in '{name}' (dimension is {n})", offset=offset, text=s
            )
        return (q if match.group(1) == "q" else u)[index - 1]

    def call(tokens):
        return FUNCTIONS[tokens[0]](tokens[1])

    expr = pp.Forward()
    lpar = pp.Suppress("(")
    rpar = pp.Suppress(")")

    number = pp.Regex(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")
    number.set_parse_action(_number)

    ident = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    ident.set_parse_action(identifier)

    func_name = pp.Regex(r"(?:sin|cos|tan|exp|log|sqrt)(?=\s*\()")
    func_call = func_name + lpar + expr + rpar
    func_call.set_parse_action(call)

    raw_number = pp.Regex(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")
    signed = pp.Optional(pp.Literal("-")) + raw_number
    rational = signed + pp.Optional(pp.Literal("/") + raw_number)
    exponent = (lpar + rational + rpar) | signed
    exponent.set_parse_action(_exponent)

    base = pp.Forward()
    negated = pp.Suppress("-") + base
    negated.set_parse_action(lambda t: -t[0])
    base <<= number | func_call | ident | (lpar + expr + rpar) | negated

    factor = base + pp.Optional(pp.Suppress("^") + exponent)
    factor.set_parse_action(lambda t: t[0] ** t[1] if len(t) == 2 else t[0])

    term = factor + pp.ZeroOrMore(pp.one_of("* /") + factor)
    term.set_parse_action(_fold_binary)
    expr <<= term + pp.ZeroOrMore(pp.one_of("+ -") + term)
    expr.set_parse_action(_fold_binary)
    return expr


def parse(text: str, n: int) -> Expr:
    """Parses `text` into an expression over q1..qn, u1..un."""
    if not isinstance(text, str):
        raise ExprParseError(f"Expected expression text, got {type(text).__name__}")
    if not text.strip():
        raise ExprParseError("Empty expression", offset=0, text=text)
    try:
        result = _grammar(n).parse_string(text, parse_all=True)
    except pp.ParseBaseException as e:
        offset = len(text[: e.loc].encode("utf-8"))
        raise ExprParseError(f"Syntax error: {e.msg}", offset=offset, text=text) from e
    return sympy.sympify(result[0])


def diff(e: Expr, v: Union[sympy.Symbol, str], n: int = None) -> Expr:
    """Exact partial derivative of `e` with respect to a chart variable."""
    if isinstance(v, str):
        match = _IDENT_RE.match(v)
        if not match:
            raise ValueError(f"'{v}' is not a chart variable")
        if n is not None and int(match.group(2)) > n:
            raise ValueError(f"'{v}' is out of range for dimension {n}")
        v = sympy.Symbol(v)
    return sympy.diff(e, v)


# --- Printer ---

def _number_text(value: sympy.Rational) -> str:
    if value.q == 1:
        return str(value.p) if value.p >= 0 else f"({value.p})"
    return f"({value.p}/{value.q})"


def to_text(e: Expr) -> str:
    """Prints `e` in the parser's grammar; parse(to_text(e)) evaluates identically."""
    e = sympy.sympify(e)
    if e is sympy.E:
        return "exp(1)"
    if isinstance(e, sympy.Rational):
        return _number_text(e)
    if isinstance(e, sympy.Float):
        return _number_text(sympy.Rational(Fraction(repr(float(e)))))
    if isinstance(e, sympy.Symbol):
        return e.name
    if isinstance(e, sympy.Add):
        return "(" + " + ".join(to_text(a) for a in e.args) + ")"
    if isinstance(e, sympy.Mul):
        return "(" + "*".join(to_text(a) for a in e.args) + ")"
    if isinstance(e, sympy.Pow):
        exponent = e.exp
        if not isinstance(exponent, sympy.Rational):
            raise ValueError(f"Non-constant exponent in {e}")
        base = to_text(e.base)
        if not (e.base.is_Symbol or isinstance(e.base, (sympy.Add, sympy.Mul))):
            base = f"({base})"
        if exponent.q == 1 and exponent.p >= 0:
            return f"{base}^{exponent.p}"
        return f"{base}^({exponent.p}/{exponent.q})" if exponent.q != 1 else f"{base}^({exponent.p})"
    for name, func in FUNCTIONS.items():
        if name != "sqrt" and isinstance(e, func):
            return f"{name}({to_text(e.args[0])})"
    raise ValueError(f"Expression outside the grammar: {e}")


# --- Evaluation ---

def _locate_fault(exprs: Iterable[Expr], symbols: Sequence[sympy.Symbol], point: Point) -> str:
    values = {s: sympy.Float(v) for s, v in zip(symbols, point.args())}
    for e in exprs:
        for node in sympy.postorder_traversal(sympy.sympify(e)):
            if node.is_Atom:
                continue
            value = node.xreplace(values)
            if value.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo) or value.is_real is False:
                return str(node)
    return "<unknown>"


class Evaluator:
    """
    Compiled evaluator for an array of expressions.
    Evaluation is pure and deterministic; the compiled function is built once.
    """

    def __init__(self, components: Any, n: int):
        self.n = n
        self.array = np.asarray(components, dtype=object)
        self.shape = self.array.shape
        self.symbols = all_symbols(n)
        flat = [sympy.sympify(c) for c in self.array.reshape(-1)]
        self._flat = flat
        self._function: Callable = sympy.lambdify(self.symbols, flat, modules="math", cse=True)

    def __call__(self, point: Point) -> np.ndarray:
        if point.n != self.n:
            raise ValueError(f"Point of dimension {point.n} given to a dimension-{self.n} evaluator")
        try:
            raw = self._function(*point.args())
            values = np.array(raw, dtype=float)
        except (ValueError, ZeroDivisionError, OverflowError, TypeError) as e:
            culprit = _locate_fault(self._flat, self.symbols, point)
            raise DomainError(
                f"Cannot evaluate '{culprit}' at q={point.q}, u={point.u}",
                subexpression=culprit,
                point=point,
            ) from e
        if not np.all(np.isfinite(values)):
            culprit = _locate_fault(self._flat, self.symbols, point)
            raise DomainError(
                f"Non-finite value of '{culprit}' at q={point.q}, u={point.u}",
                subexpression=culprit,
                point=point,
            )
        return values.reshape(self.shape)


def evaluate(e: Expr, point: Point) -> float:
    return float(Evaluator([e], point.n)(point)[0])


def scaled_residual(a: Any, b: Any) -> float:
    """Largest entrywise |a-b| / (1 + max(|a|,|b|)); 0 for empty arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    scale = 1.0 + np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.abs(a - b) / scale))


def is_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def finite_difference(e: Expr, v: sympy.Symbol, point: Point, step: float = 1e-5) -> float:
    """Central difference of `e` along chart variable `v` with step h*(1+|x|)."""
    symbols = all_symbols(point.n)
    index = symbols.index(v)
    args = list(point.args())
    h = step * (1.0 + abs(args[index]))
    f = Evaluator([e], point.n)
    plus, minus = list(args), list(args)
    plus[index] += h
    minus[index] -= h
    n = point.n
    upper = f(Point(tuple(plus[:n]), tuple(plus[n:])))[0]
    lower = f(Point(tuple(minus[:n]), tuple(minus[n:])))[0]
    return float((upper - lower) / (2.0 * h))
