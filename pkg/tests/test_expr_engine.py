import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

import config
from expr_engine import (
    DomainError,
    ExprParseError,
    Evaluator,
    Point,
    all_symbols,
    chart_symbols,
    diff,
    evaluate,
    finite_difference,
    is_close,
    parse,
    scaled_residual,
    to_text,
)

CORPUS = [
    "q1*q2 + 1",
    "sin(q1)^2",
    "(u1^2 + u2^2)/2 + u1^4/4",
    "q1^2 + q2^2",
    "q1*q2 + u1*u2",
    "exp(q1)*cos(q2)",
    "sqrt(q1 + 2)*u1",
    "log(q1 + 1)*u2^3",
    "q1^(3/2)*u1 - tan(q2)",
    "1/(q1 + q2) + u1/q1",
    "(sin(q1)*u2)^2/2 + q2^(-2)",
]

points = st.builds(
    Point,
    st.tuples(st.floats(0.3, 1.2), st.floats(0.3, 1.2)),
    st.tuples(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0)),
)


def at(q, u=(0.0, 0.0)):
    return Point(tuple(q), tuple(u))


@pytest.mark.parametrize("text, point, expected", [
    ("q1*q2 + 1", at((2, 3)), 7.0),
    ("sin(q1)^2", at((0, 1)), 0.0),
    ("u1^4/4", at((1, 1), (2, 0)), 4.0),
    ("exp(0)", at((1, 1)), 1.0),
    ("q1^2+q2^2", at((3, 4)), 25.0),
    ("-q1^2", at((3, 1)), 9.0),
    ("-(q1^2)", at((3, 1)), -9.0),
    ("q1^(1/2)", at((4, 1)), 2.0),
])
def test_parse_and_evaluate(text, point, expected):
    assert evaluate(parse(text, 2), point) == pytest.approx(expected)


def test_precedence_is_left_associative():
    assert evaluate(parse("8/4/2", 1), Point((1.0,), (0.0,))) == pytest.approx(1.0)
    assert evaluate(parse("5 - 3 - 1", 1), Point((1.0,), (0.0,))) == pytest.approx(1.0)


@pytest.mark.parametrize("text", ["q1 +", "q1 * (q2", "sin q1", "2^3^2", "q1^q2", ""])
def test_syntax_errors_carry_offset(text):
    with pytest.raises(ExprParseError) as err:
        parse(text, 2)
    assert err.value.offset is not None


def test_unknown_identifier_and_index_range():
    with pytest.raises(ExprParseError, match="Unknown identifier"):
        parse("x1 + q1", 2)
    with pytest.raises(ExprParseError, match="out of range"):
        parse("q3", 2)
    with pytest.raises(ExprParseError, match="out of range"):
        parse("u0", 2)


def test_diff_examples():
    q, _ = chart_symbols(2)
    assert diff(parse("q1*q2", 2), "q1") == q[1]
    derivative = diff(parse("sin(q1)^2", 2), q[0])
    point = at((0.4, 0.0))
    assert evaluate(derivative, point) == pytest.approx(2 * math.sin(0.4) * math.cos(0.4))
    with pytest.raises(ValueError):
        diff(parse("q1", 2), "q3", n=2)


def test_division_by_zero_is_a_domain_error():
    with pytest.raises(DomainError) as err:
        evaluate(parse("1/q1", 2), at((0.0, 1.0)))
    assert err.value.point == at((0.0, 1.0))


def test_log_of_negative_is_a_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse("log(q1 - 2)", 2), at((1.0, 1.0)))


def test_evaluator_keeps_shape_and_rejects_wrong_dimension():
    q, u = chart_symbols(2)
    f = Evaluator(np.array([[q[0], u[1]], [q[0] * q[1], 1]], dtype=object), 2)
    values = f(at((2, 3), (5, 7)))
    np.testing.assert_allclose(values, [[2.0, 7.0], [6.0, 1.0]])
    with pytest.raises(ValueError):
        f(Point((1.0,), (1.0,)))


def test_scaled_residual_and_is_close():
    assert scaled_residual([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert scaled_residual([0.0], [1.0]) == pytest.approx(0.5)
    assert scaled_residual([], []) == 0.0
    assert is_close(1e6, 1e6 + 1e-3, 1e-8)
    assert not is_close(0.0, 1e-3, 1e-8)


@given(st.sampled_from(CORPUS), st.sampled_from(all_symbols(2)), points)
@settings(max_examples=300, deadline=None)
def test_derivative_matches_finite_difference(text, variable, point):
    e = parse(text, 2)
    exact = evaluate(diff(e, variable), point)
    approx = finite_difference(e, variable, point)
    assert is_close(exact, approx, config.DERIVATIVE_TOLERANCE), f"{text} d/d{variable} at {point}"


@given(st.sampled_from(CORPUS), points)
@settings(max_examples=100, deadline=None)
def test_mixed_partials_commute(text, point):
    e = parse(text, 2)
    symbols = all_symbols(2)
    for a in symbols:
        for b in symbols:
            ab = evaluate(diff(diff(e, a), b), point)
            ba = evaluate(diff(diff(e, b), a), point)
            assert abs(ab - ba) <= 1e-10 * (1.0 + abs(ab))


@given(st.sampled_from(CORPUS), st.sampled_from(all_symbols(2)), points)
@settings(max_examples=200, deadline=None)
def test_printer_round_trip(text, variable, point):
    for e in (parse(text, 2), diff(parse(text, 2), variable)):
        again = parse(to_text(e), 2)
        assert evaluate(again, point) == pytest.approx(evaluate(e, point), rel=1e-12, abs=1e-12)


def test_printer_handles_rationals_and_constants():
    q, _ = chart_symbols(1)
    assert to_text(sympy.Rational(-3, 2)) == "(-3/2)"
    assert to_text(sympy.E) == "exp(1)"
    assert parse(to_text(q[0] ** sympy.Rational(-1, 3)), 1) == q[0] ** sympy.Rational(-1, 3)
