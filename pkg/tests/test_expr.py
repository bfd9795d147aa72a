import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacfin.bundle import Chart
from pacfin.expr import (ArityError, Const, DomainError, ParseError, UnknownIdentifierError, differentiate,
                         evaluate, evaluate_many, parse, simplify, to_string)

from conftest import CHART, points, polynomials, smooth_expressions

P = points(CHART, 20)


def central_difference(e, v, U, h=1e-5):
    up, dn = U.copy(), U.copy()
    up[:, v] += h
    dn[:, v] -= h
    return (evaluate_many(e, up) - evaluate_many(e, dn)) / (2 * h)


# -- parse


def test_zero_parses_to_zero_constant():
    e = parse("0", CHART)
    assert isinstance(e, Const) and e.value == 0.0


def test_parse_and_evaluate_mixed_expression():
    e = parse("x1*y2 + sin(x2)", CHART)
    assert evaluate(e, [0.5, 0.0, 0.0, 1.0, 3.0, 0.0]) == pytest.approx(1.5)


def test_second_derivative_of_cube():
    e = parse("x1^3", CHART)
    d2 = differentiate(differentiate(e, 0), 0)
    assert evaluate(d2, [2, 0, 0, 0, 0, 0]) == pytest.approx(12.0)
    U = np.array([[2.0, 0, 0, 0, 0, 0]])
    fd = central_difference(differentiate(e, 0), 0, U)
    assert fd[0] == pytest.approx(12.0, abs=1e-5)


def test_unary_minus_binds_looser_than_pow():
    e = parse("-x1^2", CHART)
    assert evaluate(e, [3, 0, 0, 0, 0, 0]) == pytest.approx(-9.0)


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse("x1 + * x2", CHART)
    assert err.value.position == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("x9 + 1", CHART)


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse("sin(x1, x2)", CHART)


# -- differentiate


def test_derivative_of_constant_is_zero():
    assert differentiate(Const(3.5), 2) == Const(0.0)


def test_derivative_of_sine_at_zero():
    assert evaluate(differentiate(parse("sin(x1)", CHART), 0), [0] * 6) == pytest.approx(1.0)


def test_variable_derivatives():
    x1 = parse("x1", CHART)
    assert evaluate(differentiate(x1, 0), [0.3] * 6) == 1.0
    assert evaluate(differentiate(x1, 3), [0.3] * 6) == 0.0


@settings(max_examples=100, deadline=None)
@given(polynomials(max_leaves=10), st.integers(0, CHART.dim - 1))
def test_derivative_matches_central_difference(e, v):
    exact = evaluate_many(differentiate(e, v), P)
    assert np.max(np.abs(exact - central_difference(e, v, P))) < 1e-6 * (1 + np.max(np.abs(exact)))


@settings(max_examples=50, deadline=None)
@given(smooth_expressions(), smooth_expressions(), st.floats(-3, 3), st.integers(0, CHART.dim - 1))
def test_differentiate_is_linear(e1, e2, a, v):
    lhs = evaluate_many(differentiate(Const(a) * e1 + e2, v), P)
    rhs = a * evaluate_many(differentiate(e1, v), P) + evaluate_many(differentiate(e2, v), P)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + np.max(np.abs(lhs)))


@settings(max_examples=50, deadline=None)
@given(smooth_expressions(), st.integers(0, 2), st.integers(3, 5))
def test_mixed_partials_commute(e, i, a):
    xy = evaluate_many(differentiate(differentiate(e, i), a), P)
    yx = evaluate_many(differentiate(differentiate(e, a), i), P)
    np.testing.assert_allclose(xy, yx, rtol=1e-12, atol=1e-12)


# -- evaluate


def test_constant_one():
    assert evaluate(parse("1", CHART), [0.7] * 6) == 1.0


def test_division_by_zero_is_domain_error():
    with pytest.raises(DomainError) as err:
        evaluate(parse("x1/x1", CHART), [0.0, 1, 1, 1, 1, 1])
    assert err.value.subtree is not None


@pytest.mark.parametrize("text", ["log(x1)", "sqrt(x1 - 1)"])
def test_log_and_sqrt_domain(text):
    with pytest.raises(DomainError):
        evaluate(parse(text, CHART), [-0.5, 0, 0, 0, 0, 0])


def test_exp_cosh_at_zero():
    assert evaluate(parse("exp(0)*cosh(0)", CHART), [0.2] * 6) == 1.0


@settings(max_examples=30, deadline=None)
@given(smooth_expressions())
def test_evaluation_is_deterministic(e):
    a, b = evaluate_many(e, P), evaluate_many(e, P)
    assert a.tobytes() == b.tobytes()


# -- simplify and printing


def test_simplify_drops_zero_product():
    assert to_string(simplify(parse("0*x1 + y1", CHART))) == "y1"


def test_simplify_drops_unit_power():
    assert to_string(simplify(parse("x1^1", CHART))) == "x1"


@settings(max_examples=100, deadline=None)
@given(smooth_expressions())
def test_simplify_preserves_values(e):
    a, b = evaluate_many(e, P), evaluate_many(simplify(e), P)
    assert np.max(np.abs(a - b)) < 1e-12 * (1 + np.max(np.abs(a)))


@settings(max_examples=100, deadline=None)
@given(smooth_expressions())
def test_print_parse_round_trip(e):
    once = parse(to_string(e), CHART)
    assert to_string(parse(to_string(once), CHART)) == to_string(once)
    np.testing.assert_allclose(evaluate_many(once, P), evaluate_many(e, P), rtol=1e-12, atol=1e-12)


def test_pow_exponent_must_be_nonnegative_integer():
    with pytest.raises(ParseError):
        parse("x1^-1", CHART)
    with pytest.raises(ParseError):
        parse("x1^0.5", CHART)


def test_larger_chart_names():
    ch = Chart(2, 1)
    e = parse("x5*y3", ch)
    assert evaluate(e, [0, 0, 0, 0, 2, 0, 0, 4]) == pytest.approx(8.0)
    assert math.isfinite(evaluate(e, [1] * 8))
