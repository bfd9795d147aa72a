import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacfin.bundle import (Chart, NonlinearConnection, Point, Sample, VecField, apply, bracket, delta_derivative,
                           field_from_strings, frame_field, h_proj, random_polynomial, spanning_fields,
                           structure_functions, v_proj, zero_field)
from pacfin.expr import Const, differentiate, evaluate_many

from conftest import CHART, points, values

U = points(CHART, 50, seed=3)


def random_connection(chart, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    return NonlinearConnection(chart, [[random_polynomial(chart, rng) for _ in range(chart.m)] for _ in range(chart.n)])


def random_field(chart, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    return VecField.from_comps([random_polynomial(chart, rng) for _ in range(chart.dim)], chart.n)


fields = st.integers(0, 10_000).map(lambda s: random_field(CHART, s))
connections = st.integers(0, 10_000).map(lambda s: random_connection(CHART, s))


# -- chart and point


@pytest.mark.parametrize("k1,k2", [(0, 0), (1, 1), (2, 1), (1, 3)])
def test_dimensions_are_odd_and_total_even(k1, k2):
    ch = Chart(k1, k2)
    assert ch.n % 2 == 1 and ch.m % 2 == 1 and ch.dim % 2 == 0


def test_negative_chart_rejected():
    with pytest.raises(ValueError):
        Chart(-1, 1)


def test_point_shape_checked():
    with pytest.raises(ValueError):
        Point((0.0, 1.0), (0.0, 0.0, 0.0)).check(CHART)


# -- delta derivative


def test_delta_is_partial_when_connection_vanishes():
    f = CHART.parse("x1*y2 + sin(x3*y1)")
    N = NonlinearConnection.zero(CHART)
    for i in range(CHART.n):
        np.testing.assert_allclose(values(delta_derivative(f, i, N), U), values(differentiate(f, i), U))


def test_delta_of_fibre_coordinate():
    rows = [["x1", "0", "0"], ["x2", "0", "0"], ["x3", "0", "0"]]
    N = NonlinearConnection.from_strings(CHART, rows)
    f = CHART.parse("y1")
    for i in range(CHART.n):
        np.testing.assert_allclose(values(delta_derivative(f, i, N), U), -U[:, i])


def test_delta_index_out_of_range():
    with pytest.raises(IndexError):
        delta_derivative(CHART.parse("x1"), 3, NonlinearConnection.zero(CHART))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, CHART.n - 1))
def test_delta_matches_term_by_term(seed, i):
    rng = np.random.Generator(np.random.PCG64(seed))
    f = random_polynomial(CHART, rng, degree=3)
    N = random_connection(CHART, seed + 1)
    want = evaluate_many(differentiate(f, i), U)
    for a in range(CHART.m):
        want = want - values(N.N[i][a], U) * values(differentiate(f, CHART.n + a), U)
    np.testing.assert_allclose(values(delta_derivative(f, i, N), U), want, atol=1e-12)


# -- projectors


def test_horizontal_part_of_vertical_field_is_zero():
    X = field_from_strings(CHART, ["0", "0", "0"], ["x1", "y2", "1"])
    assert np.all(values(h_proj(X), U) == 0)


@settings(max_examples=20, deadline=None)
@given(fields)
def test_projectors(X):
    assert np.array_equal(values(h_proj(h_proj(X)), U), values(h_proj(X), U))
    np.testing.assert_allclose(values(h_proj(X) + v_proj(X), U), values(X, U))
    assert h_proj(X).is_horizontal() and v_proj(X).is_vertical()


# -- brackets


def test_coordinate_fields_commute():
    N = NonlinearConnection.zero(CHART)
    B = bracket(frame_field(CHART, 0), frame_field(CHART, 1), N)
    assert np.all(values(B, U) == 0)


def test_bracket_of_deltas_with_simple_connection():
    rows = [["x2", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]]
    N = NonlinearConnection.from_strings(CHART, rows)
    B = bracket(frame_field(CHART, 0), frame_field(CHART, 1), N)
    want = np.zeros((len(U), CHART.dim))
    want[:, 3] = 1.0
    np.testing.assert_allclose(values(B, U), want, atol=1e-14)


def test_bracket_of_scaled_field():
    N = NonlinearConnection.zero(CHART)
    e1 = frame_field(CHART, 0)
    B = bracket(e1.scale(CHART.parse("x1")), e1, N)
    np.testing.assert_allclose(values(B, U), -values(e1, U))


@settings(max_examples=20, deadline=None)
@given(fields, fields, connections)
def test_bracket_is_antisymmetric(X, Y, N):
    np.testing.assert_allclose(values(bracket(X, Y, N), U), -values(bracket(Y, X, N), U), atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(fields, fields, fields, connections)
def test_jacobi_identity(X, Y, Z, N):
    J = bracket(X, bracket(Y, Z, N), N) + bracket(Y, bracket(Z, X, N), N) + bracket(Z, bracket(X, Y, N), N)
    scale = 1 + np.max(np.abs(values(bracket(X, bracket(Y, Z, N), N), U)))
    assert np.max(np.abs(values(J, U))) < 1e-9 * scale


@settings(max_examples=20, deadline=None)
@given(connections)
def test_adapted_frame_brackets(N):
    n = CHART.n
    for i in range(n):
        for j in range(n):
            B = bracket(frame_field(CHART, i), frame_field(CHART, j), N)
            want = np.zeros((len(U), CHART.dim))
            for a in range(CHART.m):
                want[:, n + a] = (values(delta_derivative(N.N[i][a], j, N), U)
                                  - values(delta_derivative(N.N[j][a], i, N), U))
            assert np.max(np.abs(values(B, U) - want)) < 1e-10
        for b in range(CHART.m):
            B = bracket(frame_field(CHART, i), frame_field(CHART, n + b), N)
            assert np.all(values(h_proj(B), U) == 0)


@settings(max_examples=10, deadline=None)
@given(connections)
def test_structure_functions_agree_with_brackets(N):
    c = structure_functions(N, CHART.n, CHART.m)
    for A in range(CHART.dim):
        for B in range(CHART.dim):
            br = values(bracket(frame_field(CHART, A), frame_field(CHART, B), N), U)
            want = np.stack([values(c[A][B][C], U) for C in range(CHART.dim)], axis=-1)
            np.testing.assert_allclose(br, want, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(fields, connections, st.integers(0, 10_000))
def test_apply_is_derivation(X, N, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    f, g = random_polynomial(CHART, rng), random_polynomial(CHART, rng)
    lhs = values(apply(X, f * g, N), U)
    rhs = values(apply(X, f, N), U) * values(g, U) + values(f, U) * values(apply(X, g, N), U)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


# -- sampling


def test_sample_is_seeded_and_boxed():
    a = Sample.draw(CHART, 10, 5, {"y1": [2.0, 3.0]})
    b = Sample.draw(CHART, 10, 5, {"y1": [2.0, 3.0]})
    assert np.array_equal(a.points, b.points)
    assert np.all((a.points[:, 3] >= 2) & (a.points[:, 3] <= 3))
    assert np.all(np.abs(a.points[:, :3]) <= 1)


def test_sample_count_must_be_positive():
    with pytest.raises(ValueError):
        Sample.draw(CHART, 0, 0)


def test_spanning_set_shape():
    names, flds = spanning_fields(CHART)
    assert len(names) == len(flds) == 2 * CHART.dim + 8
    assert names[0] == "e1" and names[-1] == "rand8"


def test_zero_field_is_zero():
    assert all(c == 0 for c in zero_field(CHART).comps)
    assert isinstance(Const(0.0), Const)
