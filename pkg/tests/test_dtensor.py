import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacfin.bundle import NonlinearConnection, Point, VecField, frame_field, random_polynomial
from pacfin.dtensor import (DTensor, Metric, OneForm, SingularBlockError, d_oneform, d_twoform, exact_form,
                            interior_product, inverse_blocks_at, lower, metric_apply, oneform_dform)
from pacfin.expr import Const

from conftest import CHART, points, values

U = points(CHART, 40, seed=7)
N0 = NonlinearConnection.zero(CHART)


def rng_of(seed):
    return np.random.Generator(np.random.PCG64(seed))


def random_field(seed):
    rng = rng_of(seed)
    return VecField.from_comps([random_polynomial(CHART, rng) for _ in range(CHART.dim)], CHART.n)


def random_form(seed):
    rng = rng_of(seed)
    return OneForm([random_polynomial(CHART, rng) for _ in range(CHART.n)],
                   [random_polynomial(CHART, rng) for _ in range(CHART.m)])


def random_connection(seed):
    rng = rng_of(seed)
    return NonlinearConnection(CHART, [[random_polynomial(CHART, rng, scale=0.5) for _ in range(CHART.m)]
                                       for _ in range(CHART.n)])


def random_metric(seed):
    rng = rng_of(seed)
    block = lambda k: [[random_polynomial(CHART, rng) for _ in range(k)] for _ in range(k)]
    g, h = block(CHART.n), block(CHART.m)
    sym = lambda B: [[B[i][j] + B[j][i] for j in range(len(B))] for i in range(len(B))]
    return Metric(sym(g), sym(h))


seeds = st.integers(0, 10_000)


def diag_metric(g, h):
    mat = lambda d: [[Const(float(d[i])) if i == j else 0 for j in range(len(d))] for i in range(len(d))]
    return Metric(mat(g), mat(h))


# -- one-forms and the metric


def test_oneform_pairs_components():
    w = OneForm([CHART.parse("x1"), 0, 0], [0, CHART.parse("y3"), 0])
    X = VecField([Const(2.0), 0, 0], [0, Const(3.0), 0])
    np.testing.assert_allclose(values(w(X), U), 2 * U[:, 0] + 3 * U[:, 5])


def test_oneform_block_parts():
    w = random_form(1)
    X = random_field(2)
    np.testing.assert_allclose(values(w.H(X), U) + values(w.V(X), U), values(w(X), U), atol=1e-12)


def test_metric_never_pairs_horizontal_with_vertical():
    G = random_metric(3)
    X = VecField([Const(1.0)] * 3, [0] * 3)
    Y = VecField([0] * 3, [Const(1.0)] * 3)
    assert np.all(values(metric_apply(G, X, Y), U) == 0)


def test_metric_blocks_restrict():
    G = random_metric(4)
    X, Y = random_field(5), random_field(6)
    total = values(G(X, Y), U)
    np.testing.assert_allclose(values(G.H(X, Y), U) + values(G.V(X, Y), U), total, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds, seeds)
def test_lower_matches_metric(s1, s2):
    G = random_metric(s1)
    X, Y = random_field(s2), random_field(s2 + 1)
    np.testing.assert_allclose(values(lower(G, X)(Y), U), values(G(X, Y), U), atol=1e-9)


def test_metric_values_shapes():
    g, h = random_metric(8).values(U)
    assert g.shape == (len(U), 3, 3) and h.shape == (len(U), 3, 3)
    np.testing.assert_allclose(g, np.swapaxes(g, 1, 2))


def test_inverse_of_diagonal_blocks():
    G = diag_metric([2, 3, 5], [1, -1, 4])
    gi, hi = inverse_blocks_at(G, Point((0.1, 0.2, 0.3), (0.0, 0.5, 0.0)))
    np.testing.assert_allclose(gi, np.diag([1 / 2, 1 / 3, 1 / 5]))
    np.testing.assert_allclose(hi, np.diag([1, -1, 1 / 4]))


def test_inverse_accepts_raw_coordinates():
    G = random_metric(9)
    p = U[0]
    gi, hi = inverse_blocks_at(G, p)
    g, h = G.values(p[None, :])
    np.testing.assert_allclose(gi @ g[0], np.eye(3), atol=1e-9)
    np.testing.assert_allclose(hi @ h[0], np.eye(3), atol=1e-9)


def test_singular_block_names_block():
    G = diag_metric([1, 1, 1], [1, 0, 1])
    with pytest.raises(SingularBlockError, match="vertical"):
        inverse_blocks_at(G, np.zeros(6))


# -- d-tensors


def test_dtensor_valence_and_arguments():
    comps = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            comps[i, j] = Const(float(i + 2 * j)) if i != j else 0
    T = DTensor((0, 0, 2, 0), comps)
    X, Y = frame_field(CHART, 1), frame_field(CHART, 2)
    np.testing.assert_allclose(values(T(X, Y), U), 5.0)
    with pytest.raises(TypeError):
        T(X)


def test_dtensor_ignores_vertical_parts_of_horizontal_slots():
    comps = np.empty((3,), dtype=object)
    comps[:] = [Const(1.0), Const(2.0), Const(3.0)]
    T = DTensor((0, 0, 1, 0), comps)
    X = VecField([Const(1.0), 0, Const(1.0)], [Const(7.0), 0, 0])
    np.testing.assert_allclose(values(T(X), U), 4.0)


# -- exterior derivatives


def test_d_of_x2_dx1():
    w = OneForm([CHART.parse("x2"), 0, 0], [0, 0, 0])
    e1, e2 = frame_field(CHART, 0), frame_field(CHART, 1)
    np.testing.assert_allclose(values(d_oneform(w, e1, e2, N0), U), -1.0)


@settings(max_examples=15, deadline=None)
@given(seeds, seeds)
def test_d_oneform_antisymmetric(s1, s2):
    N, w = random_connection(s1), random_form(s2)
    X, Y = random_field(s2 + 1), random_field(s2 + 2)
    np.testing.assert_allclose(values(d_oneform(w, X, Y, N), U), -values(d_oneform(w, Y, X, N), U), atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(seeds, seeds)
def test_exact_forms_are_closed(s1, s2):
    N = random_connection(s1)
    f = random_polynomial(CHART, rng_of(s2), degree=3)
    w = exact_form(f, N, CHART.n, CHART.m)
    X, Y = random_field(s2 + 1), random_field(s2 + 2)
    r = values(d_oneform(w, X, Y, N), U)
    assert np.max(np.abs(r)) < 1e-8


def test_d_oneform_tensorial_in_first_slot():
    N, w = random_connection(11), random_form(12)
    X, Y = random_field(13), random_field(14)
    f = CHART.parse("1 + x1*y2 - x3^2")
    lhs = values(d_oneform(w, X.scale(f), Y, N), U)
    np.testing.assert_allclose(lhs, values(f, U) * values(d_oneform(w, X, Y, N), U), atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(seeds, seeds)
def test_d_squared_vanishes(s1, s2):
    N, w = random_connection(s1), random_form(s2)
    X, Y, Z = (random_field(s2 + k) for k in (1, 2, 3))
    r = values(d_twoform(oneform_dform(w, N), X, Y, Z, N), U)
    assert np.max(np.abs(r)) < 1e-9 * max(1.0, np.max(np.abs(values(w(X), U))) ** 2)


def random_twoform(seed):
    """An antisymmetric bilinear action built from two one-forms."""
    a, b = random_form(seed), random_form(seed + 1)
    from pacfin.bundle import smul, ssub
    return lambda X, Y: ssub(smul(a(X), b(Y)), smul(a(Y), b(X)))


@settings(max_examples=10, deadline=None)
@given(seeds, seeds)
def test_d_twoform_alternating(s1, s2):
    N, Phi = random_connection(s1), random_twoform(s2)
    X, Y, Z = (random_field(s2 + k) for k in (2, 3, 4))
    base = values(d_twoform(Phi, X, Y, Z, N), U)
    swapped = values(d_twoform(Phi, Y, X, Z, N), U)
    scale = max(1.0, np.max(np.abs(base)))
    np.testing.assert_allclose(swapped, -base, atol=1e-9 * scale)


def test_interior_product():
    Phi = random_twoform(20)
    xi, X = random_field(21), random_field(22)
    np.testing.assert_allclose(values(interior_product(xi, Phi)(X), U), values(Phi(xi, X), U))
