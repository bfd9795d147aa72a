import numpy as np
import pytest
from hypothesis import given, settings

from pacfin.expr import differentiate, evaluate_many
from pacfin.jet import JetSpace, einsum, matrix_inverse, stack

from conftest import CHART, points, smooth_expressions

U = points(CHART, 16, seed=9)


@settings(max_examples=40, deadline=None)
@given(smooth_expressions(), smooth_expressions())
def test_product_jet_matches_symbolic_derivatives(e1, e2):
    sp = JetSpace(U, 2)
    a, b = sp.lift(e1), sp.lift(e2)
    if isinstance(a, int) or isinstance(b, int):
        return
    J = a * b
    prod = e1 * e2
    for i in range(CHART.dim):
        d1 = J.diff(i)
        np.testing.assert_allclose(d1.value, evaluate_many(differentiate(prod, i), U), rtol=1e-10, atol=1e-10)
        for k in range(CHART.dim):
            np.testing.assert_allclose(d1.diff(k).value, evaluate_many(differentiate(differentiate(prod, i), k), U),
                                       rtol=1e-9, atol=1e-9)


def test_reciprocal_and_inverse():
    sp = JetSpace(U, 2)
    a = sp.lift(CHART.parse("2 + x1*y1"))
    b = sp.lift(CHART.parse("x2 - y3"))
    c = sp.lift(CHART.parse("exp(x3)"))
    A = stack([stack([a, b]), stack([b, c])])
    Ainv = matrix_inverse(A)
    I = einsum("ij,jk->ik", A, Ainv)
    assert np.max(np.abs(I.c[..., 0] - np.eye(2))) < 1e-12
    assert np.max(np.abs(I.c[..., 1:])) < 1e-11
    r = a.reciprocal()
    np.testing.assert_allclose((a * r).c[..., 0], 1.0)
    assert np.max(np.abs((a * r).c[..., 1:])) < 1e-12


def test_order_zero_cannot_be_differentiated():
    J = JetSpace(U, 0).lift(CHART.parse("x1"))
    with pytest.raises(ValueError):
        J.diff(0)


def test_zero_lifts_to_structural_zero():
    assert JetSpace(U, 1).lift(CHART.parse("0")) == 0
