import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pacfin.bundle import (NonlinearConnection, Sample, VecField, apply, frame_field, h_proj, random_polynomial,
                           v_proj)
from pacfin.connection import (block_preservation, canonical_connection, check_dxi_chain, check_killing_criteria,
                               check_torsion, check_xi_parallel_phi, cov_deriv, cov_deriv_phi, koszul, metricity,
                               phi_derivative_identity, torsion_blocks)
from pacfin.dtensor import Metric, SingularBlockError
from pacfin.expr import Const
from pacfin.instances import flat_canonical, heisenberg
from pacfin.residual import PreconditionError

from conftest import CHART

SMALL = Sample.draw(CHART, 10, 2)


def rng_of(seed):
    return np.random.Generator(np.random.PCG64(seed))


def random_field(seed):
    rng = rng_of(seed)
    return VecField.from_comps([random_polynomial(CHART, rng) for _ in range(CHART.dim)], CHART.n)


def random_metric(seed, scale=0.3):
    """Diagonally dominant, so non-degenerate on the unit box."""
    rng = rng_of(seed)

    def block(k, diag):
        B = [[random_polynomial(CHART, rng, scale=scale) for _ in range(k)] for _ in range(k)]
        return [[(B[i][j] + B[j][i]) + (Const(diag[i]) if i == j else Const(0.0)) for j in range(k)]
                for i in range(k)]

    return Metric(block(3, [4.0, -4.0, 4.0]), block(3, [-4.0, 4.0, 4.0]))


def random_connection(seed):
    rng = rng_of(seed)
    return NonlinearConnection(CHART, [[random_polynomial(CHART, rng, scale=0.4) for _ in range(3)] for _ in range(3)])


def lift(sample, X, order=1):
    spc = sample.space(order)
    return VecField([spc.lift(c) for c in X.h], [spc.lift(c) for c in X.v])


def arr(s, P):
    if isinstance(s, (int, float)):
        return np.full(P, float(s))
    return s.value


# -- construction


def test_flat_connection_vanishes():
    S = flat_canonical()
    D = canonical_connection(S.G, S.N).at(SMALL, 1)
    assert np.all(D.gamma.value == 0.0)


def test_singular_metric_rejected():
    S = flat_canonical()
    bad = Metric(S.G.g, [[Const(1.0), 0, 0], [0, 0, 0], [0, 0, Const(1.0)]])
    with pytest.raises(SingularBlockError):
        canonical_connection(bad, S.N).at(SMALL, 1)


G_STR = [["2 + x1^2", "x3/2", "0"], ["x3/2", "-(1 + x2^2)", "x1*x2/4"], ["0", "x1*x2/4", "1 + x1*x3/4"]]
H_STR = [["1 + y2^2", "0", "y1/3"], ["0", "-(2 + y1*y3/2)", "0"], ["y1/3", "0", "3 + y3^2"]]


def christoffel(strs, names):
    syms = sp.symbols(names)
    g = sp.Matrix([[sp.sympify(s.replace("^", "**"), locals=dict(zip(names, syms))) for s in r] for r in strs])
    gi = g.inv()
    k = len(names)
    out = [[[sp.Rational(1, 2) * sum(gi[c, l] * (sp.diff(g[b, l], syms[a]) + sp.diff(g[a, l], syms[b])
                                                 - sp.diff(g[a, b], syms[l])) for l in range(k))
             for c in range(k)] for b in range(k)] for a in range(k)]
    return sp.lambdify(syms, out, "numpy")


def test_base_metric_gives_christoffel_symbols():
    parse = CHART.parse
    G = Metric([[parse(s) for s in r] for r in G_STR], [[parse(s) for s in r] for r in H_STR])
    sample = Sample.draw(CHART, 20, 6)
    D = canonical_connection(G, NonlinearConnection.zero(CHART)).at(sample, 1)
    gam = D.gamma.value
    fx = christoffel(G_STR, ["x1", "x2", "x3"])
    fy = christoffel(H_STR, ["y1", "y2", "y3"])
    for p, u in enumerate(sample.points):
        np.testing.assert_allclose(gam[p, :3, :3, :3], np.array(fx(*u[:3]), dtype=float), atol=1e-9)
        np.testing.assert_allclose(gam[p, 3:, 3:, 3:], np.array(fy(*u[3:]), dtype=float), atol=1e-9)
    # g depends on x only and h on y only, so the mixed blocks vanish
    assert np.max(np.abs(gam[:, 3:, :3, :3])) == 0.0
    assert np.max(np.abs(gam[:, :3, 3:, 3:])) == 0.0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_koszul_on_random_data(seed):
    FC = canonical_connection(random_metric(seed), random_connection(seed + 100))
    assert koszul(FC, SMALL).max < 1e-8


@pytest.mark.parametrize("seed", [4, 5])
def test_metricity_all_sixteen(seed):
    FC = canonical_connection(random_metric(seed), random_connection(seed + 100))
    rep = metricity(FC, SMALL)
    assert len(rep) == 16
    assert rep.max < 1e-8


@pytest.mark.parametrize("seed", [6, 7])
def test_torsion_and_blocks(seed):
    FC = canonical_connection(random_metric(seed), random_connection(seed + 100))
    assert check_torsion(FC, SMALL).max < 1e-8
    assert block_preservation(FC, SMALL).max == 0.0


# -- covariant derivative


def test_frame_case():
    FC = canonical_connection(random_metric(8), random_connection(9))
    D = FC.at(SMALL, 1)
    for A in range(6):
        for B in range(6):
            out = D.cov(lift(SMALL, frame_field(CHART, A)), lift(SMALL, frame_field(CHART, B)))
            got = np.stack([arr(c, len(SMALL)) for c in out.comps], -1)
            np.testing.assert_allclose(got, D.gamma.value[:, A, B, :], atol=1e-12)


def test_flat_cov_is_directional_derivative():
    S = flat_canonical()
    D = canonical_connection(S.G, S.N).at(SMALL, 1)
    X, Y = lift(SMALL, random_field(1)), lift(SMALL, random_field(2))
    out = cov_deriv(D, X, Y)
    for c, y in zip(out.comps, Y.comps):
        np.testing.assert_allclose(arr(c, len(SMALL)), arr(apply(X, y, D.N), len(SMALL)), atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_leibniz(seed):
    FC = canonical_connection(random_metric(seed), random_connection(seed + 1))
    D = FC.at(SMALL, 1)
    X, Y = lift(SMALL, random_field(seed + 2)), lift(SMALL, random_field(seed + 3))
    f = SMALL.lift(random_polynomial(CHART, rng_of(seed + 4)), 1)
    lhs = D.cov(X, Y.scale(f))
    rhs = D.cov(X, Y).scale(f) + Y.scale(apply(X, f, D.N))
    for a, b in zip(lhs.comps, rhs.comps):
        np.testing.assert_allclose(arr(a, len(SMALL)), arr(b, len(SMALL)), atol=1e-9)


def test_phi_derivative_of_constant_structure():
    S = flat_canonical()
    D = canonical_connection(S.G, S.N).at(SMALL, 1)
    L = S.lift(SMALL, 1)
    r = cov_deriv_phi(D, L, lift(SMALL, random_field(1)), lift(SMALL, random_field(2)))
    assert all(np.max(np.abs(arr(c, len(SMALL)))) == 0.0 for c in r.comps)


def test_para_sasakian_phi_derivative(instances):
    S, FC = instances["heisenberg"]
    D, L = FC.at(SMALL, 1), S.lift(SMALL, 1)
    for s in range(4):
        X, Y = h_proj(lift(SMALL, random_field(s))), h_proj(lift(SMALL, random_field(s + 10)))
        expect = X.scale(L.eta_h(Y)) - L.xi_h.scale(L.G.H(X, Y))
        r = cov_deriv_phi(D, L, X, Y) - expect.scale(0.5)
        assert max(np.max(np.abs(arr(c, len(SMALL)))) for c in r.comps) < 1e-8


def test_xi_parallel_phi_on_reference(instances):
    S, FC = instances["heisenberg"]
    assert check_xi_parallel_phi(FC, S, SMALL).max < 1e-8


# -- torsion blocks


def test_integrable_horizontal_distribution():
    FC = canonical_connection(random_metric(10), NonlinearConnection.zero(CHART))
    D = FC.at(SMALL, 1)
    T = torsion_blocks(D, lift(SMALL, random_field(1)), lift(SMALL, random_field(2)))
    assert set(T) == {"T^H(X^H,Y^H)", "T^V(X^H,Y^H)", "T^H(X^H,Y^V)", "T^V(X^H,Y^V)", "T^V(X^V,Y^V)"}
    assert all(np.max(np.abs(arr(c, len(SMALL)))) == 0.0 for c in T["T^V(X^H,Y^H)"].comps)


def test_vertical_torsion_from_curved_connection():
    N = NonlinearConnection.from_strings(CHART, [["x2", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]])
    FC = canonical_connection(random_metric(11), N)
    D = FC.at(SMALL, 1)
    T = torsion_blocks(D, lift(SMALL, frame_field(CHART, 0)), lift(SMALL, frame_field(CHART, 1)))
    got = np.stack([arr(c, len(SMALL)) for c in T["T^V(X^H,Y^H)"].comps], -1)
    want = np.zeros(6)
    want[3] = -1.0
    np.testing.assert_allclose(got, np.broadcast_to(want, got.shape), atol=1e-12)


# -- Killing criteria and related identities


def test_killing_criteria_reference(instances):
    S, FC = instances["heisenberg"]
    rep = check_killing_criteria(FC, S, SMALL)
    assert rep.max < 1e-8
    assert rep["(ii) G^H([xi^H,X^V]^H, Y^H)"].value == 0.0
    assert rep["(iv) G^V([xi^V,X^H]^V, Y^V)"].value == 0.0


def test_killing_criteria_broken(instances):
    S, FC = instances["killing_broken"]
    assert check_killing_criteria(FC, S, SMALL)["(i) D_X^H xi^H + 1/2 phi X^H"].value > 1e-3


def test_killing_criteria_require_paracontact_metric(instances):
    S, FC = instances["flat"]
    with pytest.raises(PreconditionError):
        check_killing_criteria(FC, S, SMALL)


def test_dxi_chain(instances):
    S, FC = instances["heisenberg"]
    assert check_dxi_chain(FC, S, SMALL).max < 1e-8
    S, FC = instances["killing_broken"]
    assert check_dxi_chain(FC, S, SMALL).max > 1e-3


@pytest.mark.parametrize("name", ["generic", "heisenberg", "sl2", "killing_broken", "flat"])
def test_phi_derivative_identity(instances, name):
    S, FC = instances[name]
    assert phi_derivative_identity(FC, S, SMALL).max < 1e-7


def test_phi_derivative_identity_requires_metric_structure(instances):
    S, FC = instances["perturbed"]
    with pytest.raises(PreconditionError):
        phi_derivative_identity(FC, S, SMALL)


def test_phi_derivative_identity_witnesses(instances):
    S, FC = instances["generic"]
    r = phi_derivative_identity(FC, S, SMALL).worst()
    assert len(r.fields) == 3 and len(r.point) == CHART.dim
