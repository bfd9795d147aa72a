"""Concrete structures used as references, counterexamples and test data.

Every structure here is assembled from a frame: the columns of ``P`` are the
frame vectors ``(e_1, ..., e_2k, xi)`` written in the adapted basis and ``Q`` is
the inverse matrix.  In the frame, ``eta = xi = (0, ..., 0, 1)`` and phi, G are
given by small matrices, so the coordinate components are
``phi = P phi_f Q``, ``eta = last row of Q``, ``xi = last column of P`` and
``g = Q^T g_f Q``.
"""
from __future__ import annotations

from typing import Callable, Sequence

from .bundle import Chart, NonlinearConnection, VecField
from .dtensor import Metric, OneForm
from .expr import ONE, ZERO, Const, Expr, as_expr, func, simplify
from .structure import PacStructure


def _c(v) -> Expr:
    return as_expr(v)


def matmul(A, B):
    return [[simplify(sum((A[i][k] * B[k][j] for k in range(len(B))), ZERO)) for j in range(len(B[0]))]
            for i in range(len(A))]


def transpose(A):
    return [list(r) for r in zip(*A)]


def identity(k: int):
    return [[ONE if i == j else ZERO for j in range(k)] for i in range(k)]


def unit_upper_inverse(P):
    """Inverse of a unit upper-triangular matrix of Exprs (back substitution, no division)."""
    k = len(P)
    Q = identity(k)
    for i in range(k - 1, -1, -1):
        for j in range(i + 1, k):
            # Q[i][j] = -sum_{i<l<=j} P[i][l] Q[l][j]
            Q[i][j] = simplify(-sum((P[i][l] * Q[l][j] for l in range(i + 1, j + 1)), ZERO))
    return Q


def block_from_frame(P, Q, phi_f, g_f):
    """Coordinate phi, eta, xi, g of one block from frame data."""
    k = len(P)
    phi = matmul(matmul(P, phi_f), Q)
    eta = [simplify(e) for e in Q[k - 1]]
    xi = [simplify(P[i][k - 1]) for i in range(k)]
    g = matmul(matmul(transpose(Q), g_f), Q)
    return phi, eta, xi, g


def assemble(chart: Chart, hblock, vblock, N=None) -> PacStructure:
    (ph, eh, xh, gh), (pv, ev, xv, gv) = hblock, vblock
    conn = NonlinearConnection.zero(chart) if N is None else NonlinearConnection(chart, N)
    return PacStructure(chart, conn, ph, pv, OneForm(eh, ev), VecField(xh, xv), Metric(gh, gv))


def swap_frame(k: int, diag: Sequence[float]):
    """phi_f swapping ``e_{2j-1} <-> e_{2j}``, diagonal g_f with entries ``diag`` then 1."""
    dim = 2 * k + 1
    phi = [[ZERO] * dim for _ in range(dim)]
    for j in range(k):
        phi[2 * j][2 * j + 1] = ONE
        phi[2 * j + 1][2 * j] = ONE
    g = [[ZERO] * dim for _ in range(dim)]
    for i in range(2 * k):
        g[i][i] = _c(diag[i % len(diag)])
    g[dim - 1][dim - 1] = ONE
    return phi, g


def scaled_block(phi_f, g_f, c):
    """Scale the contact form by ``c`` (so xi by ``1/c``) and the metric on D by ``c``."""
    dim = len(g_f)
    g = [[g_f[i][j] * c if i < dim - 1 and j < dim - 1 else g_f[i][j] for j in range(dim)] for i in range(dim)]
    return phi_f, g


# --------------------------------------------------------------------------
# flat models


def flat_canonical(k1: int = 1, k2: int = 1) -> PacStructure:
    """Constant structure: phi swaps ``e_{2j-1}, e_{2j}``, g = diag(1, -1, ..., 1), eta = dx^n."""
    chart = Chart(k1, k2)
    blocks = []
    for k in (k1, k2):
        phi, g = swap_frame(k, [1.0, -1.0])
        I = identity(2 * k + 1)
        blocks.append(block_from_frame(I, I, phi, g))
    return assemble(chart, *blocks)


def flat_eigen(k1: int = 1, k2: int = 1) -> PacStructure:
    """The eigenbasis form ``phi = diag(1, -1, ..., 0)``; the metric is the identity.

    Satisfies the structure axioms but is not compatible with its metric.
    """
    chart = Chart(k1, k2)
    blocks = []
    for k in (k1, k2):
        dim = 2 * k + 1
        phi = [[ZERO] * dim for _ in range(dim)]
        for i in range(2 * k):
            phi[i][i] = Const(1.0 if i % 2 == 0 else -1.0)
        I = identity(dim)
        blocks.append(block_from_frame(I, I, phi, I))
    return assemble(chart, *blocks)


# --------------------------------------------------------------------------
# hyperbolic Heisenberg type


def heisenberg_frame(vars_: Sequence[Expr], c=1.0):
    """``e_{2j-1} = d_{2j-1}``, ``e_{2j} = d_{2j} + u_{2j-1} d_last``, ``xi = d_last / c``."""
    dim = len(vars_)
    k = (dim - 1) // 2
    c = _c(c)
    P = identity(dim)
    Q = identity(dim)
    for j in range(k):
        P[dim - 1][2 * j + 1] = vars_[2 * j]
        Q[dim - 1][2 * j + 1] = simplify(-(c * vars_[2 * j]))
    P[dim - 1][dim - 1] = simplify(ONE / c)
    Q[dim - 1][dim - 1] = c
    return P, Q


def heisenberg_block(vars_, c1=1.0, c2=1.0):
    """Left-invariant hyperbolic-Heisenberg structure: ``eta = c1 (du^n - sum u^{2j-1} du^{2j})``."""
    dim = len(vars_)
    k = (dim - 1) // 2
    P, Q = heisenberg_frame(vars_, c1)
    phi_f, g_f = swap_frame(k, [-1.0, 1.0])
    phi_f, g_f = scaled_block(phi_f, g_f, _c(c2))
    return block_from_frame(P, Q, phi_f, g_f)


def heisenberg(k1: int = 1, k2: int = 1, c1=1.0, c2=1.0, twist: float = 0.0) -> PacStructure:
    """Product of two Heisenberg-type blocks, horizontal in x and vertical in y.

    With ``twist`` the nonlinear connection gets ``N_1^m = -twist * x^2``.  The
    horizontal distribution is then non-integrable with ``[delta_1, delta_2]``
    along ``xi^V``, so ``d eta^V`` no longer vanishes on horizontal pairs: the
    result is almost paracontact metric but not paracontact metric.
    """
    chart = Chart(k1, k2)
    xs = [chart.x(i) for i in range(chart.n)]
    ys = [chart.y(a) for a in range(chart.m)]
    N = None
    if twist:
        N = [[ZERO] * chart.m for _ in range(chart.n)]
        N[0][chart.m - 1] = simplify(Const(-twist) * xs[1])
    return assemble(chart, heisenberg_block(xs, c1, c2), heisenberg_block(ys, c1, c2), N)


def solve_heisenberg_scale(c1: float = 1.0, k: int = 1) -> float:
    """Metric scale ``c2`` for which ``d eta = Phi`` holds, solved numerically.

    The residual ``d eta(e_1, e_2) - Phi(e_1, e_2)`` is evaluated through the
    generic exterior derivative at a fixed point and its root bracketed.
    """
    from scipy.optimize import brentq

    from .bundle import frame_field
    from .dtensor import d_oneform
    from .expr import evaluate_many
    import numpy as np

    chart = Chart(k, k)
    u = np.linspace(0.1, 0.7, chart.dim)[None, :]
    e1, e2 = frame_field(chart, 0), frame_field(chart, 1)

    def r(c2: float) -> float:
        S = heisenberg(k, k, c1, c2)
        val = d_oneform(S.eta_h, e1, e2, S.N) - S.Phi(e1, e2)
        return float(evaluate_many(as_expr(val), u)[0])

    return float(brentq(r, 1e-3, 1e3, xtol=1e-14, rtol=1e-15))


def killing_broken(k2: int = 1, s_coeff: float = 1.0) -> PacStructure:
    """Horizontal frame phi ``[[0, e^s], [e^-s, 0]]`` with ``s = x^3``.

    Still a paracontact metric structure, but ``xi^H`` is not Killing.
    """
    chart = Chart(1, k2)
    xs = [chart.x(i) for i in range(3)]
    ys = [chart.y(a) for a in range(chart.m)]
    s = simplify(Const(s_coeff) * xs[2])
    a, b, c = ZERO, func("exp", s), func("exp", -s)
    P, Q = heisenberg_frame(xs)
    hblock = block_from_frame(P, Q, *_two_frame(a, b, c, Const(-1.0)))
    return assemble(chart, hblock, heisenberg_block(ys))


def _two_frame(a, b, c, lam):
    """phi_f = [[a, b], [c, -a]] (a^2 + bc = 1) and ``g_f = lam * omega(., phi .)``."""
    phi = [[a, b, ZERO], [c, simplify(-a), ZERO], [ZERO, ZERO, ZERO]]
    g = [[simplify(lam * c), simplify(-(lam * a)), ZERO],
         [simplify(-(lam * a)), simplify(-(lam * b)), ZERO],
         [ZERO, ZERO, ONE]]
    return phi, g


def perturbed(t: float = 0.5) -> PacStructure:
    """Reference structure with the horizontal phi replaced by an x^1-dependent one.

    The frame phi becomes ``[[a, 1], [1 - a^2, -a]]`` with ``a = t x^1 x^3`` while
    eta, xi and G are kept, so the structure axioms still hold but normality
    (and compatibility) break.  Dependence on x^1 alone is not enough: in
    three dimensions phi must also vary along xi = d/dx^3.
    """
    chart = Chart(1, 1)
    xs = [chart.x(i) for i in range(3)]
    ref = heisenberg()
    a = simplify(Const(t) * xs[0] * xs[2])
    P, Q = heisenberg_frame(xs)
    phi_f, _ = _two_frame(a, ONE, simplify(ONE - a * a), Const(-1.0))
    phi = matmul(matmul(P, phi_f), Q)
    return PacStructure(chart, ref.N, phi, ref.phi_v, ref.eta, ref.xi, ref.G)


def generic(seed_coeffs: Sequence[float] = (0.3, 0.2, 0.25, 0.15)) -> PacStructure:
    """An almost paracontact metric structure with nothing special about it.

    Nonzero nonlinear connection, components depending on both x and y,
    non-constant conformal factor and a unit-triangular frame.
    """
    chart = Chart(1, 1)
    X = [chart.x(i) for i in range(3)]
    Y = [chart.y(a) for a in range(3)]
    p, q, r, s = (Const(v) for v in seed_coeffs)
    N = [[simplify(p * Y[0] * X[1]), simplify(q * X[2]), ZERO],
         [ZERO, simplify(r * Y[2] * Y[0]), simplify(s * X[0])],
         [simplify(q * Y[1]), ZERO, simplify(p * X[0] * X[1])]]
    blocks = []
    for u, w in ((X, Y), (Y, X)):
        P = [[ONE, simplify(p * u[2] * w[0]), simplify(q * u[1])],
             [ZERO, ONE, simplify(r * (u[0] + w[1]))],
             [ZERO, ZERO, ONE]]
        Q = unit_upper_inverse(P)
        a = simplify(r * func("sin", u[0] + s * w[2]))
        lam = simplify(-(ONE + q * u[1] * u[1] + p * w[0] * w[0]))
        blocks.append(block_from_frame(P, Q, *_two_frame(a, ONE, simplify(ONE - a * a), lam)))
    return assemble(chart, blocks[0], blocks[1], N)


# --------------------------------------------------------------------------
# SL(2, R) type: constant curvature -1/4, locally symmetric


def sl2_block(u: Sequence[Expr]):
    """Left-invariant para-Sasakian structure on a 3-dimensional group with
    ``[E1, E2] = E3``, ``[E3, E1] = E2``, ``[E3, E2] = E1``."""
    a, b, w = u
    e2w, em2w = func("exp", Const(2.0) * w), func("exp", Const(-2.0) * w)
    half = Const(0.5)
    P = [[simplify(half * e2w), simplify(half * e2w), ZERO],
         [simplify(-(half * b * b) - half), simplify(half - half * b * b), b],
         [simplify(-(half * b)), simplify(-(half * b)), half]]
    Q = [[simplify((b * b + ONE) * em2w), Const(-1.0), simplify(Const(2.0) * b)],
         [simplify((ONE - b * b) * em2w), ONE, simplify(Const(-2.0) * b)],
         [simplify(Const(2.0) * b * em2w), ZERO, Const(2.0)]]
    phi_f = [[ZERO, ONE, ZERO], [ONE, ZERO, ZERO], [ZERO, ZERO, ZERO]]
    g_f = [[Const(-1.0), ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]]
    return block_from_frame(P, Q, phi_f, g_f)


def sl2() -> PacStructure:
    chart = Chart(1, 1)
    return assemble(chart, sl2_block([chart.x(i) for i in range(3)]), sl2_block([chart.y(a) for a in range(3)]))


def conjugated(S: PacStructure, Ah, Av) -> PacStructure:
    """``phi -> A phi A^-1``, ``eta -> eta A^-1``, ``xi -> A xi`` with constant blocks; G pulled back."""
    import numpy as np

    out = []
    for A, phi, eta, xi, g in ((Ah, S.phi_h, S.eta.h, S.xi.h, S.G.g), (Av, S.phi_v, S.eta.v, S.xi.v, S.G.h)):
        A = np.asarray(A, dtype=float)
        Ai = np.linalg.inv(A)
        Ae = [[Const(float(v)) for v in r] for r in A]
        Aie = [[Const(float(v)) for v in r] for r in Ai]
        out.append((matmul(matmul(Ae, [list(r) for r in phi]), Aie),
                    matmul([list(eta)], Aie)[0],
                    [r[0] for r in matmul(Ae, [[e] for e in xi])],
                    matmul(matmul(transpose(Aie), [list(r) for r in g]), Aie)))
    return assemble(S.chart, out[0], out[1], S.N.N)


REGISTRY: dict[str, Callable[[], PacStructure]] = {
    "flat": flat_canonical,
    "heisenberg": heisenberg,
    "twisted": lambda: heisenberg(twist=0.7),
    "killing_broken": killing_broken,
    "perturbed": perturbed,
    "generic": generic,
    "sl2": sl2,
}
