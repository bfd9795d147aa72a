"""Distinguished tensors, the block pseudo-metric and exterior derivatives.

The exterior derivative carries no 1/2 factor:
``d w(X, Y) = X(w(Y)) - Y(w(X)) - w([X, Y])``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .bundle import Point, VecField, apply, bracket, d, is_zero, smul, ssub, ssum
from .expr import Expr, as_expr, evaluate_many
from .jet import Jet

DET_TOL = 1e-10


class SingularBlockError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OneForm:
    """``w = h[i] dx^i + v[a] delta y^a``."""

    h: tuple
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(component(e) for e in self.h))
        object.__setattr__(self, "v", tuple(component(e) for e in self.v))

    def __call__(self, X: VecField):
        return ssum([ssum(smul(w, x) for w, x in zip(self.h, X.h)),
                     ssum(smul(w, x) for w, x in zip(self.v, X.v))])

    @property
    def H(self) -> "OneForm":
        return OneForm(self.h, [0] * len(self.v))

    @property
    def V(self) -> "OneForm":
        return OneForm([0] * len(self.h), self.v)


def component(e):
    """Normalize a component: Exprs and Jets pass through, numbers become constants."""
    if isinstance(e, (Expr, Jet)) or (isinstance(e, int) and e == 0):
        return e
    return as_expr(e)


def exact_form(f, N, n: int, m: int) -> OneForm:
    """``df`` in the adapted coframe: components ``delta_i f`` and ``d f / dy^a``."""
    from .bundle import delta_derivative
    return OneForm([delta_derivative(f, i, N) for i in range(n)], [d(f, n + a) for a in range(m)])


@dataclass(frozen=True)
class Metric:
    """Block pseudo-metric ``G = g_ij dx^i dx^j + h_ab dy^a dy^b``."""

    g: tuple
    h: tuple

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(tuple(component(e) for e in r) for r in self.g))
        object.__setattr__(self, "h", tuple(tuple(component(e) for e in r) for r in self.h))

    @property
    def H(self) -> "Metric":
        return Metric(self.g, [[0] * len(self.h)] * len(self.h))

    @property
    def V(self) -> "Metric":
        return Metric([[0] * len(self.g)] * len(self.g), self.h)

    def __call__(self, X: VecField, Y: VecField):
        return metric_apply(self, X, Y)

    def values(self, points: np.ndarray):
        """Numeric blocks at points: arrays ``(P, n, n)`` and ``(P, m, m)``."""
        pts = np.atleast_2d(points)
        ev = lambda e: evaluate_many(as_expr(e), pts)
        g = np.stack([np.stack([ev(e) for e in r], -1) for r in self.g], -2)
        h = np.stack([np.stack([ev(e) for e in r], -1) for r in self.h], -2)
        return g, h


def metric_apply(G, X: VecField, Y: VecField):
    """``g_ij X^i Y^j + h_ab X^a Y^b``; horizontal and vertical never pair."""
    terms = []
    for i, j in product(range(len(X.h)), repeat=2):
        if not (is_zero(X.h[i]) or is_zero(Y.h[j])):
            terms.append(smul(G.g[i][j], smul(X.h[i], Y.h[j])))
    for a, b in product(range(len(X.v)), repeat=2):
        if not (is_zero(X.v[a]) or is_zero(Y.v[b])):
            terms.append(smul(G.h[a][b], smul(X.v[a], Y.v[b])))
    return ssum(terms)


def lower(G, X: VecField) -> OneForm:
    """The 1-form ``G(X, .)``."""
    n, m = len(X.h), len(X.v)
    return OneForm([ssum(smul(G.g[i][j], X.h[i]) for i in range(n)) for j in range(n)],
                   [ssum(smul(G.h[a][b], X.v[a]) for a in range(m)) for b in range(m)])


def inverse_blocks_at(G: Metric, p) -> tuple[np.ndarray, np.ndarray]:
    """Numeric inverses of the two blocks at a point."""
    u = p.coords if isinstance(p, Point) else np.asarray(p, dtype=float)
    g, h = G.values(u[None, :])
    out = []
    for name, B in (("horizontal", g[0]), ("vertical", h[0])):
        if abs(np.linalg.det(B)) <= DET_TOL:
            raise SingularBlockError(f"{name} metric block is singular at {tuple(u)}")
        out.append(np.linalg.inv(B))
    return out[0], out[1]


@dataclass(frozen=True)
class DTensor:
    """d-tensor of valence (p, r; q, s) with adapted-basis components.

    ``comps`` is indexed ``[i1..ip][a1..ar][j1..jq][b1..bs]``: the first ``p``
    axes run over ``n``, the next ``r`` over ``m``, and so on.
    """

    valence: tuple
    comps: np.ndarray  # object array of scalars

    def __call__(self, *args):
        p, r, q, s = self.valence
        forms, fields = args[: p + r], args[p + r:]
        if len(fields) != q + s:
            raise TypeError("wrong number of arguments for d-tensor")
        vecs = [w.h for w in forms[:p]] + [w.v for w in forms[p:]] + \
               [X.h for X in fields[:q]] + [X.v for X in fields[q:]]
        terms = []
        for idx in product(*[range(len(vv)) for vv in vecs]):
            c = self.comps[idx]
            if is_zero(c):
                continue
            t = c
            for vv, k in zip(vecs, idx):
                t = smul(t, vv[k])
            terms.append(t)
        return ssum(terms)


def d_oneform(w: OneForm, X: VecField, Y: VecField, N):
    """``dw(X, Y) = X(w(Y)) - Y(w(X)) - w([X, Y])``."""
    return ssub(ssub(apply(X, w(Y), N), apply(Y, w(X), N)), w(bracket(X, Y, N)))


def d_twoform(Phi: Callable, X: VecField, Y: VecField, Z: VecField, N):
    """Exterior derivative of a bilinear form given by its action."""
    plus = ssum([apply(X, Phi(Y, Z), N), apply(Z, Phi(X, Y), N), Phi(bracket(X, Z, N), Y)])
    minus = ssum([apply(Y, Phi(X, Z), N), Phi(bracket(X, Y, N), Z), Phi(bracket(Y, Z, N), X)])
    return ssub(plus, minus)


def interior_product(xi: VecField, beta: Callable) -> Callable:
    """``(i_xi beta)(X) = beta(xi, X)``."""
    return lambda X: beta(xi, X)


def oneform_dform(w: OneForm, N) -> Callable:
    """``dw`` as a bilinear action."""
    return lambda X, Y: d_oneform(w, X, Y, N)
