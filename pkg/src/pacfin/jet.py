"""Truncated multivariate Taylor expansions at batches of points.

A :class:`Jet` stores the Taylor coefficients ``c_alpha`` of a scalar (or a
batch of scalars) around every sample point, for all monomials of total
degree ``<= order``.  Derivatives reduce the order by one; products keep the
smaller order.  Values (``order >= 0``) are exact up to rounding.

Coefficient arrays have shape ``(P, *batch, M)`` where ``P`` is the number of
points and ``M`` the number of monomials of degree ``<= order``.  Batch axes
broadcast numpy-style (right aligned).
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .expr import Const, Expr, differentiate, evaluate_many


class Monomials:
    """Index tables for monomials in ``nvars`` variables up to ``max_order``."""

    def __init__(self, nvars: int, max_order: int):
        self.nvars = nvars
        self.max_order = max_order
        exps = []
        for deg in range(max_order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                exps.append(tuple(alpha))
        self.exponents = exps
        self.index = {a: i for i, a in enumerate(exps)}
        self.size = [sum(1 for a in exps if sum(a) <= o) for o in range(max_order + 1)]
        self._mul = {}
        self._diff = {}

    def mul_table(self, order: int):
        if order not in self._mul:
            M = self.size[order]
            rows = []
            for i in range(M):
                ai = self.exponents[i]
                for j in range(M):
                    aj = self.exponents[j]
                    s = tuple(x + y for x, y in zip(ai, aj))
                    if sum(s) <= order:
                        rows.append((self.index[s], i, j))
            rows.sort()
            out = np.array([r[0] for r in rows])
            I = np.array([r[1] for r in rows])
            J = np.array([r[2] for r in rows])
            starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
            self._mul[order] = (I, J, starts)
        return self._mul[order]

    def diff_table(self, order: int, var: int):
        """Maps coefficients of an order-``order`` jet to its ``var`` derivative."""
        key = (order, var)
        if key not in self._diff:
            src, fac = [], []
            for a in self.exponents[: self.size[order - 1]]:
                b = list(a)
                b[var] += 1
                src.append(self.index[tuple(b)])
                fac.append(b[var])
            self._diff[key] = (np.array(src), np.array(fac, dtype=float))
        return self._diff[key]


@lru_cache(maxsize=None)
def monomials(nvars: int, max_order: int) -> Monomials:
    return Monomials(nvars, max_order)


class Jet:
    __slots__ = ("c", "order", "mono")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, order: int, mono: Monomials):
        self.c = c
        self.order = order
        self.mono = mono

    # -- helpers
    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.c[..., : self.mono.size[order]], order, self.mono)

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    @property
    def batch_shape(self) -> tuple:
        return self.c.shape[1:-1]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None),) + idx + (slice(None),)], self.order, self.mono)

    def expand(self, *axes: int) -> "Jet":
        """Insert singleton batch axes (positions count batch axes only)."""
        c = self.c
        for ax in sorted(axes):
            c = np.expand_dims(c, ax + 1)
        return Jet(c, self.order, self.mono)

    def _pair(self, other: "Jet"):
        o = min(self.order, other.order)
        a = self.truncate(o).c
        b = other.truncate(o).c
        if a.ndim < b.ndim:
            a = a.reshape(a.shape[:1] + (1,) * (b.ndim - a.ndim) + a.shape[1:])
        elif b.ndim < a.ndim:
            b = b.reshape(b.shape[:1] + (1,) * (a.ndim - b.ndim) + b.shape[1:])
        return a, b, o

    # -- arithmetic
    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, o = self._pair(other)
            return Jet(a + b, o, self.mono)
        if other == 0:
            return self
        c = self.c.copy()
        c[..., 0] += other
        return Jet(c, self.order, self.mono)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order, self.mono)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b, o = self._pair(other)
            return Jet(a - b, o, self.mono)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, o = self._pair(other)
            if o == 0:
                return Jet(a * b, 0, self.mono)
            I, J, starts = self.mono.mul_table(o)
            prod = a[..., I] * b[..., J]
            return Jet(np.add.reduceat(prod, starts, axis=-1), o, self.mono)
        if other == 0:
            return 0
        return Jet(self.c * other, self.order, self.mono)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a0 = self.c[..., :1]
        if np.any(a0 == 0.0):
            raise ZeroDivisionError("jet with vanishing value")
        t = Jet(self.c / a0, self.order, self.mono) - 1.0  # nilpotent part
        term = 1.0
        total = 1.0
        for _ in range(self.order):
            term = term * (-t) if isinstance(term, Jet) else -t
            total = total + term
        if not isinstance(total, Jet):
            total = Jet(np.ones_like(self.c[..., :1]), 0, self.mono)
        return Jet(total.c / a0, total.order, self.mono)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / other, self.order, self.mono)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def diff(self, var: int) -> "Jet":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.mono.diff_table(self.order, var)
        return Jet(self.c[..., src] * fac, self.order - 1, self.mono)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.c.shape})"


def einsum(spec: str, a: Jet, b: Jet) -> Jet:
    """Jet-valued contraction over batch axes, e.g. ``einsum('ij,jk->ik', A, B)``."""
    o = min(a.order, b.order)
    ca = a.truncate(o).c
    cb = b.truncate(o).c
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    if o == 0:
        c = np.einsum(f"Z{sa}Y,Z{sb}Y->Z{out}Y", ca, cb)
        return Jet(c, 0, a.mono)
    I, J, starts = a.mono.mul_table(o)
    c = np.einsum(f"Z{sa}Y,Z{sb}Y->Z{out}Y", ca[..., I], cb[..., J])
    return Jet(np.add.reduceat(c, starts, axis=-1), o, a.mono)


def stack(jets, axis: int = 0) -> Jet:
    """Stack scalar-or-batched jets (or zeros) along a new batch axis."""
    real = [j for j in jets if isinstance(j, Jet)]
    if not real:
        raise ValueError("stack needs at least one Jet")
    o = min(j.order for j in real)
    ref = real[0].truncate(o)
    shape = np.broadcast_shapes(*[j.truncate(o).c.shape for j in real])
    arrs = [np.broadcast_to(j.truncate(o).c, shape) if isinstance(j, Jet) else np.zeros(shape) for j in jets]
    return Jet(np.stack(arrs, axis=axis + 1), o, ref.mono)


def matrix_inverse(A: Jet) -> Jet:
    """Inverse of a batch of square matrices held in the last two batch axes."""
    A0 = A.c[..., 0]
    inv0 = np.linalg.inv(A0)
    Z = np.zeros_like(A.c)
    Z[..., 0] = inv0
    B0 = Jet(Z, A.order, A.mono)
    if A.order == 0:
        return B0
    Tc = A.c.copy()
    Tc[..., 0] = 0.0
    T = einsum("ij,jk->ik", B0, Jet(Tc, A.order, A.mono))  # inv0 (A - A0), nilpotent
    total = B0
    term = B0
    for _ in range(A.order):
        term = Jet(-einsum("ij,jk->ik", T, term).c, A.order, A.mono)
        total = total + term
    return total


class JetSpace:
    """Lifts expressions to jets over a fixed array of points."""

    def __init__(self, points: np.ndarray, order: int):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.order = order
        self.nvars = self.points.shape[1]
        self.mono = monomials(self.nvars, order)
        self._cache: dict = {}

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    def constant(self, value: float) -> Jet:
        c = np.zeros((self.npoints, self.mono.size[self.order]))
        c[:, 0] = value
        return Jet(c, self.order, self.mono)

    def lift(self, e):
        """Taylor coefficients of ``e`` from its symbolic partial derivatives."""
        if not isinstance(e, Expr):
            return 0 if e == 0 else self.constant(float(e))
        if isinstance(e, Const) and e.value == 0.0:
            return 0
        if e in self._cache:
            return self._cache[e]
        P = self.npoints
        M = self.mono.size[self.order]
        c = np.zeros((P, M))
        derivs = {self.mono.exponents[0]: e}
        for k, alpha in enumerate(self.mono.exponents):
            if k == 0:
                d = e
            else:
                v = next(i for i, a in enumerate(alpha) if a)
                parent = list(alpha)
                parent[v] -= 1
                pd = derivs.get(tuple(parent))
                if pd is None:
                    continue
                d = differentiate(pd, v)
                if isinstance(d, Const) and d.value == 0.0:
                    continue
                derivs[alpha] = d
            fact = math.prod(math.factorial(a) for a in alpha)
            c[:, k] = evaluate_many(d, self.points) / fact
        jet = Jet(c, self.order, self.mono)
        self._cache[e] = jet
        return jet
