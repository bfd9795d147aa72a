"""Charts, the nonlinear connection, adapted frames and Lie brackets.

Field components may be :class:`~pacfin.expr.Expr` (symbolic results), :class:`~pacfin.jet.Jet`
(point-local numeric results) or the integer ``0`` for a structural zero.  The
same functions serve all three.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import ONE, ZERO, Const, Expr, Var, as_expr, parse, variable_names
from .jet import Jet, JetSpace, stack


# --------------------------------------------------------------------------
# scalar helpers shared by Expr / Jet / structural-zero components


def is_zero(s) -> bool:
    if isinstance(s, Jet):
        return False
    if isinstance(s, Expr):
        return isinstance(s, Const) and s.value == 0.0
    return s == 0


def d(s, var: int):
    """Partial derivative of a component; structural zeros stay zero."""
    if isinstance(s, (Jet, Expr)):
        return s.diff(var)
    return 0


def smul(a, b):
    if is_zero(a) or is_zero(b):
        return 0
    return a * b


def ssum(terms):
    total = 0
    for t in terms:
        if is_zero(t):
            continue
        total = t if is_zero(total) else total + t
    return total


def ssub(a, b):
    if is_zero(b):
        return a
    if is_zero(a):
        return -b
    return a - b


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Chart:
    k1: int
    k2: int

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("k1 and k2 must be non-negative")

    @property
    def n(self) -> int:
        return 2 * self.k1 + 1

    @property
    def m(self) -> int:
        return 2 * self.k2 + 1

    @property
    def dim(self) -> int:
        return self.n + self.m

    @property
    def names(self) -> list[str]:
        return variable_names(self.n, self.m)

    def x(self, i: int) -> Var:
        """Base coordinate x^(i+1) (0-based index)."""
        return Var(i, f"x{i + 1}")

    def y(self, a: int) -> Var:
        return Var(self.n + a, f"y{a + 1}")

    def parse(self, text: str) -> Expr:
        return parse(text, self)


@dataclass(frozen=True)
class Point:
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))

    def check(self, chart: Chart) -> "Point":
        if len(self.x) != chart.n or len(self.y) != chart.m:
            raise ValueError(f"point shape ({len(self.x)}, {len(self.y)}) does not match chart ({chart.n}, {chart.m})")
        return self

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.x + self.y)


@dataclass(frozen=True)
class NonlinearConnection:
    """Coefficients ``N[i][a] = N_i^a(x, y)``."""

    chart: Chart
    N: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_expr(e) for e in row) for row in self.N)
        if len(rows) != self.chart.n or any(len(r) != self.chart.m for r in rows):
            raise ValueError("nonlinear connection shape does not match chart")
        object.__setattr__(self, "N", rows)

    @classmethod
    def zero(cls, chart: Chart) -> "NonlinearConnection":
        return cls(chart, [[ZERO] * chart.m for _ in range(chart.n)])

    @classmethod
    def from_strings(cls, chart: Chart, rows) -> "NonlinearConnection":
        return cls(chart, [[chart.parse(s) for s in row] for row in rows])

    def __getitem__(self, i):
        return self.N[i]

    def is_zero(self) -> bool:
        return all(is_zero(e) for row in self.N for e in row)


@dataclass(frozen=True)
class VecField:
    """Adapted-frame components: ``X = h[i] delta_i + v[a] d/dy^a``."""

    h: tuple
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "v", tuple(self.v))

    @property
    def comps(self) -> tuple:
        return self.h + self.v

    @classmethod
    def from_comps(cls, comps, n: int) -> "VecField":
        comps = list(comps)
        return cls(comps[:n], comps[n:])

    def __add__(self, other: "VecField") -> "VecField":
        return VecField([ssum([a, b]) for a, b in zip(self.h, other.h)],
                        [ssum([a, b]) for a, b in zip(self.v, other.v)])

    def __sub__(self, other: "VecField") -> "VecField":
        return VecField([ssub(a, b) for a, b in zip(self.h, other.h)],
                        [ssub(a, b) for a, b in zip(self.v, other.v)])

    def __neg__(self) -> "VecField":
        return VecField([0 if is_zero(a) else -a for a in self.h], [0 if is_zero(a) else -a for a in self.v])

    def scale(self, f) -> "VecField":
        return VecField([smul(f, a) for a in self.h], [smul(f, a) for a in self.v])

    def expand(self, *axes: int) -> "VecField":
        """Insert batch axes in jet components (used to form all pairs of field batches)."""
        ex = lambda s: s.expand(*axes) if isinstance(s, Jet) else s
        return VecField([ex(s) for s in self.h], [ex(s) for s in self.v])

    def is_horizontal(self) -> bool:
        return all(is_zero(a) for a in self.v)

    def is_vertical(self) -> bool:
        return all(is_zero(a) for a in self.h)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.comps) + ")"


def zero_field(chart: Chart) -> VecField:
    return VecField([0] * chart.n, [0] * chart.m)


def frame_field(chart: Chart, A: int) -> VecField:
    """Adapted frame field: ``delta_{A}`` for ``A < n`` else ``d/dy^{A-n}``."""
    comps = [ZERO] * chart.dim
    comps[A] = ONE
    return VecField.from_comps(comps, chart.n)


def field_from_strings(chart: Chart, h: Sequence[str], v: Sequence[str]) -> VecField:
    return VecField([chart.parse(s) for s in h], [chart.parse(s) for s in v])


# --------------------------------------------------------------------------
# operations


def delta_derivative(f, i: int, N):
    """``delta f / delta x^i = df/dx^i - N_i^a df/dy^a``."""
    Nrows = N.N if isinstance(N, NonlinearConnection) else N
    n = len(Nrows)
    if not 0 <= i < n:
        raise IndexError(f"horizontal index {i} out of range 0..{n - 1}")
    return ssub(d(f, i), ssum(smul(Nrows[i][a], d(f, n + a)) for a in range(len(Nrows[i]))))


def apply(X: VecField, f, N):
    """Directional derivative X(f)."""
    Nrows = N.N if isinstance(N, NonlinearConnection) else N
    n = len(X.h)
    terms = [smul(X.h[i], delta_derivative(f, i, Nrows)) for i in range(n) if not is_zero(X.h[i])]
    terms += [smul(X.v[a], d(f, n + a)) for a in range(len(X.v)) if not is_zero(X.v[a])]
    return ssum(terms)


def h_proj(X: VecField) -> VecField:
    return VecField(X.h, [0] * len(X.v))


def v_proj(X: VecField) -> VecField:
    return VecField([0] * len(X.h), X.v)


def to_natural(X: VecField, N) -> VecField:
    """Natural-frame components: ``X~^a = X^a - X^i N_i^a``."""
    Nrows = N.N if isinstance(N, NonlinearConnection) else N
    v = [ssub(X.v[a], ssum(smul(X.h[i], Nrows[i][a]) for i in range(len(X.h)))) for a in range(len(X.v))]
    return VecField(X.h, v)


def from_natural(X: VecField, N) -> VecField:
    Nrows = N.N if isinstance(N, NonlinearConnection) else N
    v = [ssum([X.v[a], ssum(smul(X.h[i], Nrows[i][a]) for i in range(len(X.h)))]) for a in range(len(X.v))]
    return VecField(X.h, v)


def _natural_apply(Xn: VecField, f):
    n = len(Xn.h)
    return ssum(smul(c, d(f, k)) for k, c in enumerate(Xn.comps) if not is_zero(c))


def bracket(X: VecField, Y: VecField, N) -> VecField:
    """Lie bracket, computed in the natural frame and converted back."""
    Xn = to_natural(X, N)
    Yn = to_natural(Y, N)
    comps = [ssub(_natural_apply(Xn, yc), _natural_apply(Yn, xc)) for xc, yc in zip(Xn.comps, Yn.comps)]
    return from_natural(VecField.from_comps(comps, len(X.h)), N)


def structure_functions(N, n: int, m: int):
    """Adapted-frame brackets ``[e_A, e_B] = c[A][B][C] e_C`` (independent route)."""
    Nrows = N.N if isinstance(N, NonlinearConnection) else N
    dim = n + m
    c = [[[0] * dim for _ in range(dim)] for _ in range(dim)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for a in range(m):
                c[i][j][n + a] = ssub(delta_derivative(Nrows[i][a], j, Nrows), delta_derivative(Nrows[j][a], i, Nrows))
        for b in range(m):
            for a in range(m):
                t = d(Nrows[i][a], n + b)
                c[i][n + b][n + a] = t
                c[n + b][i][n + a] = 0 if is_zero(t) else -t
    return c


# --------------------------------------------------------------------------
# sampling


@dataclass
class Sample:
    """Seeded sample points drawn uniformly from a per-variable box.

    The generator is numpy's PCG64, so a (box, count, seed) triple reproduces
    the same points on every platform.
    """

    chart: Chart
    points: np.ndarray
    seed: int | None = None
    generator: str = "PCG64"
    _spaces: dict = field(default_factory=dict, repr=False)

    @classmethod
    def draw(cls, chart: Chart, count: int, seed: int, box=None) -> "Sample":
        if count < 1:
            raise ValueError("sample count must be >= 1")
        lo, hi = box_bounds(chart, box)
        rng = np.random.Generator(np.random.PCG64(seed))
        pts = lo + (hi - lo) * rng.random((count, chart.dim))
        return cls(chart, pts, seed)

    @classmethod
    def at(cls, chart: Chart, points) -> "Sample":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != chart.dim:
            raise ValueError("point dimension does not match chart")
        return cls(chart, pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def point(self, p: int) -> Point:
        u = self.points[p]
        return Point(u[: self.chart.n], u[self.chart.n:])

    def space(self, order: int) -> JetSpace:
        if order not in self._spaces:
            self._spaces[order] = JetSpace(self.points, order)
        return self._spaces[order]

    def lift(self, e, order: int):
        return self.space(order).lift(e)

    def lift_field(self, X: VecField, order: int) -> VecField:
        sp = self.space(order)
        return VecField([sp.lift(c) for c in X.h], [sp.lift(c) for c in X.v])

    def lift_fields(self, fields: Sequence[VecField], order: int) -> VecField:
        """Stack several fields along one batch axis of jet components."""
        sp = self.space(order)
        comps = []
        for k in range(self.chart.dim):
            col = [sp.lift(X.comps[k]) for X in fields]
            comps.append(stack(col) if any(isinstance(c, Jet) for c in col) else 0)
        return VecField.from_comps(comps, self.chart.n)

    def lift_connection(self, N, order: int):
        Nrows = N.N if isinstance(N, NonlinearConnection) else N
        sp = self.space(order)
        return [[sp.lift(e) for e in row] for row in Nrows]


def box_bounds(chart: Chart, box=None):
    lo = np.full(chart.dim, -1.0)
    hi = np.full(chart.dim, 1.0)
    if box:
        for name, (a, b) in box.items():
            k = chart.names.index(name)
            lo[k], hi[k] = float(a), float(b)
    return lo, hi


def random_polynomial(chart: Chart, rng: np.random.Generator, degree: int = 2, terms: int = 4, scale: float = 1.0) -> Expr:
    """A sparse random polynomial with coefficients in [-scale, scale]."""
    e: Expr = Const(round(float(rng.uniform(-scale, scale)), 3))
    for _ in range(terms):
        deg = int(rng.integers(1, degree + 1))
        mono: Expr = Const(round(float(rng.uniform(-scale, scale)), 3))
        for v in rng.integers(0, chart.dim, size=deg):
            mono = mono * Var(int(v), chart.names[int(v)])
        e = e + mono
    return e


def spanning_fields(chart: Chart, seed: int = 0, n_random: int = 8, degree: int = 2):
    """Test fields: the adapted frame, coordinate-modulated frame fields and
    seeded random polynomial fields.  Returns ``(names, fields)``."""
    names, fields = [], []
    for A in range(chart.dim):
        names.append(f"e{A + 1}")
        fields.append(frame_field(chart, A))
    for A in range(chart.dim):
        u = Var(A, chart.names[A])
        names.append(f"(1+{chart.names[A]})e{A + 1}")
        fields.append(frame_field(chart, A).scale(ONE + u))
    rng = np.random.Generator(np.random.PCG64(seed))
    for r in range(n_random):
        names.append(f"rand{r + 1}")
        fields.append(VecField.from_comps([random_polynomial(chart, rng, degree) for _ in range(chart.dim)], chart.n))
    return names, fields
