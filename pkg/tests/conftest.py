from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from pacfin.bundle import Chart, Sample
from pacfin.connection import canonical_connection
from pacfin.expr import Const, Var, func
from pacfin.instances import REGISTRY

CHART = Chart(1, 1)


def polynomials(chart: Chart = CHART, max_leaves: int = 12):
    """Random polynomial expressions (degree grows with depth)."""
    leaf = st.one_of(
        st.integers(-4, 4).map(lambda k: Const(float(k))),
        st.integers(0, chart.dim - 1).map(lambda i: Var(i, chart.names[i])),
    )

    def grow(children):
        return st.one_of(
            st.tuples(children, children).map(lambda t: t[0] + t[1]),
            st.tuples(children, children).map(lambda t: t[0] - t[1]),
            st.tuples(children, children).map(lambda t: t[0] * t[1]),
            st.tuples(children, st.integers(0, 3)).map(lambda t: t[0] ** t[1]),
        )

    return st.recursive(leaf, grow, max_leaves=max_leaves)


def smooth_expressions(chart: Chart = CHART):
    """Expressions that are smooth on the whole chart (no log, sqrt or division)."""
    names = ("sin", "cos", "sinh", "cosh", "exp")
    base = polynomials(chart, max_leaves=6)
    return st.one_of(base, st.tuples(st.sampled_from(names), base).map(lambda t: func(t[0], t[1] * Const(0.3))))


def points(chart: Chart = CHART, count: int = 20, seed: int = 0) -> np.ndarray:
    return Sample.draw(chart, count, seed).points


@pytest.fixture(scope="session")
def chart() -> Chart:
    return CHART


@pytest.fixture(scope="session")
def sample() -> Sample:
    return Sample.draw(CHART, 64, 1)


@pytest.fixture(scope="session")
def instances():
    """Every registered instance with its canonical connection, built once."""
    out = {}
    for name, make in REGISTRY.items():
        S = make()
        out[name] = (S, canonical_connection(S.G, S.N))
    return out


def values(X, U) -> np.ndarray:
    """Components of a symbolic field (or a scalar) at the rows of U, shape (P, dim) or (P,)."""
    from pacfin.bundle import VecField, is_zero
    from pacfin.expr import as_expr, evaluate_many

    def ev(c):
        return np.zeros(len(U)) if is_zero(c) else np.broadcast_to(evaluate_many(as_expr(c), U), (len(U),))

    if isinstance(X, VecField):
        return np.stack([ev(c) for c in X.comps], axis=-1)
    return ev(X)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
