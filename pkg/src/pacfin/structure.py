"""Almost paracontact structures ``(phi, eta, xi, G)`` and their algebraic checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import (Chart, NonlinearConnection, Point, Sample, VecField, bracket, h_proj,
                     is_zero, smul, spanning_fields, ssub, ssum, v_proj)
from .dtensor import Metric, OneForm, component, d_oneform, metric_apply
from .expr import evaluate_many
from .residual import DEFAULT_TOL, PreconditionError, Report, Residual, measure

RANK_TOL = 1e-8


@dataclass(frozen=True)
class PacStructure:
    """The quadruple on one chart, together with the nonlinear connection.

    ``phi_h[i][j]`` is ``phi^i_j`` (row = output index).  Components are Exprs
    for a symbolic structure, or jets after :meth:`lift`.
    """

    chart: Chart
    N: object
    phi_h: tuple
    phi_v: tuple
    eta: OneForm
    xi: VecField
    G: Metric

    def __post_init__(self):
        n, m = self.chart.n, self.chart.m
        object.__setattr__(self, "phi_h", tuple(tuple(component(e) for e in r) for r in self.phi_h))
        object.__setattr__(self, "phi_v", tuple(tuple(component(e) for e in r) for r in self.phi_v))
        shapes = {
            "phi_h": (len(self.phi_h), {len(r) for r in self.phi_h}, n),
            "phi_v": (len(self.phi_v), {len(r) for r in self.phi_v}, m),
            "metric_g": (len(self.G.g), {len(r) for r in self.G.g}, n),
            "metric_h": (len(self.G.h), {len(r) for r in self.G.h}, m),
        }
        for name, (rows, cols, want) in shapes.items():
            if rows != want or cols != {want}:
                raise ValueError(f"{name} must be {want}x{want}")
        if len(self.eta.h) != n or len(self.eta.v) != m or len(self.xi.h) != n or len(self.xi.v) != m:
            raise ValueError("eta and xi must have n horizontal and m vertical components")

    @classmethod
    def from_strings(cls, chart: Chart, *, N=None, phi_h, phi_v, eta_h, eta_v, xi_h, xi_v, g, h) -> "PacStructure":
        p = chart.parse
        conn = NonlinearConnection.zero(chart) if N is None else NonlinearConnection.from_strings(chart, N)
        mat = lambda rows: [[p(str(s)) for s in r] for r in rows]
        vec = lambda v: [p(str(s)) for s in v]
        return cls(chart, conn, mat(phi_h), mat(phi_v), OneForm(vec(eta_h), vec(eta_v)),
                   VecField(vec(xi_h), vec(xi_v)), Metric(mat(g), mat(h)))

    # -- actions
    def phi(self, X: VecField) -> VecField:
        return VecField([ssum(smul(r[j], X.h[j]) for j in range(len(X.h))) for r in self.phi_h],
                        [ssum(smul(r[b], X.v[b]) for b in range(len(X.v))) for r in self.phi_v])

    @property
    def xi_h(self) -> VecField:
        return h_proj(self.xi)

    @property
    def xi_v(self) -> VecField:
        return v_proj(self.xi)

    @property
    def eta_h(self) -> OneForm:
        return self.eta.H

    @property
    def eta_v(self) -> OneForm:
        return self.eta.V

    @property
    def Nrows(self):
        return self.N.N if isinstance(self.N, NonlinearConnection) else self.N

    def Phi(self, X: VecField, Y: VecField):
        """Fundamental form ``G(X, phi Y)``."""
        return metric_apply(self.G, X, self.phi(Y))

    def lift(self, sample: Sample, order: int) -> "PacStructure":
        """The same structure with jet components at the sample points."""
        sp = sample.space(order)
        L = lambda rows: [[sp.lift(e) for e in r] for r in rows]
        Lv = lambda v: [sp.lift(e) for e in v]
        return PacStructure(self.chart, sample.lift_connection(self.N, order), L(self.phi_h), L(self.phi_v),
                            OneForm(Lv(self.eta.h), Lv(self.eta.v)), VecField(Lv(self.xi.h), Lv(self.xi.v)),
                            Metric(L(self.G.g), L(self.G.h)))

    def phi_matrix(self, points) -> np.ndarray:
        """Block matrix of phi at points, shape ``(P, n+m, n+m)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n, dim = self.chart.n, self.chart.dim
        out = np.zeros((pts.shape[0], dim, dim))
        for off, rows in ((0, self.phi_h), (n, self.phi_v)):
            for i, r in enumerate(rows):
                for j, e in enumerate(r):
                    if not is_zero(e):
                        out[:, off + i, off + j] = evaluate_many(e, pts)
        return out


# --------------------------------------------------------------------------
# test-field plumbing


def default_sample(chart: Chart, sample: Sample | None) -> Sample:
    return sample if sample is not None else Sample.draw(chart, 64, 0)


def test_fields(chart: Chart, fields=None):
    """``(names, fields)``; defaults to the spanning set."""
    if fields is None:
        return spanning_fields(chart)
    if isinstance(fields, tuple) and len(fields) == 2 and isinstance(fields[0], (list, tuple)) \
            and fields[0] and isinstance(fields[0][0], str):
        return fields
    fields = list(fields)
    return [f"X{k + 1}" for k in range(len(fields))], fields


def lifted(S: PacStructure, sample: Sample, fields, order: int):
    names, flds = test_fields(S.chart, fields)
    return S.lift(sample, order), names, sample.lift_fields(flds, order)


def pairs(F: VecField):
    """``(X, Y)`` broadcasting over all ordered pairs of a field batch."""
    return F.expand(1), F.expand(0)


# --------------------------------------------------------------------------
# checks


def axiom_terms(S: PacStructure, X: VecField) -> VecField:
    """``phi^2 X - X + eta^H(X) xi^H + eta^V(X) xi^V``."""
    lhs = S.phi(S.phi(X)) - X
    return lhs + S.xi_h.scale(S.eta_h(X)) + S.xi_v.scale(S.eta_v(X))


def check_axioms(S: PacStructure, sample: Sample | None = None, fields=None) -> Report:
    sample = default_sample(S.chart, sample)
    L, names, F = lifted(S, sample, fields, 0)
    rep = Report()
    rep.add(measure("phi^2 = I - eta^H xi^H - eta^V xi^V", axiom_terms(L, F), sample, [names]))
    rep.add(measure("eta^H(xi^H) = 1", ssub(L.eta_h(L.xi_h), 1.0), sample))
    rep.add(measure("eta^V(xi^V) = 1", ssub(L.eta_v(L.xi_v), 1.0), sample))
    return rep


def _require(rep: Report, what: str, tol: float):
    if not rep.ok(tol):
        w = rep.worst()
        raise PreconditionError(f"{what} fail: {w.name} residual {w.value:.3e} at {w.point}")


def derived_identities(S: PacStructure, sample: Sample | None = None, fields=None,
                       tol: float = DEFAULT_TOL) -> Report:
    """``phi xi^H``, ``phi xi^V``, ``eta^H o phi``, ``eta^V o phi``; all should vanish."""
    sample = default_sample(S.chart, sample)
    _require(check_axioms(S, sample, fields), "axioms", tol)
    L, names, F = lifted(S, sample, fields, 0)
    rep = Report()
    rep.add(measure("phi(xi^H)", L.phi(L.xi_h), sample))
    rep.add(measure("phi(xi^V)", L.phi(L.xi_v), sample))
    rep.add(measure("eta^H o phi", L.eta_h(L.phi(F)), sample, [names]))
    rep.add(measure("eta^V o phi", L.eta_v(L.phi(F)), sample, [names]))
    return rep


def rank_phi(S: PacStructure, p) -> int:
    u = p.coords if isinstance(p, Point) else np.asarray(p, dtype=float)
    sv = np.linalg.svd(S.phi_matrix(u)[0], compute_uv=False)
    return int(np.sum(sv > RANK_TOL))


def check_rank(S: PacStructure, sample: Sample | None = None) -> Residual:
    """Deviation of the rank of phi from ``2(k1 + k2)``, worst over the sample."""
    sample = default_sample(S.chart, sample)
    want = 2 * (S.chart.k1 + S.chart.k2)
    sv = np.linalg.svd(S.phi_matrix(sample.points), compute_uv=False)
    dev = np.abs(np.sum(sv > RANK_TOL, axis=-1) - want).astype(float)
    return measure("rank phi = 2(k1+k2)", dev, sample)


def kernel_defect(S: PacStructure, p, zeta) -> float:
    """Norm of ``zeta - eta^H(zeta) xi^H - eta^V(zeta) xi^V`` at a point (numeric vectors)."""
    u = p.coords if isinstance(p, Point) else np.asarray(p, dtype=float)
    n = S.chart.n
    ev = lambda e: 0.0 if is_zero(e) else float(evaluate_many(e, u[None, :])[0])
    eh = np.array([ev(e) for e in S.eta.h])
    ev_ = np.array([ev(e) for e in S.eta.v])
    xh = np.array([ev(e) for e in S.xi.h])
    xv = np.array([ev(e) for e in S.xi.v])
    z = np.asarray(zeta, dtype=float)
    r = z.copy()
    r[:n] -= (eh @ z[:n]) * xh
    r[n:] -= (ev_ @ z[n:]) * xv
    return float(np.max(np.abs(r)))


def check_compatibility(S: PacStructure, sample: Sample | None = None, fields=None,
                        tol: float = DEFAULT_TOL, require: bool = True) -> Report:
    sample = default_sample(S.chart, sample)
    if require:
        _require(check_axioms(S, sample, fields), "axioms", tol)
    L, names, F = lifted(S, sample, fields, 0)
    X, Y = pairs(F)
    G = L.G
    rep = Report()
    for tag, P, e in (("H", h_proj, L.eta_h), ("V", v_proj, L.eta_v)):
        Xp, Yp = P(X), P(Y)
        val = ssub(ssum([G(L.phi(Xp), L.phi(Yp)), G(Xp, Yp)]), smul(e(X), e(Y)))
        rep.add(measure(f"G^{tag}(phiX,phiY) + G^{tag}(X,Y) - eta^{tag}(X)eta^{tag}(Y)", val, sample, [names, names]))
    rep.add(measure("G(X^H,xi^H) = eta^H(X)", ssub(G(h_proj(F), L.xi_h), L.eta_h(F)), sample, [names]))
    rep.add(measure("G(X^V,xi^V) = eta^V(X)", ssub(G(v_proj(F), L.xi_v), L.eta_v(F)), sample, [names]))
    rep.add(measure("G(phiX,Y) + G(X,phiY)", ssum([G(L.phi(X), Y), G(X, L.phi(Y))]), sample, [names, names]))
    return rep


def fundamental_form(S: PacStructure):
    """``Phi(X, Y) = G(X, phi Y)`` as a bilinear action."""
    return S.Phi


def check_paracontact_metric(S: PacStructure, sample: Sample | None = None, fields=None,
                             tol: float = DEFAULT_TOL, require: bool = True) -> Report:
    sample = default_sample(S.chart, sample)
    if require:
        _require(check_compatibility(S, sample, fields, tol), "compatibility", tol)
    L, names, F = lifted(S, sample, fields, 1)
    X, Y = pairs(F)
    N = L.Nrows
    XH, YH, XV, YV = h_proj(X), h_proj(Y), v_proj(X), v_proj(Y)
    ax = [names, names]
    rep = Report()
    rep.add(measure("d eta^H(X,Y) - Phi(X^H,Y^H)", ssub(d_oneform(L.eta_h, X, Y, N), L.Phi(XH, YH)), sample, ax))
    rep.add(measure("d eta^V(X,Y) - Phi(X^V,Y^V)", ssub(d_oneform(L.eta_v, X, Y, N), L.Phi(XV, YV)), sample, ax))
    rep.add(measure("d eta(X^H,Y^V)", d_oneform(L.eta, XH, YV, N), sample, ax))
    rep.add(measure("d eta(X^V,Y^H)", d_oneform(L.eta, XV, YH, N), sample, ax))
    return rep


def signature(B: np.ndarray, tol: float = 1e-10) -> tuple[int, int]:
    w = np.linalg.eigvalsh(0.5 * (B + B.T))
    return int(np.sum(w > tol)), int(np.sum(w < -tol))


def check_signature(S: PacStructure, sample: Sample | None = None) -> Residual:
    """Distance of the block signatures from ``(k1+1, k1)`` and ``(k2+1, k2)``."""
    sample = default_sample(S.chart, sample)
    g, h = S.G.values(sample.points)
    k1, k2 = S.chart.k1, S.chart.k2
    dev = np.zeros(len(sample))
    for p in range(len(sample)):
        sg, sh = signature(g[p]), signature(h[p])
        dev[p] = abs(sg[0] - k1 - 1) + abs(sg[1] - k1) + abs(sh[0] - k2 - 1) + abs(sh[1] - k2)
    return measure("signature (k+1, k)", dev, sample)
