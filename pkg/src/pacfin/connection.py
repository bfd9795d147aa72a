"""The canonical metrical d-connection and its covariant derivatives.

Coefficients are kept as symbolic numerators ``K`` with
``Gamma = (metric inverse) . K`` taken point by point:

* ``F_ij^k   = g^kl K_ijl``,  ``K_ijl = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)``
* ``Fb_ib^c  = h^cd K_ibd``,  ``K_ibd = 1/2 (d_i h_bd + h_ed d_b N_i^e - h_be d_d N_i^e)``
* ``C_aj^k   = g^kl K_ajl``,  ``K_ajl = 1/2 d_a g_jl``
* ``Cb_ab^c  = h^cd K_abd``,  ``K_abd = 1/2 (d_a h_bd + d_b h_ad - d_d h_ab)``

where ``d_i`` is the delta derivative and ``d_a = d/dy^a``.  The second line
expands ``d_b N_i^c + 1/2 h^cd (d_i h_bd - h_ed d_b N_i^e - h_be d_d N_i^e)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bundle import (Chart, NonlinearConnection, Sample, VecField, apply, bracket, d,
                     delta_derivative, h_proj, is_zero, smul, ssub, ssum, v_proj)
from .dtensor import Metric, SingularBlockError, DET_TOL
from .expr import Const, simplify
from .jet import Jet, einsum, matrix_inverse
from .residual import DEFAULT_TOL, PreconditionError, Report, measure
from .structure import PacStructure, default_sample, lifted, pairs, test_fields

HALF = Const(0.5)


def _half(terms):
    s = ssum(terms)
    return 0 if is_zero(s) else simplify(HALF * s)


@dataclass(frozen=True)
class FinslerConnection:
    chart: Chart
    G: Metric
    N: NonlinearConnection
    K_F: tuple
    K_Fbar: tuple
    K_C: tuple
    K_Cbar: tuple

    def at(self, sample: Sample, order: int) -> "LiftedConnection":
        """Coefficient jets at the sample points (Taylor order ``order``)."""
        sp = sample.space(order)
        n, m = self.chart.n, self.chart.m
        g = _tensor(sp, self.G.g, (n, n))
        h = _tensor(sp, self.G.h, (m, m))
        for name, B in (("horizontal", g), ("vertical", h)):
            det = np.linalg.det(B.value)
            if np.any(np.abs(det) <= DET_TOL):
                p = int(np.argmin(np.abs(det)))
                raise SingularBlockError(f"{name} metric block is singular at {tuple(sample.points[p])}")
        gi, hi = matrix_inverse(g), matrix_inverse(h)
        F = einsum("kl,ijl->ijk", gi, _tensor(sp, self.K_F, (n, n, n)))
        Fb = einsum("cd,ibd->ibc", hi, _tensor(sp, self.K_Fbar, (n, m, m)))
        C = einsum("kl,ajl->ajk", gi, _tensor(sp, self.K_C, (m, n, n)))
        Cb = einsum("cd,abd->abc", hi, _tensor(sp, self.K_Cbar, (m, m, m)))
        dim = n + m
        c = np.zeros((len(sample), dim, dim, dim, F.c.shape[-1]))
        c[:, :n, :n, :n] = F.c
        c[:, :n, n:, n:] = Fb.c
        c[:, n:, :n, :n] = C.c
        c[:, n:, n:, n:] = Cb.c
        return LiftedConnection(self.chart, Jet(c, F.order, F.mono), sample.lift_connection(self.N, order), sample)


def _tensor(sp, nested, shape) -> Jet:
    M = sp.mono.size[sp.order]
    c = np.zeros((sp.npoints,) + tuple(shape) + (M,))
    for idx in product(*[range(s) for s in shape]):
        e = nested
        for k in idx:
            e = e[k]
        j = sp.lift(e)
        if isinstance(j, Jet):
            c[(slice(None),) + idx] = j.c
    return Jet(c, sp.order, sp.mono)


def canonical_connection(G: Metric, N: NonlinearConnection) -> FinslerConnection:
    chart = N.chart
    n, m = chart.n, chart.m
    g, h, Nr = G.g, G.h, N.N
    dl = lambda f, i: delta_derivative(f, i, Nr)
    dy = lambda f, a: d(f, n + a)
    K_F = [[[_half([dl(g[j][l], i), dl(g[i][l], j), _neg(dl(g[i][j], l))])
             for l in range(n)] for j in range(n)] for i in range(n)]
    K_Fbar = [[[_half([dl(h[b][dd], i)]
                      + [smul(h[e][dd], dy(Nr[i][e], b)) for e in range(m)]
                      + [_neg(smul(h[b][e], dy(Nr[i][e], dd))) for e in range(m)])
                for dd in range(m)] for b in range(m)] for i in range(n)]
    K_C = [[[_half([dy(g[j][l], a)]) for l in range(n)] for j in range(n)] for a in range(m)]
    K_Cbar = [[[_half([dy(h[b][dd], a), dy(h[a][dd], b), _neg(dy(h[a][b], dd))])
                for dd in range(m)] for b in range(m)] for a in range(m)]
    return FinslerConnection(chart, G, N, K_F, K_Fbar, K_C, K_Cbar)


def _neg(s):
    # so that "_neg(s)" is the negation of s that keeps structural zeros as 0
    return 0 if is_zero(s) else -s


@dataclass
class LiftedConnection:
    """Coefficient jets ``gamma[A, B, C]`` with ``D_{e_A} e_B = gamma_AB^C e_C``."""

    chart: Chart
    gamma: Jet
    N: list
    sample: Sample

    @property
    def order(self) -> int:
        return self.gamma.order

    def coeff(self, A: int, B: int, C: int) -> Jet:
        return self.gamma[A, B, C]

    def blocks(self):
        """Values ``(F, Fbar, C, Cbar)`` as arrays over the sample points."""
        n = self.chart.n
        G = self.gamma.value
        return G[:, :n, :n, :n], G[:, :n, n:, n:], G[:, n:, :n, :n], G[:, n:, n:, n:]

    def cov(self, X: VecField, Y: VecField) -> VecField:
        """``D_X Y`` with the adapted-frame Leibniz rule."""
        n, dim = self.chart.n, self.chart.dim
        Xc, Yc = X.comps, Y.comps
        out = []
        for C in range(dim):
            lo, hi = (0, n) if C < n else (n, dim)
            terms = [apply(X, Yc[C], self.N)]
            for B in range(lo, hi):
                if is_zero(Yc[B]):
                    continue
                coef = ssum(smul(Xc[A], self.coeff(A, B, C)) for A in range(dim) if not is_zero(Xc[A]))
                terms.append(smul(coef, Yc[B]))
            out.append(ssum(terms))
        return VecField.from_comps(out, n)


def cov_deriv(D: LiftedConnection, X: VecField, Y: VecField) -> VecField:
    return D.cov(X, Y)


def cov_deriv_phi(D: LiftedConnection, S: PacStructure, X: VecField, Y: VecField) -> VecField:
    """``(D_X phi) Y = D_X (phi Y) - phi (D_X Y)``; S must be lifted."""
    return D.cov(X, S.phi(Y)) - S.phi(D.cov(X, Y))


def torsion(D: LiftedConnection, X: VecField, Y: VecField) -> VecField:
    return D.cov(X, Y) - D.cov(Y, X) - bracket(X, Y, D.N)


def torsion_blocks(D: LiftedConnection, X: VecField, Y: VecField) -> dict:
    XH, XV, YH, YV = h_proj(X), v_proj(X), h_proj(Y), v_proj(Y)
    hh = torsion(D, XH, YH)
    hv = torsion(D, XH, YV)
    return {
        "T^H(X^H,Y^H)": h_proj(hh),
        "T^V(X^H,Y^H)": v_proj(hh),
        "T^H(X^H,Y^V)": h_proj(hv),
        "T^V(X^H,Y^V)": v_proj(hv),
        "T^V(X^V,Y^V)": v_proj(torsion(D, XV, YV)),
    }


# --------------------------------------------------------------------------
# verification


def triple_fields(chart: Chart, fields=None):
    """Fields used for three-argument checks: the random part of the spanning set.

    Every three-argument identity checked here is tensorial or an exact
    identity, so eight generic fields exercise all index combinations while
    keeping the batch at 512 triples.
    """
    names, flds = test_fields(chart, fields)
    if fields is None:
        keep = [k for k, nm in enumerate(names) if nm.startswith("rand")]
        names, flds = [names[k] for k in keep], [flds[k] for k in keep]
    return names, flds


def metricity(FC: FinslerConnection, sample: Sample | None = None, fields=None) -> Report:
    """``X(G^T(Y, Z)) - G^T(D_X Y, Z) - G^T(Y, D_X Z)`` for T in {H, V} and X, Y, Z in {H, V}^3."""
    sample = default_sample(FC.chart, sample)
    names, flds = triple_fields(FC.chart, fields)
    D = FC.at(sample, 1)
    F = sample.lift_fields(flds, 1)
    X, Y, Z = F.expand(1, 2), F.expand(0, 2), F.expand(0, 1)
    sp = sample.space(1)
    G = Metric([[sp.lift(e) for e in r] for r in FC.G.g], [[sp.lift(e) for e in r] for r in FC.G.h])
    rep = Report()
    proj = {"H": h_proj, "V": v_proj}
    for T, GT in (("H", G.H), ("V", G.V)):
        for a, b, c in product("HV", repeat=3):
            Xp, Yp, Zp = proj[a](X), proj[b](Y), proj[c](Z)
            val = ssub(apply(Xp, GT(Yp, Zp), D.N), ssum([GT(D.cov(Xp, Yp), Zp), GT(Yp, D.cov(Xp, Zp))]))
            rep.add(measure(f"(D G^{T})(X^{a},Y^{b},Z^{c})", val, sample, [names] * 3))
    return rep


def koszul(FC: FinslerConnection, sample: Sample | None = None, fields=None) -> Report:
    """Both Koszul identities, right sides evaluated term by term."""
    sample = default_sample(FC.chart, sample)
    names, flds = triple_fields(FC.chart, fields)
    D = FC.at(sample, 1)
    F = sample.lift_fields(flds, 1)
    X, Y, Z = F.expand(1, 2), F.expand(0, 2), F.expand(0, 1)
    sp = sample.space(1)
    G = Metric([[sp.lift(e) for e in r] for r in FC.G.g], [[sp.lift(e) for e in r] for r in FC.G.h])
    N = D.N
    rep = Report()
    for tag, P in (("H", h_proj), ("V", v_proj)):
        Xp, Yp, Zp = P(X), P(Y), P(Z)
        lhs = smul(2.0, G(D.cov(Xp, Yp), Zp))
        plus = ssum([apply(Xp, G(Yp, Zp), N), apply(Yp, G(Xp, Zp), N), G(bracket(Xp, Yp, N), Zp)])
        minus = ssum([apply(Zp, G(Xp, Yp), N), G(bracket(Xp, Zp, N), Yp), G(bracket(Yp, Zp, N), Xp)])
        rep.add(measure(f"Koszul {tag}", ssub(lhs, ssub(plus, minus)), sample, [names] * 3))
    return rep


def check_torsion(FC: FinslerConnection, sample: Sample | None = None, fields=None) -> Report:
    sample = default_sample(FC.chart, sample)
    names, flds = test_fields(FC.chart, fields)
    D = FC.at(sample, 1)
    F = sample.lift_fields(flds, 1)
    X, Y = pairs(F)
    T = torsion_blocks(D, X, Y)
    rep = Report()
    rep.add(measure("(h)h-torsion", T["T^H(X^H,Y^H)"], sample, [names, names]))
    rep.add(measure("(v)v-torsion", T["T^V(X^V,Y^V)"], sample, [names, names]))
    rep.add(measure("(v)h-torsion + [X^H,Y^H]^V",
                    T["T^V(X^H,Y^H)"] + v_proj(bracket(h_proj(X), h_proj(Y), D.N)), sample, [names, names]))
    return rep


def block_preservation(FC: FinslerConnection, sample: Sample | None = None, fields=None) -> Report:
    sample = default_sample(FC.chart, sample)
    names, flds = test_fields(FC.chart, fields)
    D = FC.at(sample, 1)
    F = sample.lift_fields(flds, 1)
    X, Y = pairs(F)
    rep = Report()
    rep.add(measure("h(D_X Y^V)", h_proj(D.cov(X, v_proj(Y))), sample, [names, names]))
    rep.add(measure("v(D_X Y^H)", v_proj(D.cov(X, h_proj(Y))), sample, [names, names]))
    return rep


def check_killing_criteria(FC: FinslerConnection, S: PacStructure, sample: Sample | None = None, fields=None,
                  tol: float = DEFAULT_TOL, require: bool = True) -> Report:
    """The four clauses characterizing K-paracontact structures."""
    from .structure import check_paracontact_metric

    sample = default_sample(S.chart, sample)
    if require and not check_paracontact_metric(S, sample, fields, tol, require=False).ok(tol):
        raise PreconditionError("structure is not paracontact metric")
    L, names, F = lifted(S, sample, fields, 1)
    D = FC.at(sample, 1)
    X, Y = pairs(F)
    N = L.Nrows
    rep = Report()
    XH, XV = h_proj(F), v_proj(F)
    rep.add(measure("(i) D_X^H xi^H + 1/2 phi X^H", D.cov(XH, L.xi_h) + L.phi(XH).scale(0.5), sample, [names]))
    rep.add(measure("(ii) G^H([xi^H,X^V]^H, Y^H)",
                    L.G.H(h_proj(bracket(L.xi_h, v_proj(X), N)), h_proj(Y)), sample, [names, names]))
    rep.add(measure("(iii) D_X^V xi^V + 1/2 phi X^V", D.cov(XV, L.xi_v) + L.phi(XV).scale(0.5), sample, [names]))
    rep.add(measure("(iv) G^V([xi^V,X^H]^V, Y^V)",
                    L.G.V(v_proj(bracket(L.xi_v, h_proj(X), N)), v_proj(Y)), sample, [names, names]))
    return rep


def check_dxi_chain(FC: FinslerConnection, S: PacStructure, sample: Sample | None = None, fields=None) -> Report:
    """``2 G(D_X^H xi^H, Y^H) - d eta(X^H, Y^H)`` and its vertical analogue."""
    from .dtensor import d_oneform

    sample = default_sample(S.chart, sample)
    L, names, F = lifted(S, sample, fields, 1)
    D = FC.at(sample, 1)
    X, Y = pairs(F)
    rep = Report()
    for tag, P, xi in (("H", h_proj, L.xi_h), ("V", v_proj, L.xi_v)):
        Xp, Yp = P(X), P(Y)
        val = ssub(smul(2.0, L.G(D.cov(Xp, xi), Yp)), d_oneform(L.eta, Xp, Yp, L.Nrows))
        rep.add(measure(f"2G(D_X xi^{tag}, Y^{tag}) - d eta(X^{tag},Y^{tag})", val, sample, [names, names]))
    return rep


def check_xi_parallel_phi(FC: FinslerConnection, S: PacStructure, sample: Sample | None = None, fields=None) -> Report:
    """``D_{xi^H} phi = 0`` and ``D_{xi^V} phi = 0``."""
    sample = default_sample(S.chart, sample)
    L, names, F = lifted(S, sample, fields, 1)
    D = FC.at(sample, 1)
    rep = Report()
    rep.add(measure("(D_xi^H phi)X", cov_deriv_phi(D, L, L.xi_h, F), sample, [names]))
    rep.add(measure("(D_xi^V phi)X", cov_deriv_phi(D, L, L.xi_v, F), sample, [names]))
    return rep


def phi_derivative_identity(FC: FinslerConnection, S: PacStructure, sample: Sample | None = None, fields=None,
                            tol: float = DEFAULT_TOL, require: bool = True) -> Report:
    """``2G((D_X phi)Y, Z)`` against its expansion through dPhi, N1, N2 and d eta.

    Valid on any almost paracontact metric structure, per block (X, Y, Z all
    horizontal or all vertical).  Each right-hand term is evaluated on its own
    from the fundamental form, the normality tensors and d eta.
    """
    from .calculus import n1, n2
    from .dtensor import d_oneform, d_twoform
    from .structure import check_axioms, check_compatibility

    sample = default_sample(S.chart, sample)
    if require and not (check_axioms(S, sample, fields).ok(tol)
                        and check_compatibility(S, sample, fields, require=False).ok(tol)):
        raise PreconditionError("structure is not almost paracontact metric")
    names, flds = triple_fields(S.chart, fields)
    L = S.lift(sample, 1)
    D = FC.at(sample, 1)
    F = sample.lift_fields(flds, 1)
    N = L.Nrows
    rep = Report()
    for tag, P, eta, k in (("H", h_proj, L.eta_h, 0), ("V", v_proj, L.eta_v, 1)):
        X, Y, Z = P(F.expand(1, 2)), P(F.expand(0, 2)), P(F.expand(0, 1))
        pX, pY, pZ = L.phi(X), L.phi(Y), L.phi(Z)
        lhs = smul(2.0, L.G(cov_deriv_phi(D, L, X, Y), Z))
        rhs = ssum([
            smul(-1.0, d_twoform(L.Phi, X, pY, pZ, N)),
            smul(-1.0, d_twoform(L.Phi, X, Y, Z, N)),
            smul(-1.0, L.G(n1(L, Y, Z), pX)),
            smul(n2(L, Y, Z)[k], eta(X)),
            smul(d_oneform(eta, pY, X, N), eta(Z)),
            smul(-1.0, smul(d_oneform(eta, pZ, X, N), eta(Y))),
        ])
        rep.add(measure(f"2G((D_X^{tag} phi)Y^{tag}, Z^{tag}) - expansion", ssub(lhs, rhs), sample,
                        [names, names, names]))
    return rep
