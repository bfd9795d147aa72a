"""Lie derivatives, the Nijenhuis tensor, normality tensors and classification."""
from __future__ import annotations

from dataclasses import dataclass, field

from .bundle import Sample, VecField, apply, bracket, h_proj, smul, ssub, ssum, v_proj
from .dtensor import OneForm, d_oneform
from .residual import DEFAULT_TOL, PreconditionError, Report, Residual, combine, measure
from .structure import (PacStructure, check_axioms, check_compatibility, check_paracontact_metric,
                        default_sample, lifted, pairs)


# --------------------------------------------------------------------------
# Lie derivatives


def lie_vec(X: VecField, Y: VecField, N) -> VecField:
    return bracket(X, Y, N)


def lie_oneform(X: VecField, w: OneForm, Y: VecField, N):
    """``(L_X w)(Y) = X(w(Y)) - w([X, Y])``."""
    return ssub(apply(X, w(Y), N), w(bracket(X, Y, N)))


def lie_metric(X: VecField, G, Y: VecField, Z: VecField, N):
    """``(L_X G)(Y, Z) = X(G(Y, Z)) - G([X, Y], Z) - G(Y, [X, Z])``."""
    return ssub(apply(X, G(Y, Z), N), ssum([G(bracket(X, Y, N), Z), G(Y, bracket(X, Z, N))]))


def lie_phi(X: VecField, S: PacStructure, Y: VecField, N) -> VecField:
    """``(L_X phi) Y = [X, phi Y] - phi [X, Y]``."""
    return bracket(X, S.phi(Y), N) - S.phi(bracket(X, Y, N))


def nijenhuis(S: PacStructure, X: VecField, Y: VecField, N=None) -> VecField:
    """``phi^2 [X, Y] + [phi X, phi Y] - phi [phi X, Y] - phi [X, phi Y]``."""
    N = S.Nrows if N is None else N
    p = S.phi
    pX, pY = p(X), p(Y)
    return p(p(bracket(X, Y, N))) + bracket(pX, pY, N) - p(bracket(pX, Y, N)) - p(bracket(X, pY, N))


def n1(S: PacStructure, X: VecField, Y: VecField) -> VecField:
    N = S.Nrows
    return (nijenhuis(S, X, Y) - S.xi_h.scale(d_oneform(S.eta_h, X, Y, N))
            - S.xi_v.scale(d_oneform(S.eta_v, X, Y, N)))


def n2(S: PacStructure, X: VecField, Y: VecField):
    """Returns the three cases ``(HH, VV, VH)`` evaluated on projections of X, Y."""
    N = S.Nrows
    XH, XV, YH, YV = h_proj(X), v_proj(X), h_proj(Y), v_proj(Y)
    eH, eV = S.eta_h, S.eta_v
    p = S.phi
    hh = ssub(lie_oneform(p(XH), eH, YH, N), lie_oneform(p(YH), eH, XH, N))
    vv = ssub(lie_oneform(p(XV), eV, YV, N), lie_oneform(p(YV), eV, XV, N))
    vh = ssub(ssum([lie_oneform(p(XV), eH, YH, N), lie_oneform(p(XV), eV, YH, N)]),
              ssum([lie_oneform(p(YH), eH, XV, N), lie_oneform(p(YH), eV, XV, N)]))
    return hh, vv, vh


N34_CASES = (
    ("xi^H,X^H", "h", "h"),
    ("xi^V,X^V", "v", "v"),
    ("xi^V,X^H", "v", "h"),
    ("xi^H,X^V", "h", "v"),
)


def n3_n4(S: PacStructure, X: VecField):
    """Per case: ``((L_xi phi) X, (L_xi eta) X)`` with the case's xi block and X projection."""
    N = S.Nrows
    out = {}
    for label, xb, pb in N34_CASES:
        xi = S.xi_h if xb == "h" else S.xi_v
        Xp = h_proj(X) if pb == "h" else v_proj(X)
        eta = S.eta_h if pb == "h" else S.eta_v
        out[label] = (lie_phi(xi, S, Xp, N), lie_oneform(xi, eta, Xp, N))
    return out


@dataclass
class NormalityReport:
    """Max residuals of the four normality tensors with per-case detail."""

    cases: Report = field(default_factory=Report)

    def tensor(self, k: int) -> Residual:
        return combine(f"N{k}", [r for r in self.cases if r.name.startswith(f"N{k}")])

    @property
    def N1(self) -> float:
        return self.tensor(1).value

    @property
    def N2(self) -> float:
        return self.tensor(2).value

    @property
    def N3(self) -> float:
        return self.tensor(3).value

    @property
    def N4(self) -> float:
        return self.tensor(4).value

    def summary(self) -> Report:
        return Report([self.tensor(k) for k in (1, 2, 3, 4)])


def normality_tensors(S: PacStructure, sample: Sample | None = None, fields=None,
                      tol: float = DEFAULT_TOL, require: bool = True) -> NormalityReport:
    sample = default_sample(S.chart, sample)
    if require:
        ax = check_axioms(S, sample, fields)
        if not ax.ok(tol):
            raise PreconditionError(f"axioms fail: {ax.worst().name}")
    L, names, F = lifted(S, sample, fields, 1)
    X, Y = pairs(F)
    ax2 = [names, names]
    rep = NormalityReport()
    rep.cases.add(measure("N1(X,Y)", n1(L, X, Y), sample, ax2))
    for tag, val in zip(("X^H,Y^H", "X^V,Y^V", "X^V,Y^H"), n2(L, X, Y)):
        rep.cases.add(measure(f"N2({tag})", val, sample, ax2))
    for label, (v3, v4) in n3_n4(L, F).items():
        rep.cases.add(measure(f"N3({label})", v3, sample, [names]))
        rep.cases.add(measure(f"N4({label})", v4, sample, [names]))
    return rep


def _killing(S: PacStructure, sample, fields, block: str) -> Residual:
    L, names, F = lifted(S, sample, fields, 1)
    X, Y = pairs(F)
    if block == "h":
        xi, G, P = L.xi_h, L.G.H, h_proj
    else:
        xi, G, P = L.xi_v, L.G.V, v_proj
    val = lie_metric(xi, G, X, Y, L.Nrows)
    tag = block.upper()
    return measure(f"(L_xi^{tag} G^{tag})(X,Y)", val, sample, [names, names])


def is_killing_h(S: PacStructure, sample: Sample | None = None, fields=None,
                 tol: float = DEFAULT_TOL, require: bool = True) -> Residual:
    sample = default_sample(S.chart, sample)
    if require:
        _require_pcm(S, sample, fields, tol)
    return _killing(S, sample, fields, "h")


def is_killing_v(S: PacStructure, sample: Sample | None = None, fields=None,
                 tol: float = DEFAULT_TOL, require: bool = True) -> Residual:
    sample = default_sample(S.chart, sample)
    if require:
        _require_pcm(S, sample, fields, tol)
    return _killing(S, sample, fields, "v")


def _require_pcm(S, sample, fields, tol):
    rep = check_paracontact_metric(S, sample, fields, tol, require=False)
    if not (rep.ok(tol) and check_compatibility(S, sample, fields, require=False).ok(tol)):
        raise PreconditionError("structure is not paracontact metric")


# --------------------------------------------------------------------------
# classification


LADDER = ("almost paracontact", "almost paracontact metric", "paracontact metric",
          "K-paracontact", "normal", "para-Sasakian")


@dataclass
class Rung:
    name: str
    holds: bool
    residual: float
    witness: Residual | None = None

    def as_dict(self) -> dict:
        d = {"name": self.name, "holds": self.holds, "residual": self.residual}
        if self.witness is not None:
            d["witness"] = self.witness.as_dict()
        return d


@dataclass
class Classification:
    rungs: list
    consistency: list  # (statement, holds)
    normality: NormalityReport | None = None
    killing: tuple = ()

    def __getitem__(self, name: str) -> bool:
        for r in self.rungs:
            if r.name == name:
                return r.holds
        raise KeyError(name)

    def rung(self, name: str) -> Rung:
        return next(r for r in self.rungs if r.name == name)

    @property
    def consistent(self) -> bool:
        return all(ok for _, ok in self.consistency)

    def as_dict(self) -> dict:
        return {"ladder": [r.as_dict() for r in self.rungs],
                "consistency": [{"statement": s, "holds": ok} for s, ok in self.consistency]}


def classify(S: PacStructure, sample: Sample | None = None, fields=None, tol: float = DEFAULT_TOL) -> Classification:
    """All rungs are evaluated and reported with residuals; each rung also
    requires the rungs it builds on."""
    sample = default_sample(S.chart, sample)
    ax = check_axioms(S, sample, fields)
    comp = check_compatibility(S, sample, fields, require=False)
    pcm = check_paracontact_metric(S, sample, fields, require=False)
    kh = _killing(S, sample, fields, "h")
    kv = _killing(S, sample, fields, "v")
    nt = normality_tensors(S, sample, fields, require=False)

    w = lambda rep: rep.worst()
    almost = ax.ok(tol)
    metric = almost and comp.ok(tol)
    para = metric and pcm.ok(tol)
    kill = max(kh.value, kv.value)
    killw = kh if kh.value >= kv.value else kv
    kpar = para and kill < tol
    normal = almost and nt.N1 < tol
    sas = para and normal
    rungs = [
        Rung(LADDER[0], almost, ax.max, w(ax)),
        Rung(LADDER[1], metric, comp.max, w(comp)),
        Rung(LADDER[2], para, pcm.max, w(pcm)),
        Rung(LADDER[3], kpar, kill, killw),
        Rung(LADDER[4], normal, nt.N1, nt.tensor(1)),
        Rung(LADDER[5], sas, max(pcm.max, nt.N1), None),
    ]
    cons = [
        ("para-Sasakian implies K-paracontact", (not sas) or kpar),
        ("paracontact metric implies N2 = N4 = 0", (not para) or (nt.N2 < tol and nt.N4 < tol)),
        ("given paracontact metric: K-paracontact iff N3 = 0", (not para) or (kpar == (nt.N3 < tol))),
        ("N1 = 0 implies N2 = N3 = N4 = 0",
         (not normal) or (nt.N2 < tol and nt.N3 < tol and nt.N4 < tol)),
    ]
    return Classification(rungs, cons, nt, (kh, kv))
