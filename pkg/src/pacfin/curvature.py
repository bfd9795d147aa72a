"""Curvature of the canonical connection and the curvature identities of
paracontact structures.

The curvature tensor is assembled in the adapted frame ``e_A``:

    R(e_A, e_B) e_C = R_ABC^D e_D
    R_ABC^D = e_A(G_BC^D) - e_B(G_AC^D) + G_BC^E G_AE^D - G_AC^E G_BE^D - c_AB^E G_EC^D

with ``G`` the connection coefficients and ``[e_A, e_B] = c_AB^E e_E``.  Every
identity checked here is tensorial, so it is evaluated on point values of the
tensors and of test vectors.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .bundle import Sample, VecField, structure_functions
from .connection import FinslerConnection, LiftedConnection, _tensor
from .jet import Jet, einsum, stack
from .residual import DEFAULT_TOL, Residual, measure
from .structure import PacStructure, default_sample, test_fields

PIVOT_TOL = 1e-10


class FrameError(ArithmeticError):
    pass


class DegeneratePlaneError(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# tensors at points


def frame_matrix(D: LiftedConnection) -> Jet:
    """Natural-frame components ``E[A, k]`` of the adapted frame."""
    n, dim = D.chart.n, D.chart.dim
    sp = D.sample.space(D.order)
    c = np.zeros((len(D.sample), dim, dim, sp.mono.size[D.order]))
    c[:, np.arange(dim), np.arange(dim), 0] = 1.0
    for i in range(n):
        for a in range(D.chart.m):
            Nia = D.N[i][a]
            if isinstance(Nia, Jet):
                c[:, i, n + a] = -Nia.c
    return Jet(c, D.order, sp.mono)


def frame_derivative(J: Jet, E: Jet) -> Jet:
    """``e_A(J)`` for every A, as a new leading batch axis."""
    nb = len(J.batch_shape)
    dJ = stack([J.diff(k) for k in range(E.batch_shape[1])], axis=0)
    idx = string.ascii_lowercase[2: 2 + nb]
    return einsum(f"ak,k{idx}->a{idx}", E, dJ)


def curvature_tensor(D: LiftedConnection) -> Jet:
    """``R[A, B, C, D]`` as a jet of order ``D.order - 1``."""
    if D.order < 1:
        raise ValueError("curvature needs connection jets of order >= 1")
    Gm = D.gamma
    E = frame_matrix(D)
    eG = frame_derivative(Gm, E)
    c = _jet_tensor(structure_functions(D.N, D.chart.n, D.chart.m), D.chart.dim, eG)
    eGt = Jet(np.swapaxes(eG.c, 1, 2), eG.order, eG.mono)
    R = eG - eGt
    R = R + einsum("bce,aed->abcd", Gm, Gm) - einsum("ace,bed->abcd", Gm, Gm) - einsum("abe,ecd->abcd", c, Gm)
    return R


def _jet_tensor(nested, dim: int, like: Jet) -> Jet:
    """Rank-3 tensor of jets (or zeros) at the order and monomials of ``like``."""
    o = like.order
    c = np.zeros((like.c.shape[0], dim, dim, dim, like.mono.size[o]))
    for A in range(dim):
        for B in range(dim):
            for C in range(dim):
                e = nested[A][B][C]
                if isinstance(e, Jet):
                    c[:, A, B, C] = e.truncate(o).c
    return Jet(c, o, like.mono)


def covariant_curvature(D: LiftedConnection) -> np.ndarray:
    """Point values of ``(nabla_E R)_ABC^D`` indexed ``[P, E, A, B, C, D]``."""
    if D.order < 2:
        raise ValueError("covariant curvature needs connection jets of order >= 2")
    R = curvature_tensor(D)
    E = frame_matrix(D).truncate(R.order)
    eR = frame_derivative(R, E).value
    G = D.gamma.value
    R0 = R.value
    return (eR + np.einsum("pefd,pabcf->peabcd", G, R0) - np.einsum("peaf,pfbcd->peabcd", G, R0)
            - np.einsum("pebf,pafcd->peabcd", G, R0) - np.einsum("pecf,pabfd->peabcd", G, R0))


def riemann(D: LiftedConnection, X: VecField, Y: VecField, Z: VecField) -> VecField:
    """``D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z`` on jet fields (needs order >= 2 inputs)."""
    from .bundle import bracket

    return D.cov(X, D.cov(Y, Z)) - D.cov(Y, D.cov(X, Z)) - D.cov(bracket(X, Y, D.N), Z)


@dataclass
class PointGeometry:
    """Values at the sample points of everything the curvature identities use."""

    S: PacStructure
    sample: Sample
    R: np.ndarray      # [P, A, B, C, D]
    G: np.ndarray      # [P, A, B] block metric
    gamma: np.ndarray  # [P, A, B, C]
    omega: np.ndarray  # [P, A, B, E] structure functions
    phi: np.ndarray    # [P, C, B]
    xi_h: np.ndarray   # [P, A]
    xi_v: np.ndarray
    eta_h: np.ndarray
    eta_v: np.ndarray
    Dxi_h: np.ndarray  # [P, A, C] = (D_{e_A} xi^H)^C
    Dxi_v: np.ndarray
    Dphi: np.ndarray   # [P, A, C, B] = ((D_{e_A} phi) e_B)^C

    @property
    def n(self) -> int:
        return self.S.chart.n

    @property
    def dim(self) -> int:
        return self.S.chart.dim

    # -- pointwise algebra on vectors with trailing axis A
    def g(self, X, Y):
        return _bil(self.G, X, Y)

    def curv(self, X, Y, Z):
        return _curv(self.R, X, Y, Z)

    def phi_of(self, X):
        return _lin(self.phi, X)

    def h(self, X):
        out = np.array(X, copy=True)
        out[..., self.n:] = 0.0
        return out

    def v(self, X):
        out = np.array(X, copy=True)
        out[..., :self.n] = 0.0
        return out

    def cov_xi(self, W, block: str):
        return _lin(np.swapaxes(self.Dxi_h if block == "h" else self.Dxi_v, 1, 2), W)

    def bracket_v(self, X, Y):
        """Vertical part of ``[X^H, Y^H]`` (tensorial)."""
        XH, YH = self.h(X), self.h(Y)
        out = _bilvec(self.omega, XH, YH)
        return self.v(out)


def _bcast(*arrs):
    """Broadcast vector batches ``(P, ..., dim)`` against each other."""
    nd = max(a.ndim for a in arrs)
    return [a.reshape(a.shape[:1] + (1,) * (nd - a.ndim) + a.shape[1:]) for a in arrs]


def _bil(G, X, Y):
    X, Y = _bcast(X, Y)
    GY = np.einsum("pab,p...b->p...a", G, Y)
    return np.sum(X * GY, axis=-1)


def _lin(M, X):
    return np.einsum("pcb,p...b->p...c", M, X)


def _bilvec(T, X, Y):
    X, Y = _bcast(X, Y)
    return np.einsum("pabe,p...a,p...b->p...e", T, *np.broadcast_arrays(X, Y), optimize=True)


def _curv(R, X, Y, Z):
    X, Y, Z = _bcast(X, Y, Z)
    X, Y, Z = np.broadcast_arrays(X, Y, Z)
    shape, (P, d) = X.shape, R.shape[:2]
    X, Y, Z = (A.reshape(P, -1, d) for A in (X, Y, Z))
    # contract one slot at a time with batched matmuls
    T = np.matmul(X, R.reshape(P, d, d ** 3)).reshape(P, -1, d, d * d)
    T = np.matmul(Y[:, :, None, :], T)[:, :, 0].reshape(P, -1, d, d)
    return np.matmul(Z[:, :, None, :], T)[:, :, 0].reshape(shape)


def _scal(s, X):
    """Scalar batch times vector batch."""
    s = np.asarray(s)
    return s[..., None] * X


def point_geometry(S: PacStructure, FC: FinslerConnection, sample: Sample | None = None) -> PointGeometry:
    sample = default_sample(S.chart, sample)
    D = FC.at(sample, 1)
    R = curvature_tensor(D).value
    L = S.lift(sample, 1)
    n, dim = S.chart.n, S.chart.dim
    P = len(sample)

    def vec(comps):
        return np.stack([_val(c, P) for c in comps], axis=-1)

    G = np.zeros((P, dim, dim))
    G[:, :n, :n] = np.stack([vec(r) for r in L.G.g], axis=1)
    G[:, n:, n:] = np.stack([vec(r) for r in L.G.h], axis=1)
    phi = np.zeros((P, dim, dim))
    phi[:, :n, :n] = np.stack([vec(r) for r in L.phi_h], axis=1)
    phi[:, n:, n:] = np.stack([vec(r) for r in L.phi_v], axis=1)
    omega = _tensor(sample.space(0), structure_functions(S.N, n, S.chart.m), (dim,) * 3).value
    xi = vec(L.xi.comps)
    eta = vec(L.eta.h + L.eta.v)
    xi_h, xi_v = xi.copy(), xi.copy()
    xi_h[:, n:] = 0.0
    xi_v[:, :n] = 0.0
    eta_h, eta_v = eta.copy(), eta.copy()
    eta_h[:, n:] = 0.0
    eta_v[:, :n] = 0.0

    E = frame_matrix(D)
    gam = D.gamma.value

    def jet_of(comps):
        sp = sample.space(1)
        return stack([c if isinstance(c, Jet) else sp.constant(0.0) for c in comps], axis=0)

    def dfield(comps, vals):
        # (D_A X)^C = e_A X^C + X^B gamma_AB^C
        eX = frame_derivative(jet_of(comps), E).value
        return eX + np.einsum("pb,pabc->pac", vals, gam)

    Dxi_h = dfield(list(L.xi.h) + [0] * S.chart.m, xi_h)
    Dxi_v = dfield([0] * n + list(L.xi.v), xi_v)
    phi_rows = []
    for C in range(dim):
        for B in range(dim):
            blk_c, blk_b = C < n, B < n
            if blk_c != blk_b:
                phi_rows.append(0)
            elif blk_c:
                phi_rows.append(L.phi_h[C][B])
            else:
                phi_rows.append(L.phi_v[C - n][B - n])
    ephi = frame_derivative(jet_of(phi_rows), E).value.reshape(P, dim, dim, dim)  # [P, A, C, B]
    Dphi = ephi + np.einsum("paec,peb->pacb", gam, phi) - np.einsum("pabe,pce->pacb", gam, phi)
    return PointGeometry(S, sample, R, G, gam, omega, phi, xi_h, xi_v, eta_h, eta_v, Dxi_h, Dxi_v, Dphi)


def _val(c, P):
    if isinstance(c, Jet):
        return c.value
    return np.zeros(P) if c == 0 else np.full(P, float(c))


# --------------------------------------------------------------------------
# flag curvature, frames, Ricci


def flag_curvature(pg: PointGeometry, X, Y, tol: float = PIVOT_TOL) -> np.ndarray:
    """``G(R(X,Y)Y, X) / (G(X,X) G(Y,Y) - G(X,Y)^2)`` pointwise."""
    gram = pg.g(X, X) * pg.g(Y, Y) - pg.g(X, Y) ** 2
    if np.any(np.abs(gram) <= tol):
        raise DegeneratePlaneError("plane is degenerate (Gram determinant ~ 0)")
    return pg.g(pg.curv(X, Y, Y), X) / gram


def vertical_phi_flag(pg: PointGeometry, XV, tol: float = 1e-9) -> np.ndarray:
    """Flag curvature of ``span{X^V, phi X^V}`` for unit ``X^V`` orthogonal to ``xi^V``."""
    if np.any(np.abs(np.abs(pg.g(XV, XV)) - 1.0) > tol) or np.any(np.abs(pg.g(XV, pg.xi_v)) > tol):
        raise ValueError("X^V must be unit and orthogonal to xi^V")
    return flag_curvature(pg, XV, pg.phi_of(XV))


@dataclass
class PseudoFrame:
    vectors: np.ndarray   # [2k, dim]
    signs: np.ndarray     # [2k]
    xi: np.ndarray        # [dim]

    def gram_residual(self, G: np.ndarray) -> float:
        V = np.vstack([self.vectors, self.xi])
        want = np.diag(np.r_[self.signs, 1.0])
        return float(np.max(np.abs(V @ G @ V.T - want)))


def pseudo_orthonormal_frame(G: np.ndarray, xi: np.ndarray, block: slice, candidates=None) -> PseudoFrame:
    """Hyperbolic Gram-Schmidt starting from ``xi`` at one point.

    Candidates (default: the adapted basis vectors of the block) and their
    pairwise sums and differences are projected off the frame built so far;
    the one of largest ``|G(v,v)|`` is taken next.
    """
    dim = G.shape[0]
    idx = np.arange(dim)[block]
    if candidates is None:
        candidates = np.eye(dim)[idx]
    cands = [np.asarray(c, dtype=float) for c in candidates]
    if abs(xi @ G @ xi - 1.0) > 1e-9:
        raise FrameError("xi must satisfy G(xi, xi) = 1")
    frame, signs = [], []
    need = len(idx) - 1

    def project(v):
        v = v - (v @ G @ xi) * xi
        for e, s in zip(frame, signs):
            v = v - s * (v @ G @ e) * e
        return v

    # pairwise sums and differences stay in the pool: for null coordinate
    # directions (off-diagonal blocks) they are the well-conditioned pivots
    pool = cands + [cands[i] + s * cands[j] for i in range(len(cands))
                    for j in range(i + 1, len(cands)) for s in (1.0, -1.0)]
    while len(frame) < need:
        proj = [project(c) for c in pool]
        norms = [abs(p @ G @ p) for p in proj]
        k = int(np.argmax(norms)) if proj else -1
        if k < 0 or norms[k] <= PIVOT_TOL:
            raise FrameError("degenerate pivot: all candidate norms vanish")
        v = proj[k]
        q = v @ G @ v
        frame.append(v / np.sqrt(abs(q)))
        signs.append(1.0 if q > 0 else -1.0)
    return PseudoFrame(np.array(frame), np.array(signs), np.asarray(xi, dtype=float))


def ricci(pg: PointGeometry, X, Y, block: str, p: int, frame: PseudoFrame | None = None) -> np.ndarray:
    """``S(X, Y) = sum_i eps_i G(R(E_i, X)Y, E_i) + G(R(xi, X)Y, xi)`` at point ``p``."""
    xi = pg.xi_h[p] if block == "h" else pg.xi_v[p]
    if frame is None:
        sl = slice(0, pg.n) if block == "h" else slice(pg.n, pg.dim)
        frame = pseudo_orthonormal_frame(pg.G[p], xi, sl)
    R, G = pg.R[p], pg.G[p]
    E = np.vstack([frame.xi, frame.vectors])
    w = np.concatenate([[1.0], frame.signs])
    W = np.einsum("i,ia,id->ad", w, E, E @ G)  # sum_i eps_i E_i (x) G E_i
    return np.einsum("bc,...b,...c->...", np.einsum("abcd,ad->bc", R, W), X, Y)


def ricci_trace(pg: PointGeometry, X, Y, block: str, p: int) -> np.ndarray:
    """The same Ricci value as a plain trace ``sum_K R_K(X)(Y)^K`` over the block."""
    sl = slice(0, pg.n) if block == "h" else slice(pg.n, pg.dim)
    R = pg.R[p][sl, :, :, sl]
    return np.einsum("kbck,...b,...c->...", R, X, Y, optimize=True)


def ricci_h(pg, X, Y, p, frame=None):
    return ricci(pg, X, Y, "h", p, frame)


def ricci_v(pg, X, Y, p, frame=None):
    return ricci(pg, X, Y, "v", p, frame)


# --------------------------------------------------------------------------
# reports


@dataclass
class CheckResult:
    name: str
    status: str                 # "pass" | "fail" | "hypothesis-not-met"
    residual: Residual | None = None
    note: str = ""

    def as_dict(self) -> dict:
        d = {"name": self.name, "status": self.status}
        if self.residual is not None:
            d["residual"] = self.residual.value
            d["witness"] = {"point": list(self.residual.point), "fields": list(self.residual.fields)}
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class CurvatureReport:
    checks: list = field(default_factory=list)
    flag_curvatures: dict = field(default_factory=dict)
    ricci: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def as_dict(self) -> dict:
        return {"checks": [c.as_dict() for c in self.checks],
                "flag_curvatures": self.flag_curvatures, "ricci": self.ricci}


def judge(name: str, res: Residual, tol: float, hypothesis: bool = True, note: str = "") -> CheckResult:
    if not hypothesis:
        return CheckResult(name, "hypothesis-not-met", None, note)
    return CheckResult(name, "pass" if res.value < tol else "fail", res, note)


def field_values(sample: Sample, flds) -> np.ndarray:
    """Point values of a list of fields, shape ``(P, F, dim)``."""
    F = sample.lift_fields(flds, 0)
    P = len(sample)
    cols = []
    for c in F.comps:
        cols.append(np.broadcast_to(c.value, (P, len(flds))) if isinstance(c, Jet) else np.zeros((P, len(flds))))
    return np.stack(cols, axis=-1)


def unit_orthogonal(pg: PointGeometry, block: str, count: int, seed: int = 0, sign: float | None = None) -> np.ndarray:
    """Random vectors of the block, G-orthogonal to xi and of norm +-1, shape ``(P, count, dim)``.

    With ``sign`` given, only vectors of that causal character are kept (re-drawing as needed).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    P, dim, n = len(pg.sample), pg.dim, pg.n
    xi = pg.xi_h if block == "h" else pg.xi_v
    out = np.zeros((P, count, dim))
    for p in range(P):
        k = 0
        while k < count:
            v = np.zeros(dim)
            sl = slice(0, n) if block == "h" else slice(n, dim)
            v[sl] = rng.uniform(-1, 1, size=sl.stop - sl.start)
            v = v - (v @ pg.G[p] @ xi[p]) * xi[p]
            q = v @ pg.G[p] @ v
            if abs(q) < 1e-3 or (sign is not None and np.sign(q) != sign):
                continue
            out[p, k] = v / np.sqrt(abs(q))
            k += 1
    return out


def local_symmetry_residual(FC: FinslerConnection, sample: Sample, block: str | None = None) -> np.ndarray:
    """Per-point max-abs of ``(D_W R)(X, Y)Z`` over adapted frame fields.

    ``block`` restricts all five indices to the horizontal (``"h"``) or vertical (``"v"``) frame.
    """
    DR = covariant_curvature(FC.at(sample, 2))
    n = FC.chart.n
    if block == "h":
        DR = DR[:, :n, :n, :n, :n, :n]
    elif block == "v":
        DR = DR[:, n:, n:, n:, n:, n:]
    return np.max(np.abs(DR.reshape(DR.shape[0], -1)), axis=1)


def theorem_suite(S: PacStructure, FC: FinslerConnection, sample: Sample | None = None, fields=None,
                  tol: float = DEFAULT_TOL, classification=None, const_tol: float = 1e-6) -> CurvatureReport:
    """Curvature identities for K-paracontact and para-Sasakian structures.

    Hypotheses come from ``classification`` (computed if not given); checks whose
    hypotheses fail are reported as ``hypothesis-not-met``.
    """
    from .calculus import classify

    sample = default_sample(S.chart, sample)
    if classification is None:
        classification = classify(S, sample, fields, tol)
    kpar = classification["K-paracontact"]
    sas = classification["para-Sasakian"]
    names, flds = test_fields(S.chart, fields)
    pg = point_geometry(S, FC, sample)
    Fv = field_values(sample, flds)
    k1, k2 = S.chart.k1, S.chart.k2
    rep = CurvatureReport()
    ax1, ax2 = [names], [names, names]
    XH, XV = pg.h(Fv), pg.v(Fv)
    xh, xv = pg.xi_h[:, None, :], pg.xi_v[:, None, :]
    eh = lambda X: np.einsum("pa,p...a->p...", pg.eta_h, X)
    ev = lambda X: np.einsum("pa,p...a->p...", pg.eta_v, X)

    # R(X, xi) xi on planes through xi
    r69 = pg.curv(XV, xv, xv) + 0.25 * (XV - _scal(ev(XV), xv))
    rep.checks.append(judge("R(X^V,xi^V)xi^V = -1/4(X^V - eta^V(X^V)xi^V)", measure("", _norm(r69), sample, ax1), tol, kpar))
    corr70 = pg.cov_xi(pg.bracket_v(XH, xh), "h")
    r70 = pg.curv(XH, xh, xh) + 0.25 * (XH - _scal(eh(XH), xh)) + corr70
    rep.checks.append(judge("R(X^H,xi^H)xi^H = -1/4(X^H - eta^H(X^H)xi^H) - D^V_[X^H,xi^H] xi^H",
                            measure("", _norm(r70), sample, ax1), tol, kpar))

    # flag curvatures of planes through xi
    UV = unit_orthogonal(pg, "v", 20, seed=1)
    UH = unit_orthogonal(pg, "h", 20, seed=2)
    Kv = flag_curvature(pg, UV, xv)
    Kh = flag_curvature(pg, UH, xh)
    rnames = [f"u{k + 1}" for k in range(20)]
    rep.checks.append(judge("K(X^V, xi^V) = -1/4", measure("", Kv + 0.25, sample, [rnames]), const_tol, kpar))
    scal = pg.g(pg.cov_xi(pg.bracket_v(UH, xh), "h"), UH)
    epsH = np.sign(pg.g(UH, UH))
    rep.checks.append(judge("K(X^H, xi^H) = -1/4 - eps G(D^V_[X^H,xi^H] xi^H, X^H)",
                            measure("", Kh + 0.25 + epsH * scal, sample, [rnames]), tol, kpar))
    agree = (np.abs(Kh + 0.25) < const_tol) == (np.abs(scal) < const_tol)
    rep.checks.append(judge("K(X^H, xi^H) = -1/4 iff G(D^V_[X^H,xi^H] xi^H, X^H) = 0",
                            measure("", (~agree).astype(float), sample, [rnames]), 0.5, kpar))
    rep.flag_curvatures["K(X^V,xi^V)"] = _flag_records(pg, UV[:, 0], pg.xi_v, Kv[:, 0])
    rep.flag_curvatures["K(X^H,xi^H)"] = _flag_records(pg, UH[:, 0], pg.xi_h, Kh[:, 0])

    # para-Sasakian: D phi and R(X, Y) xi
    XH1, YH1, XV1, YV1 = XH[:, :, None, :], XH[:, None, :, :], XV[:, :, None, :], XV[:, None, :, :]
    Dphi = lambda X, Y: np.einsum("pacb,p...a,p...b->p...c", pg.Dphi, *np.broadcast_arrays(*_bcast(X, Y)), optimize=True)
    r71 = Dphi(XH1, YH1) - 0.5 * (_scal(eh(YH1), XH1) - _scal(pg.g(XH1, YH1), pg.xi_h[:, None, None, :]))
    r72 = Dphi(XV1, YV1) - 0.5 * (_scal(ev(YV1), XV1) - _scal(pg.g(XV1, YV1), pg.xi_v[:, None, None, :]))
    rep.checks.append(judge("(D_X^H phi)Y^H = 1/2(eta^H(Y)X^H - G^H(X,Y)xi^H)", measure("", _norm(r71), sample, ax2), tol, sas))
    rep.checks.append(judge("(D_X^V phi)Y^V = 1/2(eta^V(Y)X^V - G^V(X,Y)xi^V)", measure("", _norm(r72), sample, ax2), tol, sas))
    xv2, xh2 = pg.xi_v[:, None, None, :], pg.xi_h[:, None, None, :]
    r73 = pg.curv(XV1, YV1, xv2) - 0.25 * (_scal(ev(XV1), YV1) - _scal(ev(YV1), XV1))
    r74 = (pg.curv(XH1, YH1, xh2) - 0.25 * (_scal(eh(XH1), YH1) - _scal(eh(YH1), XH1))
           + pg.cov_xi(pg.bracket_v(XH1, YH1), "h"))
    rep.checks.append(judge("R(X^V,Y^V)xi^V = 1/4(eta^V(X)Y^V - eta^V(Y)X^V)", measure("", _norm(r73), sample, ax2), tol, sas))
    rep.checks.append(judge("R(X^H,Y^H)xi^H = 1/4(eta^H(X)Y^H - eta^H(Y)X^H) - D^V_[X^H,Y^H] xi^H",
                            measure("", _norm(r74), sample, ax2), tol, sas))

    # Ricci
    ric = _ricci_checks(pg, XH, XV, k1, k2)
    for key, arr in ric["values"].items():
        rep.ricci[key] = _table(arr)
    for name, arr, hyp, t in (
        ("S^H(X^H,xi^H) = -k1/2 eta^H(X) - eps_i G(D^V_[E_i,X^H] xi^H, E_i)", ric["i"], sas, tol),
        ("S^V(X^V,xi^V) = -k2/2 eta^V(X)", ric["ii"], sas, const_tol),
        ("S^H(xi^H,xi^H) = -k1/2 - eps_i G(D^V_[E_i,xi^H] xi^H, E_i)", ric["iii"], sas, tol),
        ("S^V(xi^V,xi^V) = -k2/2", ric["iv"], sas, const_tol),
        ("K-paracontact: S^H(xi^H,xi^H) = -k1/2 - eps_i G(D^V_[E_i,xi^H] xi^H, E_i)", ric["iii"], kpar, tol),
        ("K-paracontact: S^V(xi^V,xi^V) = -k2/2", ric["iv"], kpar, const_tol),
        ("S^H(X^H,xi^H) = -k1/2 eta^H(X) iff correction = 0", ric["cor_i"], sas, 0.5),
        ("S^H(xi^H,xi^H) = -k1/2 iff correction = 0", ric["cor_iii"], sas, 0.5),
        ("K-paracontact: S^H(xi^H,xi^H) = -k1/2 iff correction = 0", ric["cor_iii"], kpar, 0.5),
        ("Ricci frame independence", ric["frame"], True, tol),
    ):
        axes = ax1 if arr.ndim == 2 else []
        rep.checks.append(judge(name, measure("", arr, sample, axes), t, hyp))

    # locally symmetric para-Sasakian: vertical phi-flag curvature
    rep.checks.append(_phi_flag_check(S, FC, pg, sample, sas, tol, const_tol))
    for c in rep.checks:
        if c.residual is not None:
            c.residual.name = c.name
    return rep


def _rotated(rng, k: int, offset: int, dim: int) -> np.ndarray:
    """Rows: a random orthonormal basis of the coordinate block ``offset..offset+k``."""
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    out = np.zeros((k, dim))
    out[:, offset:offset + k] = Q.T
    return out


def _norm(v: np.ndarray) -> np.ndarray:
    """Max-abs over the component axis of a vector-valued residual."""
    return np.max(np.abs(v), axis=-1)


def _flag_records(pg: PointGeometry, X, Y, K) -> list:
    """One record per point: the plane's spanning vectors, their Gram matrix and K."""
    out = []
    for p in range(len(K)):
        gram = [[pg.g(X, X)[p], pg.g(X, Y)[p]], [pg.g(Y, X)[p], pg.g(Y, Y)[p]]]
        out.append({"point": [round(float(c), 12) for c in pg.sample.points[p]],
                    "X": np.round(X[p], 12).tolist(), "Y": np.round(Y[p], 12).tolist(),
                    "gram": np.round(np.array(gram), 12).tolist(), "K": round(float(K[p]), 12)})
    return out


def _table(arr: np.ndarray) -> list:
    """Per-point values; a 2-d array keeps one list per point."""
    return np.asarray(arr).round(12).tolist()


def _ricci_checks(pg: PointGeometry, XH, XV, k1: int, k2: int, const_tol: float = 1e-6) -> dict:
    P, F = XH.shape[0], XH.shape[1]
    vals = {k: np.zeros((P, F)) for k in ("i", "ii", "cor_i")}
    iii, iv, cor_iii, frame_dev = np.zeros(P), np.zeros(P), np.zeros(P), np.zeros(P)
    SHxx, SVxx = np.zeros(P), np.zeros(P)
    n = pg.n
    rng = np.random.Generator(np.random.PCG64(7))
    for p in range(P):
        xh, xv = pg.xi_h[p], pg.xi_v[p]
        fh = pseudo_orthonormal_frame(pg.G[p], xh, slice(0, n))
        fv = pseudo_orthonormal_frame(pg.G[p], xv, slice(n, pg.dim))

        def corr(X):
            # sum_i eps_i G(D^V_[E_i, X]^V xi^H, E_i)
            M = np.einsum("i,ia,ic->ac", fh.signs, fh.vectors, fh.vectors @ pg.G[p])
            om = pg.omega[p].copy()
            om[..., :n] = 0.0  # keep the vertical part of the bracket
            return X @ np.einsum("abe,ec,ac->b", om, pg.Dxi_h[p], M)

        SH = ricci(pg, XH[p], xh, "h", p, fh)
        SV = ricci(pg, XV[p], xv, "v", p, fv)
        cX = corr(XH[p])
        vals["i"][p] = SH + 0.5 * k1 * (XH[p] @ pg.eta_h[p]) + cX
        vals["ii"][p] = SV + 0.5 * k2 * (XV[p] @ pg.eta_v[p])
        lhs_ok = np.abs(SH + 0.5 * k1 * (XH[p] @ pg.eta_h[p])) < const_tol
        vals["cor_i"][p] = (lhs_ok != (np.abs(cX) < const_tol)).astype(float)
        SHxx[p] = ricci(pg, xh, xh, "h", p, fh)
        SVxx[p] = ricci(pg, xv, xv, "v", p, fv)
        cxi = corr(xh)
        iii[p] = SHxx[p] + 0.5 * k1 + cxi
        iv[p] = SVxx[p] + 0.5 * k2
        cor_iii[p] = float((abs(SHxx[p] + 0.5 * k1) < const_tol) != (abs(cxi) < const_tol))
        # frame independence: a rotated candidate basis changes the pivot order
        fh2 = pseudo_orthonormal_frame(pg.G[p], xh, slice(0, n), candidates=_rotated(rng, n, 0, pg.dim))
        fv2 = pseudo_orthonormal_frame(pg.G[p], xv, slice(n, pg.dim), candidates=_rotated(rng, pg.dim - n, n, pg.dim))
        XHp, XVp = XH[p], XV[p]
        d1 = np.max(np.abs(ricci(pg, XHp[:, None], XHp[None], "h", p, fh)
                           - ricci(pg, XHp[:, None], XHp[None], "h", p, fh2)))
        d2 = np.max(np.abs(ricci(pg, XVp[:, None], XVp[None], "v", p, fv)
                           - ricci(pg, XVp[:, None], XVp[None], "v", p, fv2)))
        d3 = np.max(np.abs(ricci(pg, XHp[:, None], XHp[None], "h", p, fh)
                           - ricci_trace(pg, XHp[:, None], XHp[None], "h", p)))
        frame_dev[p] = max(d1, d2, d3)
    return {"i": vals["i"], "ii": vals["ii"], "iii": iii, "iv": iv, "cor_i": vals["cor_i"],
            "cor_iii": cor_iii, "frame": frame_dev,
            "values": {"S^H(xi^H,xi^H)": SHxx, "S^V(xi^V,xi^V)": SVxx}}


def _phi_flag_check(S, FC, pg, sample, sas, tol, const_tol) -> CheckResult:
    name = "locally symmetric: vertical phi-flag curvature = -1/4"
    if not sas:
        return CheckResult(name, "hypothesis-not-met", None, "not para-Sasakian")
    lsr = local_symmetry_residual(FC, sample, "v")
    ok = lsr < tol
    if not np.any(ok):
        return CheckResult(name, "hypothesis-not-met", None,
                           f"not locally symmetric at any sample point (min residual {float(np.min(lsr)):.3e})")
    U = unit_orthogonal(pg, "v", 20, seed=3)
    K = vertical_phi_flag(pg, U)
    dev = np.where(ok[:, None], np.abs(K + 0.25), 0.0)
    res = measure(name, dev, sample, [[f"u{k + 1}" for k in range(20)]])
    return CheckResult(name, "pass" if res.value < const_tol else "fail", res,
                       f"hypothesis met at {int(np.sum(ok))} of {len(ok)} points")


def bianchi_residual(pg: PointGeometry, X, Y, Z) -> np.ndarray:
    """Cyclic sum ``R(X,Y)Z + R(Y,Z)X + R(Z,X)Y`` pointwise."""
    return pg.curv(X, Y, Z) + pg.curv(Y, Z, X) + pg.curv(Z, X, Y)


def type_mixing(pg: PointGeometry) -> float:
    """Largest component of R carrying a horizontal Z to a vertical output or back."""
    n = pg.n
    return float(max(np.max(np.abs(pg.R[:, :, :, :n, n:])), np.max(np.abs(pg.R[:, :, :, n:, :n]))))
