"""Command line front end: load an instance file, run the checks, write reports.

Instance files are JSON objects::

    {"version": 1, "k1": 1, "k2": 1,
     "N": [[...]], "metric_g": [[...]], "metric_h": [[...]],
     "phi_h": [[...]], "phi_v": [[...]],
     "eta_h": [...], "eta_v": [...], "xi_h": [...], "xi_v": [...],
     "sample": {"count": 64, "seed": 0, "box": {"x1": [-1, 1]}},
     "tolerance": 1e-8}

Entries are expression strings (numbers are accepted too).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .bundle import Chart, Sample
from .calculus import classify
from .connection import (block_preservation, canonical_connection, check_dxi_chain, check_killing_criteria,
                         check_torsion, check_xi_parallel_phi, koszul, metricity, phi_derivative_identity)
from .curvature import (CheckResult, DegeneratePlaneError, FrameError, flag_curvature, point_geometry,
                        pseudo_orthonormal_frame, ricci, theorem_suite)
from .dtensor import SingularBlockError
from .expr import ExprError
from .residual import DEFAULT_TOL, Report, Residual
from .structure import PacStructure, check_axioms, check_compatibility, check_paracontact_metric, \
    check_rank, derived_identities

FORMAT_VERSION = 1
GENERATOR = "PCG64"

_entry = {"type": ["string", "number"]}
_vector = {"type": "array", "items": _entry}
_matrix = {"type": "array", "items": _vector}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "k1", "k2", "N", "metric_g", "metric_h", "phi_h", "phi_v",
                 "eta_h", "eta_v", "xi_h", "xi_v", "sample", "tolerance"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "k1": {"type": "integer", "minimum": 1},
        "k2": {"type": "integer", "minimum": 1},
        "N": _matrix, "metric_g": _matrix, "metric_h": _matrix, "phi_h": _matrix, "phi_v": _matrix,
        "eta_h": _vector, "eta_v": _vector, "xi_h": _vector, "xi_v": _vector,
        "sample": {
            "type": "object",
            "additionalProperties": False,
            "required": ["count", "seed"],
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "box": {"type": "object", "additionalProperties": {
                    "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
            },
        },
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
}


class SpecError(ValueError):
    """A malformed instance file; ``path`` points into the document."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class InstanceSpec:
    version: int
    chart: Chart
    structure: PacStructure
    count: int
    seed: int
    box: dict = field(default_factory=dict)
    tolerance: float = DEFAULT_TOL

    def sample(self) -> Sample:
        return Sample.draw(self.chart, self.count, self.seed, self.box)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _shape(doc: dict, key: str, rows: int, cols: int | None):
    val = doc[key]
    if len(val) != rows:
        raise SpecError(key, f"expected {rows} entries, got {len(val)}")
    if cols is not None:
        for i, r in enumerate(val):
            if len(r) != cols:
                raise SpecError(f"{key}[{i}]", f"expected {cols} entries, got {len(r)}")


def parse_spec(doc: dict) -> InstanceSpec:
    """Validate and parse an already-decoded instance document."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as e:
        raise SpecError(_path(e.absolute_path), e.message) from None
    k1, k2 = doc["k1"], doc["k2"]
    chart = Chart(k1, k2)
    n, m = chart.n, chart.m
    for key, r, c in (("N", n, m), ("metric_g", n, n), ("metric_h", m, m), ("phi_h", n, n), ("phi_v", m, m),
                      ("eta_h", n, None), ("eta_v", m, None), ("xi_h", n, None), ("xi_v", m, None)):
        _shape(doc, key, r, c)
    box = doc["sample"].get("box", {})
    for name, (lo, hi) in box.items():
        if name not in chart.names:
            raise SpecError(f"sample.box.{name}", "unknown variable")
        if not lo < hi:
            raise SpecError(f"sample.box.{name}", "empty interval")

    def expr(key, *idx):
        val = doc[key]
        for i in idx:
            val = val[i]
        try:
            return chart.parse(str(val))
        except ExprError as e:
            raise SpecError(_path([key, *idx]), str(e)) from None

    mat = lambda key, r, c: [[expr(key, i, j) for j in range(c)] for i in range(r)]
    vec = lambda key, r: [expr(key, i) for i in range(r)]
    from .bundle import NonlinearConnection, VecField
    from .dtensor import Metric, OneForm

    S = PacStructure(chart, NonlinearConnection(chart, tuple(tuple(r) for r in mat("N", n, m))),
                     mat("phi_h", n, n), mat("phi_v", m, m),
                     OneForm(vec("eta_h", n), vec("eta_v", m)), VecField(vec("xi_h", n), vec("xi_v", m)),
                     Metric(mat("metric_g", n, n), mat("metric_h", m, m)))
    return InstanceSpec(doc["version"], chart, S, doc["sample"]["count"], doc["sample"]["seed"], dict(box),
                        float(doc["tolerance"]))


def load_spec(path) -> InstanceSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecError("", f"not valid JSON: {e}") from None
    return parse_spec(doc)


def spec_document(S: PacStructure, count: int = 64, seed: int = 0, box=None, tolerance: float = DEFAULT_TOL) -> dict:
    """The instance-file form of a structure."""
    mat = lambda rows: [[str(e) for e in r] for r in rows]
    vec = lambda v: [str(e) for e in v]
    sample = {"count": count, "seed": seed}
    if box:
        sample["box"] = {k: list(v) for k, v in box.items()}
    return {"version": FORMAT_VERSION, "k1": S.chart.k1, "k2": S.chart.k2, "N": mat(S.N.N),
            "metric_g": mat(S.G.g), "metric_h": mat(S.G.h), "phi_h": mat(S.phi_h), "phi_v": mat(S.phi_v),
            "eta_h": vec(S.eta.h), "eta_v": vec(S.eta.v), "xi_h": vec(S.xi.h), "xi_v": vec(S.xi.v),
            "sample": sample, "tolerance": tolerance}


# --------------------------------------------------------------------------
# running


def _entry_of(group: str, r: Residual | None, status: str, note: str = "") -> dict:
    d = {"group": group, "name": r.name if r is not None else note, "status": status}
    if r is not None:
        d["residual"] = r.value
        d["witness"] = {"point": list(r.point), "fields": list(r.fields)}
    if note and r is not None:
        d["note"] = note
    return d


class _Checks:
    def __init__(self, tol: float):
        self.tol = tol
        self.rows: list = []

    def report(self, group: str, rep, hypothesis: bool = True, note: str = ""):
        items = list(rep) if isinstance(rep, Report) else [rep]
        for r in items:
            if not hypothesis:
                self.rows.append({"group": group, "name": r.name, "status": "hypothesis-not-met"})
            else:
                self.rows.append(_entry_of(group, r, "pass" if r.value < self.tol else "fail", note))

    def skipped(self, group: str, names):
        for nm in names:
            self.rows.append({"group": group, "name": nm, "status": "hypothesis-not-met"})

    def statement(self, group: str, name: str, holds: bool, hypothesis: bool):
        status = "hypothesis-not-met" if not hypothesis else ("pass" if holds else "fail")
        self.rows.append({"group": group, "name": name, "status": status})

    def curvature(self, c: CheckResult):
        d = c.as_dict()
        self.rows.append({"group": "curvature", **d})


def run(spec: InstanceSpec) -> dict:
    """All checks in registry order, each gated on its hypotheses."""
    S, tol = spec.structure, spec.tolerance
    sample = spec.sample()
    out = _Checks(tol)

    ax = check_axioms(S, sample)
    almost = ax.ok(tol)
    out.report("structure", ax)
    if almost:
        out.report("structure", derived_identities(S, sample, tol=tol))
    else:
        out.skipped("structure", ["phi(xi^H)", "phi(xi^V)", "eta^H o phi", "eta^V o phi"])
    out.report("structure", check_rank(S, sample), almost)

    cl = classify(S, sample, tol=tol)
    metric, para, kpar = cl["almost paracontact metric"], cl["paracontact metric"], cl["K-paracontact"]
    nt = cl.normality
    out.statement("normality", "N1 = 0 implies N2 = N3 = N4 = 0",
                  max(nt.N2, nt.N3, nt.N4) < tol, cl["normal"])
    out.statement("normality", "paracontact metric implies N2 = N4 = 0", max(nt.N2, nt.N4) < tol, para)
    out.statement("normality", "paracontact metric: K-paracontact iff N3 = 0", kpar == (nt.N3 < tol), para)

    FC = canonical_connection(S.G, S.N)
    out.report("connection", metricity(FC, sample))
    out.report("connection", koszul(FC, sample))
    out.report("connection", check_torsion(FC, sample))
    out.report("connection", block_preservation(FC, sample))

    if para:
        kc = check_killing_criteria(FC, S, sample, tol=tol, require=False)
        out.statement("connection", "paracontact metric: K-paracontact iff the four D xi clauses hold",
                      kpar == kc.ok(tol), True)
        out.report("connection", kc, kpar)
    else:
        out.statement("connection", "paracontact metric: K-paracontact iff the four D xi clauses hold", False, False)
        out.skipped("connection", ["(i) D_X^H xi^H + 1/2 phi X^H", "(ii) G^H([xi^H,X^V]^H, Y^H)",
                                   "(iii) D_X^V xi^V + 1/2 phi X^V", "(iv) G^V([xi^V,X^H]^V, Y^V)"])
    out.report("connection", check_dxi_chain(FC, S, sample), kpar)
    out.report("connection", check_xi_parallel_phi(FC, S, sample), para)
    if metric:
        out.report("connection", phi_derivative_identity(FC, S, sample, tol=tol, require=False))
    else:
        out.skipped("connection", ["2G((D_X^H phi)Y^H, Z^H) - expansion", "2G((D_X^V phi)Y^V, Z^V) - expansion"])

    curv = {}
    if metric:
        cr = theorem_suite(S, FC, sample, tol=tol, classification=cl)
        for c in cr.checks:
            out.curvature(c)
        curv = {"flag_curvatures": cr.flag_curvatures, "ricci": cr.ricci}

    failed = sum(1 for r in out.rows if r["status"] == "fail")
    return {
        "version": FORMAT_VERSION,
        "instance": {"k1": spec.chart.k1, "k2": spec.chart.k2},
        "sample": {"generator": GENERATOR, "seed": spec.seed, "count": spec.count,
                   "box": {k: list(v) for k, v in sorted(spec.box.items())}},
        "tolerance": tol,
        "classification": cl.as_dict(),
        "checks": out.rows,
        "curvature": curv,
        "summary": {"checks": len(out.rows), "failed": failed,
                    "hypothesis_not_met": sum(1 for r in out.rows if r["status"] == "hypothesis-not-met")},
    }


def curvature_at(spec: InstanceSpec, point) -> dict:
    """Ricci matrices and coordinate-plane flag curvatures at a single point."""
    S = spec.structure
    sample = Sample.at(spec.chart, [point])
    pg = point_geometry(S, canonical_connection(S.G, S.N), sample)
    n, dim = pg.n, pg.dim
    E = np.eye(dim)
    names = spec.chart.names
    out = {"point": [float(c) for c in point], "ricci": {}, "flag_curvatures": []}
    for tag, sl, xi in (("S^H", slice(0, n), pg.xi_h[0]), ("S^V", slice(n, dim), pg.xi_v[0])):
        try:
            fr = pseudo_orthonormal_frame(pg.G[0], xi, sl)
        except FrameError as e:
            out["ricci"][tag] = str(e)
            continue
        B = E[sl]
        out["ricci"][tag] = np.round(ricci(pg, B[:, None], B[None], "h" if tag == "S^H" else "v", 0, fr), 12).tolist()
    for A in range(dim):
        for B in range(A + 1, dim):
            X, Y = E[A][None], E[B][None]
            rec = {"plane": [_basis_name(names, A, n), _basis_name(names, B, n)]}
            try:
                rec["K"] = round(float(flag_curvature(pg, X, Y)[0]), 12)
            except DegeneratePlaneError:
                rec["K"] = None
            rec["gram"] = np.round([[pg.g(X, X)[0], pg.g(X, Y)[0]], [pg.g(Y, X)[0], pg.g(Y, Y)[0]]], 12).tolist()
            out["flag_curvatures"].append(rec)
    return out


def _basis_name(names, A: int, n: int) -> str:
    return f"delta_{names[A]}" if A < n else f"d_{names[A]}"


# --------------------------------------------------------------------------
# text output


def render_checks(report: dict) -> str:
    lines = [f"sample: {report['sample']['count']} points, generator {report['sample']['generator']}, "
             f"seed {report['sample']['seed']}; tolerance {report['tolerance']:g}", ""]
    lines += render_ladder(report["classification"]).splitlines()
    lines.append("")
    w = max(len(r["name"]) for r in report["checks"])
    lines.append(f"{'status':<19} {'residual':>10}  {'check':<{w}}  group")
    for r in report["checks"]:
        res = f"{r['residual']:.3e}" if "residual" in r else "-"
        lines.append(f"{r['status']:<19} {res:>10}  {r['name']:<{w}}  {r['group']}")
        if r["status"] == "fail" and "witness" in r:
            wt = r["witness"]
            lines.append(f"{'':<31}at {_fmt_point(wt['point'])} fields {', '.join(wt['fields']) or '-'}")
    s = report["summary"]
    lines += ["", f"{s['checks']} checks, {s['failed']} failed, {s['hypothesis_not_met']} hypothesis-not-met"]
    return "\n".join(lines) + "\n"


def render_ladder(cl: dict) -> str:
    w = max(len(r["name"]) for r in cl["ladder"])
    lines = [f"{'rung':<{w}}  holds  residual"]
    for r in cl["ladder"]:
        lines.append(f"{r['name']:<{w}}  {'yes' if r['holds'] else 'no':<5}  {r['residual']:.3e}")
    for c in cl["consistency"]:
        lines.append(f"  [{'ok' if c['holds'] else 'VIOLATED'}] {c['statement']}")
    return "\n".join(lines) + "\n"


def render_curvature(tab: dict) -> str:
    lines = [f"point {_fmt_point(tab['point'])}", ""]
    for tag, M in tab["ricci"].items():
        lines.append(f"{tag}:")
        if isinstance(M, str):
            lines.append(f"  {M}")
        else:
            lines += ["  " + "  ".join(f"{v:>12.6f}" for v in row) for row in M]
    lines += ["", f"{'plane':<24} {'K':>12}"]
    for rec in tab["flag_curvatures"]:
        K = "degenerate" if rec["K"] is None else f"{rec['K']:.6f}"
        lines.append(f"{'(' + ', '.join(rec['plane']) + ')':<24} {K:>12}")
    return "\n".join(lines) + "\n"


def _fmt_point(p) -> str:
    return "(" + ", ".join(f"{c:.6g}" for c in p) + ")"


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def parse_point(text: str, chart: Chart) -> list:
    """``"x=a,b,c,y=d,e,f"`` to coordinates."""
    parts = {}
    key = None
    for tok in text.replace(" ", "").split(","):
        if "=" in tok:
            key, tok = tok.split("=", 1)
            if key not in ("x", "y") or key in parts:
                raise SpecError("--point", f"bad group {key!r}")
            parts[key] = []
        if key is None:
            raise SpecError("--point", "expected x=... and y=...")
        try:
            parts[key].append(float(tok))
        except ValueError:
            raise SpecError("--point", f"not a number: {tok!r}") from None
    x, y = parts.get("x", []), parts.get("y", [])
    if len(x) != chart.n or len(y) != chart.m:
        raise SpecError("--point", f"expected {chart.n} x and {chart.m} y coordinates")
    return x + y


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pacfin", description="Check almost paracontact Finsler structures.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run the full check suite")
    c.add_argument("spec")
    c.add_argument("--report", help="write the JSON report here")
    c.add_argument("--tolerance", type=float)
    c.add_argument("--seed", type=int)
    c.add_argument("--samples", type=int)
    k = sub.add_parser("classify", help="classification ladder only")
    k.add_argument("spec")
    k.add_argument("--report")
    k.add_argument("--tolerance", type=float)
    k.add_argument("--seed", type=int)
    k.add_argument("--samples", type=int)
    v = sub.add_parser("curvature", help="curvature tables at one point")
    v.add_argument("spec")
    v.add_argument("--point", required=True, help='e.g. "x=0.1,0.2,0.3,y=0.4,0.5,0.6"')
    v.add_argument("--report")
    return ap


def _override(spec: InstanceSpec, args) -> InstanceSpec:
    if getattr(args, "tolerance", None) is not None:
        if not args.tolerance > 0:
            raise SpecError("--tolerance", "must be positive")
        spec.tolerance = args.tolerance
    if getattr(args, "seed", None) is not None:
        spec.seed = args.seed
    if getattr(args, "samples", None) is not None:
        if args.samples < 1:
            raise SpecError("--samples", "must be at least 1")
        spec.count = args.samples
    return spec


def _write(path, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _override(load_spec(args.spec), args)
        if args.command == "check":
            rep = run(spec)
            text = render_checks(rep)
            code = 1 if rep["summary"]["failed"] else 0
        elif args.command == "classify":
            cl = classify(spec.structure, spec.sample(), tol=spec.tolerance)
            rep = {"version": FORMAT_VERSION, "classification": cl.as_dict()}
            text = render_ladder(rep["classification"])
            code = 0 if cl.consistent else 1
        else:
            rep = curvature_at(spec, parse_point(args.point, spec.chart))
            text = render_curvature(rep)
            code = 0
    except (SpecError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ExprError, ArithmeticError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    if args.report:
        _write(args.report, dumps(rep))
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
