"""Command-line front end.

Every command prints a short result, writes JSON/CSV artifacts under the
output directory (``--out`` or ``$PHIGEO_OUT``, default ``phigeo_out``) and
exits 0 on success, 1 when a numerical check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, cmc, flatcone, geodesic, sector, surface, svg, word
from .errors import NonConvergenceError
from .qdiff import QuadraticDifferential

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- parsing helpers -----------------------------------------------------------------

def _point(text):
    try:
        if "," in text:
            u, v = text.split(",")
            return complex(float(u), float(v))
        return complex(text.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed point {text!r}; use u,v") from None


def _pair(text):
    m = re.fullmatch(r"\s*(\d+)\s*[,x]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"malformed resolution {text!r}; use n_r,n_theta")
    return int(m.group(1)), int(m.group(2))


def _ints(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer list {text!r}") from None


def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number list {text!r}") from None


def _qd(args):
    if getattr(args, "phi_file", None):
        path = Path(args.phi_file)
        if not path.is_file():
            raise UsageError(f"input file not found: {path}")
        try:
            return QuadraticDifferential.from_json(path.read_text())
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed differential file {path}: {exc}") from None
    return QuadraticDifferential.parse(args.phi, args.R)


def _word(text, n):
    return word.SectorWord.parse(text, n)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


class Output:
    def __init__(self, root):
        self.root = Path(root)
        self.written = []

    def write(self, name, text):
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        path.write_text(text)
        self.written.append(str(path))
        return path

    def json(self, name, obj):
        obj = dict(obj)
        obj.setdefault("schema_version", SCHEMA_VERSION)
        return self.write(name, _dumps(obj))


def _points_csv(pts, header="u,v"):
    return header + "\n" + "".join(f"{z.real!r},{z.imag!r}\n" for z in pts)


# -- commands --------------------------------------------------------------------------

def cmd_trace(args, out):
    qd = _qd(args)
    tr = geodesic.trace_trajectory(qd, args.start, args.theta, args.step, args.max_arclen, args.orientation)
    dev = geodesic.phase_deviation(qd, tr.points, args.theta)
    out.write("trajectory.csv", tr.to_csv())
    out.json("trajectory.json", {"phi": qd.to_dict(), "theta": args.theta, "stop": tr.stop,
                                 "arclength": float(tr.arclen[-1]), "points": len(tr.points),
                                 "phase_deviation": dev})
    print(f"stop={tr.stop} arclength={tr.arclen[-1]:.6g} phase_deviation={dev:.3e}")
    return EXIT_OK


def cmd_connect(args, out):
    qd = _qd(args)
    path = geodesic.connect(qd, args.z_from, args.z_to)
    out.write("geodesic.csv", _points_csv(path.points))
    out.json("geodesic.json", {"phi": qd.to_dict(), "from": args.z_from, "to": args.z_to, "kind": path.kind,
                               "length": path.length, "separation": path.separation, "tie": path.tie,
                               "phase": path.phase})
    print(f"{path.kind} length={path.length:.12g}" + (" (tie)" if path.tie else ""))
    return EXIT_OK


def cmd_oracle(args, out):
    qd = _qd(args)
    g = flatcone.build_grid(qd, *args.res)
    length, nodes = flatcone.shortest_path(g, args.z_from, args.z_to)
    pts = g.node_position(np.array(nodes))
    via_center = 0 in nodes
    out.write("oracle_path.csv", _points_csv(pts))
    out.json("oracle.json", {"phi": qd.to_dict(), "from": args.z_from, "to": args.z_to, "resolution": list(args.res),
                             "length": length, "via_center": via_center, "nodes": len(nodes),
                             "discretization_bound": g.discretization_bound})
    print(f"length={length:.6g} via_center={via_center} bound={g.discretization_bound:.3%}")
    return EXIT_OK


def cmd_converge(args, out):
    qd = _qd(args)
    rows = flatcone.convergence_study(qd, args.z_from, args.z_to, args.res)
    ok = flatcone.errors_nonincreasing(rows)
    out.write("convergence.csv", flatcone.study_to_csv(rows))
    out.json("convergence.json", {"phi": qd.to_dict(), "rows": rows, "nonincreasing": ok})
    for r in rows:
        err = "n/a" if r["rel_error"] is None else f"{r['rel_error']:.3e}"
        print(f"{r['n_r']}x{r['n_theta']}: oracle={r['oracle']:.6g} rel_error={err}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_word(args, out):
    w = _word(args.word, args.n)
    if args.action == "weight":
        val = word.weight(w)
        result = {"weight": val, "h_weight_over_pi": str(w.h_weight_over_pi)}
        print(repr(val))
    elif args.action == "normalize":
        c = word.canonical_form(w)
        result = {"canonical": str(c), "normalized": word.is_normalized(c)}
        print(f"{c}  normalized={word.is_normalized(c)}")
    elif args.action == "equiv":
        if args.other is None:
            raise UsageError("word equiv needs --other")
        eq = word.equivalent(w, _word(args.other, args.n))
        result = {"other": args.other, "equivalent": eq}
        print(str(eq).lower())
    elif args.action == "index":
        idx = word.index(w)
        result = {"index": idx}
        print(idx)
    else:
        n = args.order if args.order is not None else word.min_order_realizing(w)
        layout = word.realize(w, n)
        result = {"layout": layout.to_dict()}
        for s in layout.sectors:
            print(f"{s.kind} start={s.start:.6f} sweep={s.sweep:.6f}")
    out.json(f"word_{args.action}.json", {"word": str(w), "n": w.n, **result})
    return EXIT_OK


def _field(args):
    if args.layout:
        w = _word(args.layout, args.n)
        n = args.order if args.order is not None else word.min_order_realizing(w)
        layout = word.realize(w, n)
        return sector.sample_layout(layout, (args.r_in, args.r_out), (3, args.samples)), layout
    qd = _qd(args)
    return sector.sample_foliation(qd, args.t, (args.r_in, args.r_out), (3, args.samples)), qd


def cmd_sectors(args, out):
    fld, src = _field(args)
    w = sector.detect_sectors(fld, src)
    idx = word.index(w)
    out.write("sectors.csv", sector.sectors_to_csv(w))
    out.json("sectors.json", {"provenance": fld.provenance, "word": str(w), "n": w.n,
                              "canonical": str(word.canonical_form(w)), "index": idx})
    print(f"{w}  index={idx}")
    return EXIT_OK


def cmd_winding(args, out):
    fld, _ = _field(args)
    r = args.r if args.r is not None else 0.5 * (args.r_in + args.r_out)
    idx = sector.winding_index(fld, r)
    out.write("field.csv", fld.to_csv())
    out.json("winding.json", {"provenance": fld.provenance, "radius": r, "index": idx})
    print(idx)
    return EXIT_OK


def cmd_bonnet(args, out):
    qd = QuadraticDifferential(1.0, args.n, R=args.radius * math.sqrt(2))
    g = cmc.DiskGrid(args.radius, args.N)
    metric = cmc.flat_metric(args.H, g)
    rows = []
    worst = 0.0
    for t in args.t:
        f = cmc.bonnet_forms(metric, qd, t)
        err = float(np.max(np.abs(cmc.hopf_differential(f.l, f.m, f.nn) - np.exp(-2j * t) * g.z ** args.n)))
        herr = float(np.max(np.abs(f.mean_curvature - args.H)))
        worst = max(worst, err, herr)
        rows.append({"t": t, "hopf_identity_error": err, "mean_curvature_error": herr})
        print(f"t={t:.6f} hopf_identity_error={err:.3e} mean_curvature_error={herr:.3e}")
    out.json("bonnet.json", {"n": args.n, "H": args.H, "N": args.N, "radius": args.radius, "rows": rows})
    return EXIT_OK if worst <= args.tol else EXIT_CHECK


def cmd_codazzi(args, out):
    errs, hs = [], []
    for N in args.grids:
        g = cmc.DiskGrid(args.radius, N)
        errs.append(cmc.sup(cmc.codazzi_residual(g.z ** args.n, args.H, g)))
        hs.append(g.h)
    order = cmc.observed_order(errs, hs) if min(errs) > 0 else math.inf
    out.json("codazzi.json", {"n": args.n, "H": args.H, "grids": args.grids, "h": hs, "residual_sup": errs,
                              "observed_order": order})
    for N, e in zip(args.grids, errs):
        print(f"N={N} residual={e:.3e}")
    print(f"observed order {order:.3f}")
    return EXIT_OK if order >= args.min_order else EXIT_CHECK


def cmd_gauss_solve(args, out):
    qd = None if args.phi.strip() == "0" else QuadraticDifferential.parse(args.phi, args.radius * math.sqrt(2))
    try:
        metric = cmc.solve_gauss(qd, args.H, args.boundary, args.radius, args.N, tol=args.tol)
    except NonConvergenceError as exc:
        out.json("gauss.json", {"converged": False, "residual_history": exc.history, "message": str(exc)})
        print(exc)
        return EXIT_CHECK
    rep = cmc.solver_report(metric, qd)
    rep["converged"] = True
    out.json("gauss.json", rep)
    out.write("lambda.csv", metric.to_csv())
    print(f"iterations={rep['iterations']} residual={metric.history[-1]:.3e} "
          f"gauss_residual={rep['gauss_residual_sup']:.3e}")
    return EXIT_OK if rep["gauss_residual_sup"] < args.accept else EXIT_CHECK


def cmd_lemma3(args, out):
    qd = QuadraticDifferential(1.0, args.n, R=1.0)
    g = cmc.DiskGrid(1.0, args.N)
    metric = cmc.flat_metric(args.H, g)
    reps = [cmc.verify_lemma3(metric, qd, t, (args.r_in, args.r_out), step=args.step) for t in args.t]
    out.json("lemma3.json", {"reports": reps})
    ok = True
    for r in reps:
        print(f"t={r['t']:.6f} direction_deviation={r['max_direction_deviation']:.3e} "
              f"hausdorff={r['max_hausdorff']:.3e}")
        ok &= r["max_direction_deviation"] < 1e-10 and r["max_hausdorff"] < 1e-4
    return EXIT_OK if ok else EXIT_CHECK


def _immersion(args):
    fam = args.family
    if fam == "ellipsoid":
        return surface.ellipsoid(args.a, args.b, args.c)
    if fam == "sphere":
        return surface.sphere(args.a)
    if fam == "superellipsoid":
        return surface.superellipsoid(args.exponent)
    if fam == "perturbed_sphere":
        if args.coeffs is not None:
            return surface.perturbed_sphere(args.coeffs, args.eps)
        members, _ = surface.corpus(args.member + 1, args.seed, args.eps)
        return members[args.member]
    raise UsageError(f"unknown family {fam!r}")


def cmd_surface_scan(args, out):
    imm = _immersion(args)
    conv = surface.check_convex(imm)
    if not conv["convex"]:
        out.json("surface_scan.json", {"surface": imm.describe(), "convexity": conv, "rejected": True})
        print("rejected: not convex")
        return EXIT_CHECK
    rep = surface.poincare_hopf_check(imm, args.resolution)
    rep["convexity"] = conv
    out.json("surface_scan.json", rep)
    print(f"umbilics={len(rep['umbilics'])} indices={[u['index'] for u in rep['umbilics']]} sum={rep['index_sum']}")
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def cmd_caratheodory(args, out):
    if args.corpus:
        members, rejected = surface.corpus(args.size, args.seed, args.eps)
        out.write("corpus.json", surface.corpus_json(members))
    else:
        members, rejected = [_immersion(args)], 0
    reports = [surface.caratheodory_check(m, args.resolution) for m in members]
    passed = all(r["passed"] for r in reports)
    summary = {"members": len(reports), "rejected_nonconvex": rejected, "all_passed": passed,
               "min_count": min(r["count"] for r in reports),
               "max_index": str(max(Fraction(r["max_index"]) for r in reports)),
               "reports": reports}
    out.json("caratheodory.json", summary)
    print(f"members={len(reports)} all_passed={passed} min_count={summary['min_count']} "
          f"max_index={summary['max_index']}")
    return EXIT_OK if passed else EXIT_CHECK


def cmd_plot(args, out):
    if args.kind in ("foliation", "sectors"):
        qd = _qd(args)
        theta = 2 * args.t
        leaves, rows = [], ["leaf,u,v"]
        r0 = 0.6 * qd.R
        for k, psi in enumerate(np.linspace(0, 2 * np.pi, args.leaves, endpoint=False)):
            for o in (1, -1):
                tr = geodesic.trace_trajectory(qd, r0 * np.exp(1j * psi), theta, 0.01 * qd.R, 2.0 * qd.R, o)
                leaves.append(tr.points)
                rows += [f"{2 * k + (o < 0)},{z.real!r},{z.imag!r}" for z in tr.points]
        overlay = None
        if args.kind == "sectors":
            fld = sector.sample_foliation(qd, args.t, (0.25 * qd.R, qd.R))
            w = sector.detect_sectors(fld, qd)
            sweep_h = 2 * np.pi / (qd.n + 2)
            # recover sector starts from the separatrix nearest angle 0
            g = sector._offset(fld, fld.angles, fld.radii[1])
            j = int(np.flatnonzero((g[:-1] > 0) & (g[1:] <= 0))[0])
            start = float(fld.angles[j])
            overlay = [(s, start - k * sweep_h, sweep_h) for k, s in enumerate(w.symbols)]
            out.write("sectors.csv", sector.sectors_to_csv(w))
        out.write(f"{args.kind}.csv", "\n".join(rows) + "\n")
        out.write(f"{args.kind}.svg", svg.foliation_svg(leaves, qd.R, overlay))
        print(f"wrote {args.kind}.svg with {len(leaves)} leaves")
        return EXIT_OK
    imm = _immersion(args)
    ums = surface.find_umbilics(imm, args.resolution)
    us, vs = surface.chart_grid("band", 24)
    U, V = np.meshgrid(us, vs)
    dirs = surface.principal_chart_direction(imm, "band", U, V)
    pts = (U + 1j * V).ravel()
    marks = [(complex(u.u, u.v), str(u.index)) for u in ums if u.chart == "band"]
    out.write("umbilics.svg", svg.line_field_svg(pts, dirs.ravel(), marks, extent=np.pi, center=np.pi))
    out.json("umbilics.json", {"surface": imm.describe(), "umbilics": [u.to_dict() for u in ums],
                               "field": {"u": U.ravel(), "v": V.ravel(), "direction": dirs.ravel()}})
    print(f"wrote umbilics.svg with {len(marks)} band umbilics marked")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def _add_phi(p):
    p.add_argument("--phi", default="z^2", help="polynomial such as z^2 or (1+1j)*z + 0.1*z^2")
    p.add_argument("--phi-file", help="differential as JSON (overrides --phi)")
    p.add_argument("--R", type=float, default=1.0, help="chart radius")


def _add_field(p):
    _add_phi(p)
    p.add_argument("--t", type=float, default=0.0, help="slope of the foliation")
    p.add_argument("--layout", help="sample the realized layout of this word instead")
    p.add_argument("--n", type=int, default=1, help="order used with --layout")
    p.add_argument("--order", type=int, help="realize the layout at this order")
    p.add_argument("--r-in", type=float, default=0.25)
    p.add_argument("--r-out", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=2048)


def _add_surface(p):
    p.add_argument("--family", default="ellipsoid",
                   choices=["ellipsoid", "sphere", "perturbed_sphere", "superellipsoid"])
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--exponent", type=float, default=0.8)
    p.add_argument("--coeffs", type=_floats)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=20240607)
    p.add_argument("--member", type=int, default=0)
    p.add_argument("--resolution", type=int, default=60)


def build_parser():
    ap = argparse.ArgumentParser(prog="phigeo", description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.environ.get("PHIGEO_OUT", "phigeo_out"), help="artifact directory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="integrate a constant-phase trajectory")
    _add_phi(p)
    p.add_argument("--start", type=_point, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--max-arclen", type=float, default=1.0)
    p.add_argument("--orientation", type=int, choices=[1, -1], default=1)
    p.set_defaults(func=cmd_trace)

    for name, func, help_ in (("connect", cmd_connect, "analytic geodesic between two points"),
                              ("oracle", cmd_oracle, "graph shortest path on the polar grid"),
                              ("converge", cmd_converge, "oracle convergence study")):
        p = sub.add_parser(name, help=help_)
        _add_phi(p)
        p.add_argument("--from", dest="z_from", type=_point, required=True)
        p.add_argument("--to", dest="z_to", type=_point, required=True)
        if name == "oracle":
            p.add_argument("--res", type=_pair, default=(256, 512))
        elif name == "converge":
            p.add_argument("--res", type=_pair, action="append", required=True,
                           help="repeat for each resolution, e.g. --res 64,128 --res 128,256 --res 256,512")
        p.set_defaults(func=func)

    p = sub.add_parser("word", help="sector word calculus")
    p.add_argument("action", choices=["weight", "normalize", "equiv", "index", "realize"])
    p.add_argument("--word", required=True)
    p.add_argument("--other")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--order", type=int)
    p.set_defaults(func=cmd_word)

    p = sub.add_parser("sectors", help="detect the sector word of a foliation")
    _add_field(p)
    p.set_defaults(func=cmd_sectors)

    p = sub.add_parser("winding", help="winding index of a sampled line field")
    _add_field(p)
    p.add_argument("--r", type=float)
    p.set_defaults(func=cmd_winding)

    p = sub.add_parser("bonnet", help="rotated Hopf identity of the Bonnet family")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--t", type=_floats, default=[k * math.pi / 8 for k in range(8)])
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_bonnet)

    p = sub.add_parser("codazzi", help="Codazzi residual refinement study")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--grids", type=_ints, default=[33, 65, 129])
    p.add_argument("--min-order", type=float, default=1.8)
    p.set_defaults(func=cmd_codazzi)

    p = sub.add_parser("gauss-solve", help="solve for the conformal factor")
    p.add_argument("--phi", default="z", help="polynomial, or 0 for the zero differential")
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--boundary", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--N", type=int, default=129)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--accept", type=float, default=1e-8)
    p.set_defaults(func=cmd_gauss_solve)

    p = sub.add_parser("lemma3", help="principal directions against the slope-t geodesic field")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--N", type=int, default=65)
    p.add_argument("--t", type=_floats, default=[0.0, math.pi / 3])
    p.add_argument("--r-in", type=float, default=0.3)
    p.add_argument("--r-out", type=float, default=0.9)
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(func=cmd_lemma3)

    p = sub.add_parser("surface-scan", help="umbilics and Poincare-Hopf sum of one surface")
    _add_surface(p)
    p.set_defaults(func=cmd_surface_scan)

    p = sub.add_parser("caratheodory", help="umbilic count and index bound (single surface or corpus)")
    _add_surface(p)
    p.add_argument("--corpus", action="store_true")
    p.add_argument("--size", type=int, default=25)
    p.set_defaults(func=cmd_caratheodory)

    p = sub.add_parser("plot", help="SVG figures with their data")
    p.add_argument("kind", choices=["foliation", "sectors", "umbilics"])
    _add_phi(p)
    _add_surface(p)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--leaves", type=int, default=16)
    p.set_defaults(func=cmd_plot)
    return ap


_NUMERIC = re.compile(r"^-[\d.]")


def _join_negative_values(argv):
    """Turn ``--to -1,0`` into ``--to=-1,0`` so argparse does not read the value as an option."""
    out = []
    for tok in argv:
        if out and _NUMERIC.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args.out)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # domain, construction and precondition errors are all input problems
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
