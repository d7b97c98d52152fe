"""Command-line front end.

Exit codes: 0 when the library accepts, 1 on a refutation backed by a witness,
2 on validation or usage errors (with {"error": ...} on stderr).

CSV columns, where a subcommand supports --format csv:
  geodesic, limit-curve   t, x0..xn
  boundary                x0..xn, f
  embed                   tm, abs_y, t, d0
  sprinkle                source, target (edge list of the causal relation)
"""

import argparse
import io
import json
import math
import sys

import numpy as np

from . import io as sio
from .causal_analysis import (
    CausalCurve,
    classify_curve,
    development_membership,
    is_achronal_graph,
    is_cauchy_graph,
    limit_curve,
    sprinkle,
)
from .conformal_group import (
    apply_cover,
    apply_ein,
    canonical_lift,
    compose,
    correspondences_from,
    fit_liouville,
    random_orthogonal,
)
from .domains import (
    boundary_split,
    conjugate_construction,
    expansion_check,
    glue,
    is_causally_convex,
)
from .ein_model import (
    EinPoint,
    EinTildePoint,
    boundary_of_future,
    boundary_of_past,
    causal_classify,
    check_direction,
    null_geodesic_arrays,
)
from .embeddings import conformality_report, inverse_arrays, penrose_csv, penrose_embed
from .errors import EinError, GluingFailure
from .sampling import make_rng, random_sphere_points

EXIT_ACCEPT, EXIT_REFUTED, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_json(arg):
    """Inline JSON when the argument looks like JSON, otherwise a file path."""
    text = arg.strip()
    if text[:1] in "{[":
        return json.loads(text)
    with open(arg, encoding="utf-8") as fh:
        return json.load(fh)


def _require_seed(args):
    if args.seed is None:
        raise UsageError(f"{args.command} is randomized and needs an explicit --seed")
    return args.seed


def _base(args):
    if args.base is not None:
        return np.asarray(load_json(args.base), dtype=float)
    b = np.zeros(args.dim + 1)
    b[-1] = 1.0
    return b


def _tilde_point(arg, dim):
    p = sio.point_from_dict(load_json(arg), dim)
    if not isinstance(p, EinTildePoint):
        raise UsageError('expected a universal-cover point {"x": [...], "t": ...}')
    return p


def _curve_csv(c):
    buf = io.StringIO()
    buf.write("t," + ",".join(f"x{i}" for i in range(c.xs.shape[1])) + "\n")
    for t, x in zip(c.ts, c.xs):
        buf.write(",".join(repr(float(v)) for v in (t, *x)) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands: each returns (payload, exit code); payload is a dict or CSV text


def cmd_relate(args):
    p = _tilde_point(args.p, args.dim)
    q = _tilde_point(args.q, args.dim)
    return {"relation": causal_classify(p, q, args.eps).value}, EXIT_ACCEPT


def cmd_geodesic(args):
    p = _tilde_point(args.p, args.dim)
    direction = check_direction(p.x, load_json(args.dir))
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    s = np.linspace(args.s_min, args.s_max, args.samples)
    xs, ts = null_geodesic_arrays(p.x, p.t, direction, s)
    if args.s_max < args.s_min:
        xs, ts = xs[::-1], ts[::-1]
    c = CausalCurve(ts, xs)
    return (_curve_csv(c) if args.format == "csv" else sio.curve_to_dict(c)), EXIT_ACCEPT


def cmd_boundary(args):
    p = _tilde_point(args.p, args.dim)
    g = (boundary_of_future if args.future else boundary_of_past)(p, args.mesh)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write(",".join(f"x{i}" for i in range(args.dim + 1)) + ",f\n")
        for x, f in zip(g.points, g.values):
            buf.write(",".join(repr(float(v)) for v in (*x, f)) + "\n")
        return buf.getvalue(), EXIT_ACCEPT
    return sio.graph_to_dict(g, explicit=args.explicit), EXIT_ACCEPT


def cmd_curve_classify(args):
    c = sio.curve_from_dict(load_json(args.curve))
    v = classify_curve(c, args.eps)
    return v.to_dict(), (EXIT_ACCEPT if v.is_causal else EXIT_REFUTED)


def cmd_graph_check(args):
    g = sio.graph_from_dict(load_json(args.graph))
    v = is_achronal_graph(g, args.eps)
    return v.to_dict(), (EXIT_ACCEPT if v.achronal else EXIT_REFUTED)


def cmd_cauchy_check(args):
    g = sio.graph_from_dict(load_json(args.graph))
    v = is_cauchy_graph(g, args.probes, _require_seed(args), args.eps)
    return v.to_dict(), (EXIT_ACCEPT if v.cauchy else EXIT_REFUTED)


def cmd_limit_curve(args):
    data = load_json(args.curves)
    curves = [sio.curve_from_dict(c) for c in data["curves"]]
    c = limit_curve(curves, args.grid, args.eps)
    return (_curve_csv(c) if args.format == "csv" else sio.curve_to_dict(c)), EXIT_ACCEPT


def cmd_develop(args):
    q = _tilde_point(args.q, args.dim)
    g = sio.graph_from_dict(load_json(args.graph))
    v = development_membership(q, g, args.budget, _require_seed(args), args.eps)
    return v.to_dict(), (EXIT_ACCEPT if v.curve is None else EXIT_REFUTED)


def cmd_embed(args):
    base = _base(args)
    if args.points is not None:
        pts = [sio.minkowski_from_dict(m, args.dim) for m in load_json(args.points)["points"]]
    else:
        pts = [sio.minkowski_from_dict(load_json(args.m), args.dim)]
    if args.format == "csv":
        tm = np.array([m.tm for m in pts])
        ys = np.array([m.y for m in pts])
        return penrose_csv(tm, ys, base), EXIT_ACCEPT
    images = [sio.point_to_dict(penrose_embed(m, base)) for m in pts]
    return (images[0] if args.points is None else {"points": images}), EXIT_ACCEPT


def cmd_embed_inverse(args):
    p = _tilde_point(args.p, args.dim)
    tm, ys = inverse_arrays(p.x[None, :], np.array([p.t]), _base(args))
    return {"tm": float(tm[0]), "y": ys[0].tolist()}, EXIT_ACCEPT


def cmd_conformality(args):
    rep = conformality_report(_base(args), args.samples, _require_seed(args), args.radius)
    out = rep.to_dict()
    out["tolerance"] = args.tol
    return out, (EXIT_ACCEPT if rep.max_defect < args.tol else EXIT_REFUTED)


def _load_or_random_transform(args):
    if args.transform is not None:
        return sio.transform_from_dict(load_json(args.transform), args.dim)
    if args.random is None:
        raise UsageError("give --transform FILE or --random MAGNITUDE")
    return canonical_lift(random_orthogonal(_require_seed(args), args.random, args.dim))


def cmd_transform_apply(args):
    lift = _load_or_random_transform(args)
    if args.p is not None:
        p = sio.point_from_dict(load_json(args.p), args.dim)
        img = apply_ein(lift.base, p) if isinstance(p, EinPoint) else apply_cover(lift, p)
        return {"image": sio.point_to_dict(img), "transform": lift.to_dict()}, EXIT_ACCEPT
    if args.points is not None:
        pts = [sio.point_from_dict(d, args.dim) for d in load_json(args.points)["points"]]
        if not all(isinstance(p, EinPoint) for p in pts):
            raise UsageError('--points expects compact-model points {"x", "theta"}')
    else:
        rng = make_rng(_require_seed(args))
        xs = random_sphere_points(rng, args.dim, args.count)
        th = rng.uniform(0.0, 2 * math.pi, args.count)
        pts = [EinPoint(x, t) for x, t in zip(xs, th)]
    out = sio.correspondences_to_dict(correspondences_from(lift.base, pts))
    out["transform"] = lift.to_dict()
    return out, EXIT_ACCEPT


def cmd_transform_compose(args):
    first = sio.transform_from_dict(load_json(args.first), args.dim)
    second = sio.transform_from_dict(load_json(args.second), args.dim)
    return compose(first, second).to_dict(), EXIT_ACCEPT


def cmd_fit_liouville(args):
    pairs = sio.correspondences_from_dict(load_json(args.pairs))
    rep = fit_liouville(pairs)
    out = rep.to_dict()
    out["transform"] = canonical_lift(rep.transform).to_dict() if rep.transform.identity_component \
        else {"matrix": rep.transform.matrix.ravel().tolist(), "winding": 0}
    return out, EXIT_ACCEPT


def cmd_domain_check(args):
    d = sio.domain_from_dict(load_json(args.domain))
    if args.p is not None:
        return {"contains": bool(d.contains(_tilde_point(args.p, args.dim)))}, EXIT_ACCEPT
    v = is_causally_convex(d, args.trials, _require_seed(args), n=args.dim)
    return v.to_dict(), (EXIT_ACCEPT if v.convex else EXIT_REFUTED)


def cmd_boundary_split(args):
    d = sio.domain_from_dict(load_json(args.domain))
    g = sio.graph_from_dict(load_json(args.graph))
    split = boundary_split(d, g, args.mesh, args.triples, _require_seed(args), n=args.dim)
    return split.to_dict(), (EXIT_ACCEPT if split.valid else EXIT_REFUTED)


def cmd_glue(args):
    d1 = sio.domain_from_dict(load_json(args.first))
    d2 = sio.domain_from_dict(load_json(args.second))
    g = sio.graph_from_dict(load_json(args.graph))
    try:
        union, rep = glue(d1, d2, g, args.trials, args.probes, args.mesh, _require_seed(args))
    except GluingFailure as exc:
        out = {"error": str(exc), "verdict": "gluing failure"}
        if exc.report is not None:
            out["report"] = exc.report.to_dict()
        return out, EXIT_REFUTED
    return {"domain": union.to_dict(), "report": rep.to_dict()}, (EXIT_ACCEPT if rep.valid else EXIT_REFUTED)


def cmd_expansion_check(args):
    g = sio.graph_from_dict(load_json(args.graph))
    return expansion_check(g, args.pairs, _require_seed(args)).to_dict(), EXIT_ACCEPT


def cmd_conjugate_check(args):
    p = _tilde_point(args.p, args.dim)
    rep = conjugate_construction(p, args.mesh, args.probes, _require_seed(args))
    return rep.to_dict(), (EXIT_ACCEPT if rep.valid else EXIT_REFUTED)


def cmd_sprinkle(args):
    d = sio.domain_from_dict(load_json(args.domain))
    cs = sprinkle(d, args.count, _require_seed(args), n=args.dim, eps=args.eps)
    return (cs.to_edge_csv() if args.format == "csv" else cs.to_dict()), EXIT_ACCEPT


def cmd_selftest(args):
    from .acceptance import format_table, run_selftest

    results = run_selftest(_require_seed(args))
    ok = all(r["passed"] for r in results)
    if args.format == "json":
        return {"criteria": results, "passed": ok}, (EXIT_ACCEPT if ok else EXIT_REFUTED)
    return format_table(results) + "\n", (EXIT_ACCEPT if ok else EXIT_REFUTED)


CSV_COMMANDS = {"geodesic", "boundary", "embed", "limit-curve", "sprinkle", "selftest"}


# --------------------------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--dim", type=int, default=2, help="sphere dimension n >= 2 (default 2)")
    common.add_argument("--eps", type=float, default=1e-9, help="classification tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=None, help="seed, required by randomized commands")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default json; selftest defaults to a text table)")
    common.add_argument("--out", default=None, help="write output here instead of stdout")

    parser = _Parser(prog="eincausal", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(func=func)
        return sp

    sp = add("relate", cmd_relate, "causal relation of q to p")
    sp.add_argument("-p", required=True)
    sp.add_argument("-q", required=True)

    sp = add("geodesic", cmd_geodesic, "sample a null geodesic (CSV: t, x0..xn)")
    sp.add_argument("-p", required=True)
    sp.add_argument("--dir", required=True, help="unit tangent direction at p (JSON list)")
    sp.add_argument("--s-min", type=float, default=0.0)
    sp.add_argument("--s-max", type=float, required=True)
    sp.add_argument("--samples", type=int, default=100)

    sp = add("boundary", cmd_boundary, "boundary graph of the past (or future) of p (CSV: x0..xn, f)")
    sp.add_argument("-p", required=True)
    sp.add_argument("--mesh", type=float, default=2 * math.pi / 64)
    sp.add_argument("--future", action="store_true")
    sp.add_argument("--explicit", action="store_true", help="write samples instead of parameters")

    sp = add("curve-classify", cmd_curve_classify, "classify a sampled curve")
    sp.add_argument("--curve", required=True)

    sp = add("graph-check", cmd_graph_check, "pairwise achronality scan of a graph")
    sp.add_argument("--graph", required=True)

    sp = add("cauchy-check", cmd_cauchy_check, "probe a full-sphere graph with null geodesics")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--probes", type=int, default=100)

    sp = add("limit-curve", cmd_limit_curve, 'limit of {"curves": [curve, ...]} (CSV: t, x0..xn)')
    sp.add_argument("--curves", required=True)
    sp.add_argument("--grid", type=int, default=256)

    sp = add("develop", cmd_develop, "search for a curve escaping the development of a graph")
    sp.add_argument("-q", required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--budget", type=int, default=200)

    sp = add("embed", cmd_embed, "Penrose embedding of Minkowski points (CSV: tm, abs_y, t, d0)")
    sp.add_argument("-m", default=None, help='Minkowski point {"tm": ..., "y": [...]}')
    sp.add_argument("--points", default=None, help='{"points": [minkowski point, ...]}')
    sp.add_argument("--base", default=None, help="base point of S^n (default e_n)")

    sp = add("embed-inverse", cmd_embed_inverse, "Minkowski coordinates of a point in the diamond")
    sp.add_argument("-p", required=True)
    sp.add_argument("--base", default=None)

    sp = add("conformality", cmd_conformality, "finite-difference conformality report")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--base", default=None)

    sp = add("transform-apply", cmd_transform_apply, "apply a conformal transform")
    sp.add_argument("--transform", default=None)
    sp.add_argument("--random", type=float, default=None, help="seeded random transform of this magnitude")
    sp.add_argument("-p", default=None)
    sp.add_argument("--points", default=None)
    sp.add_argument("--count", type=int, default=8)

    sp = add("transform-compose", cmd_transform_compose, "composition: second applied first")
    sp.add_argument("--first", required=True)
    sp.add_argument("--second", required=True)

    sp = add("fit-liouville", cmd_fit_liouville, "recover a transform from correspondences")
    sp.add_argument("--pairs", required=True)

    sp = add("domain-check", cmd_domain_check, "membership (-p) or causal convexity scan")
    sp.add_argument("--domain", required=True)
    sp.add_argument("-p", default=None)
    sp.add_argument("--trials", type=int, default=1000)

    sp = add("boundary-split", cmd_boundary_split, "split a domain boundary by a Cauchy graph")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--mesh", type=float, default=2 * math.pi / 64)
    sp.add_argument("--triples", type=int, default=1000)

    sp = add("glue", cmd_glue, "glue two domains along a shared Cauchy graph")
    sp.add_argument("--first", required=True)
    sp.add_argument("--second", required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--probes", type=int, default=200)
    sp.add_argument("--mesh", type=float, default=2 * math.pi / 32)

    sp = add("expansion-check", cmd_expansion_check, "length expansion of a strict graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--pairs", type=int, default=1000)

    sp = add("conjugate-check", cmd_conjugate_check, "conjugate points and the boundary of a past")
    sp.add_argument("-p", required=True)
    sp.add_argument("--mesh", type=float, default=2 * math.pi / 64)
    sp.add_argument("--probes", type=int, default=100)

    sp = add("sprinkle", cmd_sprinkle, "causal set sprinkled in a domain (CSV: source, target)")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--count", type=int, required=True)

    add("selftest", cmd_selftest, "run the acceptance suite and print a pass/fail table")
    return parser


def _emit(payload, args):
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, allow_nan=False) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(message, kind):
    sys.stderr.write(json.dumps({"error": message, "type": kind}) + "\n")
    return EXIT_ERROR


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.dim < 2:
            raise UsageError("--dim must be >= 2")
        if not args.eps > 0:
            raise UsageError("--eps must be > 0")
        if args.format is None:
            args.format = "csv" if args.command == "selftest" else "json"
        if args.format == "csv" and args.command not in CSV_COMMANDS:
            raise UsageError(f"{args.command} has no CSV output")
        payload, code = args.func(args)
        _emit(payload, args)
        return code
    except UsageError as exc:
        return _fail(str(exc), "usage")
    except (EinError, ValueError, KeyError, TypeError, OSError) as exc:
        return _fail(str(exc), type(exc).__name__)


if __name__ == "__main__":
    sys.exit(main())
