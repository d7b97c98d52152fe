"""Acceptance suite: each criterion as a function returning a JSON-ready result.

Every function is deterministic given its seed, and reports contain no timings,
so two runs with the same seeds serialize to identical bytes.
"""

import json
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .causal_analysis import (
    AchronalGraph,
    BlendFunction,
    ConeFunction,
    CurveKind,
    classify_curve,
    is_achronal_graph,
    is_cauchy_graph,
    limit_curve,
)
from .causal_analysis.curves import CausalCurve
from .conformal_group import correspondences_from, fit_liouville, random_orthogonal
from .domains import Diamond, Union, boundary_split, expansion_check, is_causally_convex
from .ein_model import (
    EinPoint,
    EinTildePoint,
    boundary_of_past,
    classify_codes,
    delta,
    null_geodesic_arrays,
    sigma,
    sphere_distances,
    totally_vicious_witness,
)
from .embeddings import causal_agreement, conformality_report, embed_arrays
from .sampling import make_rng, random_sphere_points, random_tangents

LATTICE = 64
STENCIL = 0.3
ENDPOINT_LINKS = 8


def _result(k, name, passed, **metrics):
    return {"id": k, "name": name, "passed": bool(passed), "metrics": metrics}


# --------------------------------------------------------------------------
# 1. lattice oracle for the causal relation


class LatticeOracle:
    """Shortest discrete paths on a lat-long grid of S^2.

    A discrete 1-Lipschitz path from (x_p, t_p) to (x_q, t_q) exists iff some
    chain of grid cells joining them has total arc length at most |t_q - t_p|.
    Cells are joined when closer than ``STENCIL``; each edge is a genuine great
    arc, so the lattice length of a chain is the length of an actual curve.
    Endpoints attach to their nearest cells.
    """

    def __init__(self, size=LATTICE, stencil=STENCIL):
        self.size = size
        i, j = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        colat = (i.ravel() + 0.5) * math.pi / size
        lon = 2.0 * math.pi * j.ravel() / size
        self.cells = np.column_stack(
            [np.sin(colat) * np.cos(lon), np.sin(colat) * np.sin(lon), np.cos(colat)]
        )
        self.tree = cKDTree(self.cells)
        self.stencil = stencil
        chord = 2.0 * math.sin(stencil / 2.0)
        pairs = self.tree.query_pairs(chord, output_type="ndarray")
        w = sphere_distances(self.cells[pairs[:, 0]], self.cells[pairs[:, 1]])
        m = size * size
        graph = coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(m, m)).tocsr()
        # longitude rotations are symmetries, so one source per latitude row suffices
        self.table = dijkstra(graph, directed=False, indices=np.arange(size) * size)

    def cell_distance(self, a, b):
        s = self.size
        i1, j1 = a // s, a % s
        i2, j2 = b // s, b % s
        return self.table[i1, i2 * s + (j2 - j1) % s]

    def path_length(self, xp, xq):
        """Length of the shortest lattice path between rows of ``xp`` and ``xq``."""
        dp, ip = self.tree.query(xp, k=ENDPOINT_LINKS)
        dq, iq = self.tree.query(xq, k=ENDPOINT_LINKS)
        dp = sphere_distances(xp[:, None, :], self.cells[ip])
        dq = sphere_distances(xq[:, None, :], self.cells[iq])
        inner = self.cell_distance(ip[:, :, None], iq[:, None, :])
        total = dp[:, :, None] + inner + dq[:, None, :]
        best = total.reshape(total.shape[0], -1).min(axis=1)
        direct = sphere_distances(xp, xq)
        return np.where(direct < self.stencil, np.minimum(best, direct), best)

    def relation(self, xp, tp, xq, tq):
        """+1 future, -1 past, 0 unrelated, from lattice path existence."""
        length = self.path_length(xp, xq)
        dt = tq - tp
        out = np.zeros(dt.shape, dtype=int)
        out[(dt > 0) & (length <= dt)] = 1
        out[(dt < 0) & (length <= -dt)] = -1
        return out, length


def criterion_oracle(seed, pairs=10_000):
    rng = make_rng(seed)
    xp = random_sphere_points(rng, 2, pairs)
    xq = random_sphere_points(rng, 2, pairs)
    tp = np.zeros(pairs)
    tq = rng.uniform(-4.0, 4.0, pairs)
    oracle = LatticeOracle()
    rel, length = oracle.relation(xp, tp, xq, tq)
    codes = classify_codes(xp, tp, xq, tq)
    formula = np.select([codes == 1, codes == 3], [1, -1], 0)
    d0 = sphere_distances(xp, xq)
    resolution = 2.0 * math.pi / LATTICE
    compared = np.abs(d0 - np.abs(tq - tp)) > resolution
    mismatches = int(np.count_nonzero(compared & (rel != formula)))
    return _result(
        1, "causal formula vs lattice path search", mismatches == 0,
        pairs=pairs, compared=int(compared.sum()), mismatches=mismatches,
        resolution=resolution, max_path_excess=float(np.max(length - d0)),
    )


# --------------------------------------------------------------------------
# 2-3. refocusing and the deck transformation


def criterion_refocusing(seed, count=100):
    rng = make_rng(seed)
    xs = random_sphere_points(rng, 2, count)
    ts = rng.uniform(-5.0, 5.0, count)
    dirs = random_tangents(rng, xs)
    err = 0.0
    for x, t, v in zip(xs, ts, dirs):
        p = EinTildePoint(x, t)
        for s, target in ((math.pi, sigma(p)), (2 * math.pi, delta(p))):
            gx, gt = null_geodesic_arrays(x, t, v, s)
            err = max(err, float(sphere_distances(gx, target.x)), abs(float(gt) - target.t))
    grid = np.linspace(0.1 * math.pi, 0.9 * math.pi, 801)
    min_sep = math.inf
    for k in range(count):
        v1, v2 = random_tangents(rng, np.repeat(xs[k][None, :], 2, axis=0))
        g1, _ = null_geodesic_arrays(xs[k], 0.0, v1, grid)
        g2, _ = null_geodesic_arrays(xs[k], 0.0, v2, grid)
        min_sep = min(min_sep, float(sphere_distances(g1, g2).min()))
    passed = err < 1e-9 and min_sep > 1e-3
    return _result(2, "null geodesics refocus at conjugate points", passed,
                   max_error=err, min_separation=min_sep)


def criterion_sigma_squared(seed, count=1000):
    rng = make_rng(seed)
    xs = random_sphere_points(rng, 2, count)
    ts = rng.uniform(-10.0, 10.0, count)
    x_exact = True
    worst_ulps = 0.0
    for x, t in zip(xs, ts):
        p = EinTildePoint(x, t)
        a, b = sigma(sigma(p)), delta(p)
        x_exact &= bool(np.array_equal(a.x, b.x))
        worst_ulps = max(worst_ulps, abs(a.t - b.t) / float(np.spacing(abs(b.t))))
    return _result(3, "sigma squared equals the deck transformation", x_exact and worst_ulps <= 1.0,
                   points=count, sphere_exact=x_exact, max_time_ulps=worst_ulps)


# --------------------------------------------------------------------------
# 4. Liouville reconstruction


def criterion_liouville(seed, count=50, n=2):
    rng = make_rng(seed)
    worst_err = worst_res = worst_pair = 0.0
    for k in range(count):
        g = random_orthogonal(seed * 1000 + k, rng.uniform(0.0, 2.0), n)
        xs = random_sphere_points(rng, n, 2 * (n + 6))
        th = rng.uniform(0.0, 2 * math.pi, 2 * (n + 6))
        pts = [EinPoint(x, t) for x, t in zip(xs, th)]
        fits = [fit_liouville(correspondences_from(g, pts[i::2])) for i in (0, 1)]
        for f in fits:
            worst_err = max(worst_err, float(np.linalg.norm(f.transform.matrix - g.matrix)))
            worst_res = max(worst_res, f.residual)
        worst_pair = max(worst_pair, float(np.linalg.norm(fits[0].transform.matrix - fits[1].transform.matrix)))
    passed = worst_err < 1e-6 and worst_res < 1e-8 and worst_pair < 1e-6
    return _result(4, "conformal map recovered from point correspondences", passed,
                   transforms=count, max_matrix_error=worst_err, max_residual=worst_res,
                   max_disjoint_disagreement=worst_pair)


# --------------------------------------------------------------------------
# 5. Penrose embedding


def criterion_penrose(seed, n=2):
    base = np.zeros(n + 1)
    base[-1] = 1.0
    report = conformality_report(base, 200, seed, radius=5.0)
    mismatches, pairs = causal_agreement(base, 10_000, seed + 1, radius=5.0, eps=1e-7)
    rng = make_rng(seed + 2)
    null_ok = 0
    for _ in range(20):
        start = rng.uniform(-3.0, 3.0, n + 1)
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        s = np.linspace(-2.0, 2.0, 50)
        xs, ts = embed_arrays(start[0] + s, start[1:] + s[:, None] * u, base)
        if classify_curve(CausalCurve(ts, xs)).kind is CurveKind.NullGeodesic:
            null_ok += 1
    passed = report.max_defect < 1e-5 and mismatches == 0 and null_ok == 20
    return _result(5, "Minkowski space embeds conformally", passed,
                   max_defect=report.max_defect, max_factor_error=report.max_factor_error,
                   classification_mismatches=mismatches, pairs=pairs, null_lines_ok=null_ok)


# --------------------------------------------------------------------------
# 6. compact Cauchy surface


def criterion_compact_cauchy(seed, probes=500):
    rng = make_rng(seed)
    p = EinTildePoint(random_sphere_points(rng, 2, 1)[0], float(rng.uniform(-3.0, 3.0)))
    g = boundary_of_past(p, 2 * math.pi / 128)
    ach = is_achronal_graph(g, eps=1e-7)
    cau = is_cauchy_graph(g, probes=probes, seed=seed, eps=1e-7)
    passed = ach.achronal and cau.cauchy and not cau.failures
    return _result(6, "boundary of a past is a compact Cauchy surface", passed,
                   samples=len(g), achronal=ach.achronal, pairs_checked=ach.pairs_checked,
                   cauchy=cau.cauchy, probes=probes, failed_probes=len(cau.failures))


# --------------------------------------------------------------------------
# 7. limit curves


def criterion_limit_curve(seed, terms=64, grid=256):
    rng = make_rng(seed)
    x = random_sphere_points(rng, 2, 1)[0]
    v, w = random_tangents(rng, np.repeat(x[None, :], 2, axis=0))
    w = w - (w @ v) * v
    w /= np.linalg.norm(w)
    s = np.linspace(0.0, 3.0, 301)
    curves = []
    for k in range(1, terms + 1):
        vk = v + w / k
        vk /= np.linalg.norm(vk)
        xs, ts = null_geodesic_arrays(x, 0.0, vk, s)
        curves.append(CausalCurve(ts, xs))
    lim = limit_curve(curves, grid=grid)
    # both curves resampled on one dense grid, so the distance measures the curves, not their samples
    dense = np.linspace(0.0, 3.0, 1501)
    tx, tt = null_geodesic_arrays(x, 0.0, v, dense)
    lx = lim.position_at(dense)
    d = sphere_distances(lx[:, None, :], tx[None, :, :]) + np.abs(dense[:, None] - tt[None, :])
    hausdorff = max(float(d.min(axis=1).max()), float(d.min(axis=0).max()))
    kind = classify_curve(lim).kind
    passed = hausdorff < 2 * math.pi / grid and kind is not CurveKind.NotCausal
    return _result(7, "limit of null geodesics is the limiting geodesic", passed,
                   hausdorff=hausdorff, tolerance=2 * math.pi / grid, kind=kind.value)


# --------------------------------------------------------------------------
# 8. domains


def random_diamond(rng, n=2):
    xa = random_sphere_points(rng, n, 1)[0]
    span = float(rng.uniform(0.8, 2.8))
    v = random_tangents(rng, xa[None, :])[0]
    r = float(rng.uniform(0.0, span - 0.3))
    xb = math.cos(r) * xa + math.sin(r) * v
    ta = float(rng.uniform(-2.0, 2.0))
    return Diamond(EinTildePoint(xa, ta), EinTildePoint(xb / np.linalg.norm(xb), ta + span))


def criterion_domains(seed, diamonds=10, trials=1000):
    rng = make_rng(seed)
    witnesses = 0
    for k in range(diamonds):
        d = random_diamond(rng)
        if not is_causally_convex(d, trials, seed + k).convex:
            witnesses += 1
    x0 = np.array([1.0, 0.0, 0.0])
    stacked = Union((
        Diamond(EinTildePoint(x0, -1.0), EinTildePoint(x0, 0.0)),
        Diamond(EinTildePoint(x0, 0.5), EinTildePoint(x0, 1.5)),
    ))
    refute = is_causally_convex(stacked, trials, seed)
    refuted = (not refute.convex) and refute.witness is not None
    if refuted:
        c = refute.witness
        refuted = classify_curve(c).is_causal and bool(stacked.contains(c.start)) and bool(
            stacked.contains(c.end)) and not stacked.contains(c.points()[refute.exit_index])
    mesh = 2 * math.pi / 64
    d = random_diamond(rng)
    s = d.cauchy_graph(mesh)
    split = boundary_split(d, s, mesh, triples=1000, seed=seed)
    dev_plus = float(np.max(np.abs(split.plus_ts - (d.b.t - sphere_distances(split.plus_xs, d.b.x)))))
    dev_minus = float(np.max(np.abs(split.minus_ts - (d.a.t + sphere_distances(split.minus_xs, d.a.x)))))
    passed = (witnesses == 0 and refuted and max(dev_plus, dev_minus) < mesh and split.disjoint
              and split.plus_achronal and split.minus_achronal
              and split.triples_checked >= 1000 and split.inclusion_failures == 0)
    return _result(8, "domain convexity, counterexample and boundary split", passed,
                   diamonds=diamonds, convexity_witnesses=witnesses, stacked_refuted=refuted,
                   split_deviation=max(dev_plus, dev_minus), mesh=mesh, disjoint=split.disjoint,
                   plus_achronal=split.plus_achronal, minus_achronal=split.minus_achronal,
                   triples=split.triples_checked, inclusion_failures=split.inclusion_failures)


# --------------------------------------------------------------------------
# 9. expansion


def random_lipschitz_graph(rng, c, mesh, n=2):
    """Blend of three cones with slopes in [-c, c]; its Lipschitz constant is at most ``c``."""
    centers = random_sphere_points(rng, n, 3)
    slopes = [c] + list(rng.uniform(-c, c, 2))
    parts = [ConeFunction(z, sl, float(rng.uniform(-1, 1))) for z, sl in zip(centers, slopes)]
    return AchronalGraph.from_function(BlendFunction(parts, [0.6, 0.2, 0.2]), n, mesh)


def criterion_expansion(seed, graphs=20):
    rng = make_rng(seed)
    worst_gap = math.inf
    max_ratio = -math.inf
    for k in range(graphs):
        c = float(rng.uniform(0.0, 0.9))
        g = random_lipschitz_graph(rng, c, 2 * math.pi / 48)
        rep = expansion_check(g, 1000, seed + k)
        worst_gap = min(worst_gap, rep.min_ratio - (1 - c * c - 0.01))
        max_ratio = max(max_ratio, rep.max_ratio)
    passed = worst_gap >= 0 and max_ratio <= 1 + 1e-9
    return _result(9, "strict graphs expand under sphere projection", passed,
                   graphs=graphs, min_margin_over_bound=worst_gap, max_ratio=max_ratio)


# --------------------------------------------------------------------------
# 10. total viciousness


def criterion_vicious(seed, count=1000):
    rng = make_rng(seed)
    xs = random_sphere_points(rng, 2, 2 * count)
    th = rng.uniform(0.0, 2 * math.pi, 2 * count)
    worst = 0
    for k in range(count):
        e1 = EinPoint(xs[2 * k], th[2 * k])
        e2 = EinPoint(xs[2 * k + 1], th[2 * k + 1])
        worst = max(worst, totally_vicious_witness(e1, e2))
    return _result(10, "compact model is totally vicious", worst <= 2, pairs=count, max_winding=worst)


# --------------------------------------------------------------------------


CRITERIA = (
    criterion_oracle,
    criterion_refocusing,
    criterion_sigma_squared,
    criterion_liouville,
    criterion_penrose,
    criterion_compact_cauchy,
    criterion_limit_curve,
    criterion_domains,
    criterion_expansion,
    criterion_vicious,
)


def run_suite(seed=0):
    return [fn(seed + 101 * k) for k, fn in enumerate(CRITERIA)]


def report_bytes(results):
    return json.dumps(results, sort_keys=True, allow_nan=False).encode()


def run_selftest(seed=0):
    """Run criteria 1-10 twice; criterion 11 compares the two serialized reports."""
    first = run_suite(seed)
    second = run_suite(seed)
    same = report_bytes(first) == report_bytes(second)
    return first + [_result(11, "selftest is byte-for-byte deterministic", same, runs=2)]


def format_table(results):
    lines = []
    for r in results:
        lines.append(f"{r['id']:>2}  {'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
    return "\n".join(lines)
