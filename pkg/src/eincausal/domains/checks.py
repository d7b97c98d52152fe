"""Sampled verification of causal convexity, Cauchy surfaces, boundary splits and gluing.

Acceptance verdicts here are sampling-limited ("no witness found");
refutations always carry a witness that has been re-checked with the exact
membership predicate and the curve classifier.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..causal_analysis.causal_sets import sample_in_domain
from ..causal_analysis.curves import CausalCurve, classify_curve, slerp_rows
from ..causal_analysis.graphs import AchronalGraph, is_achronal_graph, is_cauchy_graph, pairwise_lipschitz_scan
from ..ein_model import (
    _PastBoundary,
    classify_codes,
    null_geodesic_arrays,
    sigma_inverse,
    sphere_distances,
)
from ..errors import DomainTooThinError, GluingFailure, PreconditionError, ResolutionError, ValidationError
from ..sampling import make_rng, random_sphere_points, random_tangents, sphere_mesh, tangent_frame
from .kinds import AllDomain, Union

CURVE_SAMPLES = 64
BISECT_ITERS = 60
SPLIT_TOL = 1e-9
ACHRONAL_EPS = 1e-7


def domain_dim(d, default=2):
    """Sphere dimension n of a domain; ``default`` for the dimensionless All."""
    for name in ("apex", "a"):
        if hasattr(d, name):
            return getattr(d, name).dim
    if hasattr(d, "lower"):
        return d.lower.dim
    if hasattr(d, "parts"):
        for part in d.parts:
            if not isinstance(part, AllDomain):
                return domain_dim(part, default)
    return default


# --------------------------------------------------------------------------
# causal convexity


@dataclass
class ConvexityVerdict:
    convex: bool
    pairs_checked: int
    curves_checked: int
    witness: CausalCurve = None
    exit_index: int = None

    def to_dict(self):
        out = {
            "convex": self.convex,
            "pairs_checked": self.pairs_checked,
            "curves_checked": self.curves_checked,
            "certificate": "no leaving curve found (sampling-limited)"
            if self.convex else "refuted by verified leaving causal curve",
        }
        if self.witness is not None:
            out["witness"] = {"ts": self.witness.ts.tolist(), "xs": self.witness.xs.tolist()}
            out["exit_index"] = self.exit_index
        return out


def _direct_curves(xp, tp, xq, tq, m):
    frac = np.linspace(0.0, 1.0, m + 1)
    k = xp.shape[0]
    xs = slerp_rows(np.repeat(xp, m + 1, axis=0), np.repeat(xq, m + 1, axis=0), np.tile(frac, k))
    ts = tp[:, None] + frac[None, :] * (tq - tp)[:, None]
    return xs.reshape(k, m + 1, -1), ts


def null_corner(xp, tp, dirs, xq, tq, iters=BISECT_ITERS):
    """Parameter s* where the future null geodesic from p along ``dirs`` meets the
    past null cone of q: the root of dt - s - d0(x(s), xq), which is nonincreasing."""
    dt = tq - tp
    lo = np.zeros_like(dt)
    hi = dt.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        xm = np.cos(mid)[:, None] * xp + np.sin(mid)[:, None] * dirs
        g = dt - mid - sphere_distances(xm, xq)
        up = g > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return 0.5 * (lo + hi)


def _null_curves(xp, tp, xq, tq, dirs, m):
    """Two-segment piecewise-null paths p -> corner -> q, ``m`` samples per segment.

    Rows whose second leg is too close to antipodal are flagged invalid.
    """
    s_star = null_corner(xp, tp, dirs, xq, tq)
    half = m // 2
    frac1 = np.linspace(0.0, 1.0, half + 1)
    s1 = frac1[None, :] * s_star[:, None]
    x1 = np.cos(s1)[..., None] * xp[:, None, :] + np.sin(s1)[..., None] * dirs[:, None, :]
    x1 /= np.linalg.norm(x1, axis=-1, keepdims=True)
    t1 = tp[:, None] + s1
    corner = x1[:, -1, :]
    tc = t1[:, -1]
    valid = (sphere_distances(corner, xq) < math.pi - 1e-6) & (tq - tc > 1e-12)
    # step along the great circle avoids large slerp jumps when the second leg is long
    frac2 = np.linspace(0.0, 1.0, half + 1)[1:]
    k = xp.shape[0]
    x2 = slerp_rows(np.repeat(corner, half, axis=0), np.repeat(xq, half, axis=0), np.tile(frac2, k))
    x2 = x2.reshape(k, half, -1)
    t2 = tc[:, None] + frac2[None, :] * (tq - tc)[:, None]
    xs = np.concatenate([x1, x2], axis=1)
    ts = np.concatenate([t1, t2], axis=1)
    return xs, ts, valid


def _verify_leaving_curve(d, xs, ts):
    """Re-check a candidate witness; return (curve, exit index) or None."""
    keep = np.concatenate([[True], np.diff(ts) > 0])
    xs, ts = xs[keep], ts[keep]
    try:
        curve = CausalCurve(ts, xs)
    except ValidationError:
        return None
    if not classify_curve(curve, eps=1e-9).is_causal:
        return None
    inside = d.contains_arrays(xs, ts)
    if not (inside[0] and inside[-1]) or inside.all():
        return None
    return curve, int(np.argmin(inside))


def is_causally_convex(d, trials=1000, seed=0, n=None, pool=None):
    """Search for a causal curve between two points of ``d`` that leaves ``d``."""
    n = n or domain_dim(d)
    rng = make_rng(seed)
    pool = pool or max(64, int(4 * math.sqrt(trials)) + 32)
    try:
        xs, ts = sample_in_domain(d, rng, pool, n)
    except DomainTooThinError as exc:
        raise DomainTooThinError(f"degenerate domain: {exc}") from exc
    if len(ts) < 2:
        raise DomainTooThinError("degenerate domain: fewer than 2 interior samples")
    codes = classify_codes(xs[:, None, :], ts[:, None], xs[None, :, :], ts[None, :], 1e-12)
    related = np.argwhere((codes == 1) | (codes == 2))
    if related.shape[0] == 0:
        return ConvexityVerdict(True, 0, 0)
    pick = related[rng.integers(0, related.shape[0], trials)]
    xp, tp = xs[pick[:, 0]], ts[pick[:, 0]]
    xq, tq = xs[pick[:, 1]], ts[pick[:, 1]]
    m = CURVE_SAMPLES
    families = []
    dxs, dts = _direct_curves(xp, tp, xq, tq, m)
    direct_ok = sphere_distances(xp, xq) < math.pi - 1e-6
    families.append((dxs, dts, direct_ok))
    for _ in range(2):
        dirs = random_tangents(rng, xp)
        families.append(_null_curves(xp, tp, xq, tq, dirs, m))
    curves = 0
    for fxs, fts, valid in families:
        k, mm, dim = fxs.shape
        inside = d.contains_arrays(fxs.reshape(k * mm, dim), fts.ravel()).reshape(k, mm)
        curves += int(np.count_nonzero(valid))
        bad = np.flatnonzero(valid & ~inside.all(axis=1))
        for i in bad:
            found = _verify_leaving_curve(d, fxs[i], fts[i])
            if found is not None:
                return ConvexityVerdict(False, trials, curves, found[0], found[1])
    return ConvexityVerdict(True, trials, curves)


# --------------------------------------------------------------------------
# boundary decomposition


@dataclass
class BoundarySplit:
    plus_xs: np.ndarray
    plus_ts: np.ndarray
    minus_xs: np.ndarray
    minus_ts: np.ndarray
    plus_achronal: bool = True
    minus_achronal: bool = True
    disjoint: bool = True
    triples_checked: int = 0
    inclusion_failures: int = 0
    plus_mesh_index: np.ndarray = None
    minus_mesh_index: np.ndarray = None

    @property
    def valid(self):
        return self.plus_achronal and self.minus_achronal and self.disjoint and self.inclusion_failures == 0

    def to_dict(self):
        return {
            "plus": [{"x": x.tolist(), "t": float(t)} for x, t in zip(self.plus_xs, self.plus_ts)],
            "minus": [{"x": x.tolist(), "t": float(t)} for x, t in zip(self.minus_xs, self.minus_ts)],
            "plus_count": int(len(self.plus_ts)),
            "minus_count": int(len(self.minus_ts)),
            "plus_achronal": self.plus_achronal,
            "minus_achronal": self.minus_achronal,
            "disjoint": self.disjoint,
            "triples_checked": self.triples_checked,
            "inclusion_failures": self.inclusion_failures,
            "valid": self.valid,
        }


def boundary_samples(d, mesh, n=None):
    """Bisected crossings of the boundary of ``d`` along vertical time lines.

    Returns (mesh point index, crossing time, entering) arrays, where
    ``entering`` is True when membership switches on going up in time.
    """
    n = n or domain_dim(d)
    pts = sphere_mesh(n, mesh)
    lo, hi = d.sampling_window()
    step = mesh / 2.0
    times = np.arange(lo - step, hi + 1.5 * step, step)
    m = times.shape[0]
    k = pts.shape[0]
    inside = d.contains_arrays(np.repeat(pts, m, axis=0), np.tile(times, k)).reshape(k, m)
    flips = np.argwhere(inside[:, 1:] != inside[:, :-1])
    if flips.shape[0] == 0:
        return pts, np.zeros(0, dtype=int), np.zeros(0), np.zeros(0, dtype=bool)
    idx = flips[:, 0]
    j = flips[:, 1]
    entering = ~inside[idx, j]
    a = times[j].copy()
    b = times[j + 1].copy()
    xs = pts[idx]
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (a + b)
        state = d.contains_arrays(xs, mid)
        same_as_low = state == ~entering
        a = np.where(same_as_low, mid, a)
        b = np.where(same_as_low, b, mid)
        if np.max(b - a) < SPLIT_TOL * 1e-2:
            break
    return pts, idx, 0.5 * (a + b), entering


def _min_separation(xa, ta, xb, tb):
    best = math.inf
    for s in range(0, xa.shape[0], 256):
        dd = sphere_distances(xa[s:s + 256, None, :], xb[None, :, :])
        dt = np.abs(ta[s:s + 256, None] - tb[None, :])
        best = min(best, float(np.min(dd + dt)))
    return best


def boundary_split(d, s, mesh, triples=1000, seed=0, n=None):
    """Split the sampled boundary of ``d`` into parts above and below the graph ``s``."""
    n = n or domain_dim(d, s.dim)
    if s.dim != n:
        raise ValidationError("graph and domain dimensions differ")
    pts, idx, tb, _ = boundary_samples(d, mesh, n)
    xs = pts[idx]
    gap = tb - s.evaluate(xs) if len(idx) else np.zeros(0)
    if np.any(np.abs(gap) <= SPLIT_TOL):
        i = int(np.argmin(np.abs(gap)))
        raise ResolutionError(
            f"boundary sample at t={tb[i]!r} is not chronologically separated from the graph "
            f"(gap {gap[i]!r}); refine the mesh or move the graph"
        )
    up = gap > 0
    split = BoundarySplit(xs[up], tb[up], xs[~up], tb[~up],
                          plus_mesh_index=idx[up], minus_mesh_index=idx[~up])
    for name in ("plus", "minus"):
        cx, ct = getattr(split, name + "_xs"), getattr(split, name + "_ts")
        if len(ct) > 1:
            worst = pairwise_lipschitz_scan(cx, ct, ACHRONAL_EPS)[0]
            setattr(split, name + "_achronal", bool(worst <= ACHRONAL_EPS))
    if len(split.plus_ts) and len(split.minus_ts):
        split.disjoint = _min_separation(split.plus_xs, split.plus_ts, split.minus_xs, split.minus_ts) > 0.0
        _inclusion_test(d, split, triples, seed, n)
    return split


def _inclusion_test(d, split, triples, seed, n):
    """Points chronologically below a plus sample and above a minus sample must lie in d."""
    rng = make_rng(seed)
    lo = float(split.minus_ts.min())
    hi = float(split.plus_ts.max())
    got = fails = 0
    for _ in range(200):
        if got >= triples:
            break
        cx = random_sphere_points(rng, n, 512)
        ct = rng.uniform(lo, hi, 512)
        below_plus = np.zeros(512, dtype=bool)
        above_minus = np.zeros(512, dtype=bool)
        for s in range(0, len(split.plus_ts), 512):
            c = classify_codes(cx[:, None, :], ct[:, None],
                               split.plus_xs[None, s:s + 512, :], split.plus_ts[None, s:s + 512], ACHRONAL_EPS)
            below_plus |= np.any(c == 1, axis=1)
        for s in range(0, len(split.minus_ts), 512):
            c = classify_codes(cx[:, None, :], ct[:, None],
                               split.minus_xs[None, s:s + 512, :], split.minus_ts[None, s:s + 512], ACHRONAL_EPS)
            above_minus |= np.any(c == 3, axis=1)
        sel = np.flatnonzero(below_plus & above_minus)[: triples - got]
        if sel.size == 0:
            continue
        got += sel.size
        fails += int(np.count_nonzero(~d.contains_arrays(cx[sel], ct[sel])))
    split.triples_checked = got
    split.inclusion_failures = fails


# --------------------------------------------------------------------------
# Cauchy surfaces of domains


@dataclass
class DomainCauchyVerdict:
    cauchy: bool
    probes: int
    contained: bool
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "cauchy": self.cauchy,
            "probes": self.probes,
            "graph_inside_domain": self.contained,
            "failed_probes": len(self.failures),
            "certificate": "no failing probe (sampling-limited)" if self.cauchy else "refuted by probe",
        }


def cauchy_in_domain(d, s, probes=200, seed=0, step=0.01):
    """Probe whether the graph ``s`` meets every inextensible null geodesic of ``d`` once.

    Each probe starts at a random point of d; the maximal piece of the null
    geodesic through it that stays in d must cross the graph exactly once, at a
    point within one mesh of a graph sample. The graph samples must lie in d.
    """
    n = s.dim
    contained = bool(np.all(d.contains_arrays(s.points, s.values)))
    rng = make_rng(seed)
    xs, ts = sample_in_domain(d, rng, probes, n)
    dirs = random_tangents(rng, xs)
    fmin, fmax = float(np.min(s.values)), float(np.max(s.values))
    lo_t, hi_t = d.sampling_window()
    lo_t, hi_t = min(lo_t, fmin) - 1.0, max(hi_t, fmax) + 1.0
    verdict = DomainCauchyVerdict(contained, probes, contained)
    for k in range(probes):
        grid = np.arange(lo_t - ts[k], hi_t - ts[k] + step, step)
        grid = np.union1d(grid, [0.0])
        gx, gt = null_geodesic_arrays(xs[k], ts[k], dirs[k], grid)
        inside = d.contains_arrays(gx, gt)
        i0 = int(np.searchsorted(grid, 0.0))
        a = i0
        while a > 0 and inside[a - 1]:
            a -= 1
        b = i0
        while b < len(grid) - 1 and inside[b + 1]:
            b += 1
        c = gt[a:b + 1] - s.evaluate(gx[a:b + 1])
        signs = np.sign(c)
        nz = signs[signs != 0]
        ok = nz.size > 0 and nz[0] < 0 and nz[-1] > 0 and np.count_nonzero(np.diff(nz)) == 1
        if ok:
            j = int(np.argmax(c >= 0))
            ok = bool(s.nearest_distance(gx[a + j])[0] <= max(s.mesh, step))
        if not ok:
            verdict.cauchy = False
            verdict.failures.append({"x": xs[k].tolist(), "t": float(ts[k]), "direction": dirs[k].tolist()})
    return verdict


# --------------------------------------------------------------------------
# gluing


@dataclass
class GlueReport:
    trivial: bool
    convexity: ConvexityVerdict = None
    union_cauchy: DomainCauchyVerdict = None
    merged_points: int = 0
    unexplained_points: int = 0
    swallowed_points: int = 0
    split: BoundarySplit = None

    @property
    def valid(self):
        if self.trivial:
            return True
        return (self.convexity.convex and self.union_cauchy.cauchy
                and self.unexplained_points == 0 and self.split.valid)

    def to_dict(self):
        out = {"trivial": self.trivial, "valid": self.valid}
        if not self.trivial:
            out.update({
                "convexity": self.convexity.to_dict(),
                "union_cauchy": self.union_cauchy.to_dict(),
                "union_boundary_points": self.merged_points,
                "unexplained_boundary_points": self.unexplained_points,
                "swallowed_boundary_points": self.swallowed_points,
                "union_split_valid": self.split.valid,
            })
        return out


def _boundary_keys(d, mesh, n):
    _, idx, tb, _ = boundary_samples(d, mesh, n)
    return idx, tb


def glue(d1, d2, s, trials=1000, probes=200, mesh=2 * math.pi / 32, seed=0):
    """Union of two domains sharing the Cauchy graph ``s``, re-validated.

    Raises PreconditionError when ``s`` is not Cauchy for an input, and
    GluingFailure (carrying the convexity witness) when the union is not
    causally convex.
    """
    if d1 == d2:
        return d1, GlueReport(trivial=True)
    for name, dom in (("first", d1), ("second", d2)):
        v = cauchy_in_domain(dom, s, probes, seed)
        if not v.cauchy:
            raise PreconditionError(
                f"graph is not a Cauchy surface of the {name} domain "
                f"(inside: {v.contained}, failed probes: {len(v.failures)})"
            )
    union = Union((d1, d2))
    n = s.dim
    convexity = is_causally_convex(union, trials, seed, n=n)
    report = GlueReport(trivial=False, convexity=convexity)
    if not convexity.convex:
        raise GluingFailure("union is not causally convex", report)
    report.union_cauchy = cauchy_in_domain(union, s, probes, seed)
    # union boundary points must come from an input boundary at the same mesh point
    ui, ut = _boundary_keys(union, mesh, n)
    tol = 1e-7
    parts = [_boundary_keys(dom, mesh, n) for dom in (d1, d2)]
    explained = np.zeros(len(ut), dtype=bool)
    used = 0
    for pi, pt in parts:
        for k in range(len(ut)):
            if not explained[k]:
                explained[k] = np.any((pi == ui[k]) & (np.abs(pt - ut[k]) <= tol))
        for k in range(len(pt)):
            if np.any((ui == pi[k]) & (np.abs(ut - pt[k]) <= tol)):
                used += 1
    report.merged_points = int(len(ut))
    report.unexplained_points = int(np.count_nonzero(~explained))
    report.swallowed_points = int(sum(len(p[1]) for p in parts) - used)
    report.split = boundary_split(union, s, mesh, triples=min(trials, 300), seed=seed, n=n)
    return union, report


# --------------------------------------------------------------------------
# expansion of the graph metric


@dataclass
class ExpansionReport:
    min_ratio: float
    max_ratio: float
    pairs: int
    lipschitz: float

    def to_dict(self):
        return {"min_ratio": self.min_ratio, "max_ratio": self.max_ratio,
                "pairs": self.pairs, "lipschitz": self.lipschitz}


def expansion_check(s, pairs=1000, seed=0, neighbours=6):
    """Ratio (d0^2 - df^2) / d0^2 over random nearby sample pairs of a strict graph."""
    verdict = is_achronal_graph(s, eps=1e-12)
    if not verdict.strict:
        raise PreconditionError(
            f"expansion check needs a strictly spacelike graph (Lipschitz {verdict.lipschitz!r} < 1)"
        )
    if len(s) < 2:
        raise PreconditionError("expansion check needs at least two graph samples")
    rng = make_rng(seed)
    k = min(neighbours, len(s) - 1)
    _, nb = cKDTree(s.points).query(s.points, k=k + 1)
    i = rng.integers(0, len(s), pairs)
    j = nb[i, rng.integers(1, k + 1, pairs)]
    d = sphere_distances(s.points[i], s.points[j])
    df = s.values[i] - s.values[j]
    ratio = (d**2 - df**2) / d**2
    return ExpansionReport(float(ratio.min()), float(ratio.max()), int(pairs), verdict.lipschitz)


# --------------------------------------------------------------------------
# conjugate points and the compact Cauchy surface


@dataclass
class ConjugateReport:
    refocus_error: float
    achronal: bool
    cauchy: bool
    generator_distance: float
    mesh: float
    probes: int

    @property
    def valid(self):
        return self.refocus_error < 1e-9 and self.achronal and self.cauchy and self.generator_distance < self.mesh

    def to_dict(self):
        return {
            "refocus_error": self.refocus_error,
            "achronal": self.achronal,
            "cauchy": self.cauchy,
            "generator_distance": self.generator_distance,
            "mesh": self.mesh,
            "probes": self.probes,
            "valid": self.valid,
        }


def _adapted_frame(x):
    """Orthonormal frame with first column x, satisfying frame(-x) = -frame(x)."""
    k = int(np.argmax(np.abs(x)))
    sign = 1.0 if x[k] > 0 else -1.0
    return sign * tangent_frame(sign * x)


def _tangent_directions(x, spacing):
    """Quasi-uniform unit tangent vectors at ``x`` with angular spacing about ``spacing``."""
    frame = _adapted_frame(x)[:, 1:]
    m = frame.shape[1]
    if m == 2:
        ang = np.linspace(0.0, 2 * math.pi, int(math.ceil(2 * math.pi / spacing)), endpoint=False)
        local = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        local = sphere_mesh(m - 1, spacing)
    return local @ frame.T


def conjugate_construction(p, mesh, probes=100, seed=0):
    """Build the boundary of the past of p and check it against its null generators."""
    rng = make_rng(seed)
    dirs = random_tangents(rng, np.repeat(p.x[None, :], probes, axis=0))
    target = sigma_inverse(p)
    ends, tends = null_geodesic_arrays(p.x, p.t, dirs, np.full(probes, -math.pi))
    err = max(float(np.max(sphere_distances(ends, target.x))), float(np.max(np.abs(tends - target.t))))
    # sample S in a frame adapted to p so the whole report is sigma-equivariant
    pts = np.vstack([p.x, -p.x, sphere_mesh(p.dim, mesh) @ _adapted_frame(p.x).T])
    past = _PastBoundary(p.x, p.t)
    g = AchronalGraph(pts, past(pts), True, mesh, func=past)
    achronal = is_achronal_graph(g, eps=ACHRONAL_EPS).achronal
    cauchy = is_cauchy_graph(g, probes=probes, seed=seed, eps=ACHRONAL_EPS).cauchy
    gen_dirs = _tangent_directions(p.x, mesh / 2.0)
    params = np.linspace(0.0, math.pi, int(math.ceil(2 * math.pi / mesh)) + 1)
    gx, gt = null_geodesic_arrays(p.x, p.t, gen_dirs[:, None, :], -params[None, :])
    gt = np.broadcast_to(gt, gx.shape[:-1])
    cloud = np.column_stack([gx.reshape(-1, gx.shape[-1]), gt.ravel()])
    dist, _ = cKDTree(cloud).query(np.column_stack([g.points, g.values]))
    return ConjugateReport(err, achronal, cauchy, float(dist.max()), float(mesh), int(probes))
