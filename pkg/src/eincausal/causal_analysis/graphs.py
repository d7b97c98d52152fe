"""Achronal graphs t = f(x) over sampled subsets of S^n.

A graph is achronal exactly when f is 1-Lipschitz for the round metric; over
the whole sphere such a graph is a compact achronal edgeless set, hence a
Cauchy hypersurface of the universal cover.
"""

from dataclasses import dataclass, field

import numpy as np

from ..ein_model import (
    DEFAULT_EPS,
    EinTildePoint,
    causal_classify,
    null_geodesic_arrays,
    sphere_distances,
)
from ..errors import PreconditionError, ValidationError
from ..sampling import make_rng, random_sphere_points, random_tangents, sphere_mesh

_CHUNK = 96


class AchronalGraph:
    """Values of f on a finite set of sphere points.

    ``func``, when present, is the exact function the samples came from and is
    used for off-sample evaluation; otherwise the midpoint of the upper and
    lower McShane extensions is used, which stays 1-Lipschitz and interpolates
    1-Lipschitz data exactly.
    """

    def __init__(self, points, values, full_sphere, mesh, func=None):
        points = np.array(points, dtype=float)
        values = np.array(values, dtype=float)
        if points.ndim != 2 or points.shape[1] < 3:
            raise ValidationError(f"graph points must be (N, n+1) with n >= 2, got {points.shape}")
        if values.shape != (points.shape[0],):
            raise ValidationError("one value per graph point required")
        if points.shape[0] < 1:
            raise ValidationError("graph needs at least one sample")
        norms = np.linalg.norm(points, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValidationError(f"graph point off the sphere: |x| = {norms[np.argmax(np.abs(norms - 1))]!r}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("graph values must be finite")
        points.setflags(write=False)
        values.setflags(write=False)
        self.points = points
        self.values = values
        self.full_sphere = bool(full_sphere)
        self.mesh = float(mesh)
        self.func = func
        # (anchors, cap) when built from a describable function on the standard mesh
        self.build = None

    @property
    def dim(self):
        return self.points.shape[1] - 1

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_function(cls, func, n, mesh, anchors=None, cap=None):
        """Sample ``func`` on the standard mesh, optionally on a closed cap only.

        ``cap`` is ``(center, radius)``; the result is then not full-sphere.
        """
        pts = sphere_mesh(n, mesh)
        if anchors is not None:
            pts = np.vstack([np.atleast_2d(anchors), pts])
        full = True
        if cap is not None:
            center, radius = cap
            keep = sphere_distances(pts, np.asarray(center, dtype=float)) <= radius
            pts = pts[keep]
            full = False
        g = cls(pts, func(pts), full, mesh, func=func)
        g.build = (None if anchors is None else np.atleast_2d(anchors).tolist(), cap)
        return g

    def evaluate(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.func is not None:
            return np.asarray(self.func(xs), dtype=float)
        out = np.empty(xs.shape[0])
        for s in range(0, xs.shape[0], _CHUNK):
            d = sphere_distances(xs[s:s + _CHUNK, None, :], self.points[None, :, :])
            upper = np.min(self.values[None, :] + d, axis=1)
            lower = np.max(self.values[None, :] - d, axis=1)
            out[s:s + _CHUNK] = 0.5 * (upper + lower)
        return out

    def nearest_distance(self, xs):
        """Round distance from each row of ``xs`` to the closest sample."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        out = np.empty(xs.shape[0])
        for s in range(0, xs.shape[0], _CHUNK):
            d = sphere_distances(xs[s:s + _CHUNK, None, :], self.points[None, :, :])
            out[s:s + _CHUNK] = d.min(axis=1)
        return out

    def point(self, i):
        return EinTildePoint(self.points[i], self.values[i])

    def time_reflected(self):
        func = None if self.func is None else _Negated(self.func)
        g = AchronalGraph(self.points, -self.values, self.full_sphere, self.mesh, func)
        g.build = self.build
        return g

    def shifted(self, dt):
        func = None if self.func is None else _Shifted(self.func, dt)
        g = AchronalGraph(self.points, self.values + dt, self.full_sphere, self.mesh, func)
        g.build = self.build
        return g

    def restricted(self, mask):
        """Sub-graph on the selected samples; never full-sphere."""
        mask = np.asarray(mask, dtype=bool)
        return AchronalGraph(self.points[mask], self.values[mask], False, self.mesh, self.func)

    def transformed(self, rotation):
        """Graph of f o R^{-1}: samples moved by the orthogonal matrix ``rotation``."""
        rotation = np.asarray(rotation, dtype=float)
        func = None if self.func is None else _Rotated(self.func, rotation)
        return AchronalGraph(self.points @ rotation.T, self.values, self.full_sphere, self.mesh, func)


class _Negated:
    def __init__(self, func):
        self.func = func

    def __call__(self, xs):
        return -self.func(xs)

    def describe(self):
        return {"kind": "negated", "of": self.func.describe()}


class _Shifted:
    def __init__(self, func, dt):
        self.func, self.dt = func, float(dt)

    def __call__(self, xs):
        return self.func(xs) + self.dt

    def describe(self):
        return {"kind": "shifted", "of": self.func.describe(), "dt": self.dt}


class _Rotated:
    def __init__(self, func, rotation):
        self.func, self.rotation = func, rotation

    def __call__(self, xs):
        # rows x -> R^{-1} x = R^T x
        return self.func(np.atleast_2d(xs) @ self.rotation)

    def describe(self):
        return {"kind": "rotated", "of": self.func.describe(), "rotation": self.rotation.tolist()}


class ConstantFunction:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, xs):
        return np.full(np.atleast_2d(xs).shape[0], self.value)

    def describe(self):
        return {"kind": "constant", "value": self.value}


class ConeFunction:
    """f(x) = offset + slope * d0(center, x); Lipschitz constant |slope|."""

    def __init__(self, center, slope, offset=0.0):
        self.center = np.asarray(center, dtype=float)
        self.slope = float(slope)
        self.offset = float(offset)

    def __call__(self, xs):
        return self.offset + self.slope * sphere_distances(np.atleast_2d(xs), self.center)

    def describe(self):
        return {"kind": "cone", "center": self.center.tolist(), "slope": self.slope, "offset": self.offset}


class BlendFunction:
    """Convex combination of cone functions; Lipschitz constant <= max |slope|."""

    def __init__(self, parts, weights):
        self.parts = list(parts)
        self.weights = np.asarray(weights, dtype=float) / np.sum(weights)

    def __call__(self, xs):
        return sum(w * f(xs) for w, f in zip(self.weights, self.parts))

    def describe(self):
        return {"kind": "blend", "parts": [p.describe() for p in self.parts], "weights": self.weights.tolist()}


# --------------------------------------------------------------------------


@dataclass
class AchronalVerdict:
    achronal: bool
    lipschitz: float
    strict: bool
    pairs_checked: int
    witness: tuple = None
    witness_points: tuple = None
    witness_relation: object = None
    null_pairs: int = 0

    @property
    def margin(self):
        return 1.0 - self.lipschitz

    def to_dict(self):
        out = {
            "achronal": self.achronal,
            "strict": self.strict,
            "lipschitz": self.lipschitz,
            "pairs_checked": self.pairs_checked,
            "null_pairs": self.null_pairs,
            "certificate": "all sampled pairs checked" if self.achronal else "refuted by witness pair",
        }
        if self.witness is not None:
            out["witness"] = [
                {"x": p.x.tolist(), "t": p.t} for p in self.witness_points
            ]
            out["witness_relation"] = self.witness_relation.value
        return out


def pairwise_lipschitz_scan(points, values, eps=DEFAULT_EPS):
    """Scan every unordered sample pair of a point set {(x_i, f_i)}.

    Returns (max violation of |df| <= d0, its pair, Lipschitz estimate,
    count of pairs null within eps, number of pairs).
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    n_pts = pts.shape[0]
    worst = -np.inf
    worst_pair = None
    lip = 0.0
    null_pairs = 0
    for s in range(0, n_pts, _CHUNK):
        e = min(n_pts, s + _CHUNK)
        d = sphere_distances(pts[s:e, None, :], pts[None, :, :])
        df = np.abs(vals[s:e, None] - vals[None, :])
        # count each unordered pair once
        upper = np.arange(s, e)[:, None] < np.arange(n_pts)[None, :]
        viol = np.where(upper, df - d, -np.inf)
        k = int(np.argmax(viol))
        if viol.flat[k] > worst:
            worst = float(viol.flat[k])
            worst_pair = (s + k // n_pts, k % n_pts)
        sep = upper & (d > eps)
        if np.any(sep):
            lip = max(lip, float(np.max(df[sep] / d[sep])))
        null_pairs += int(np.count_nonzero(sep & (df >= d - eps)))
    return worst, worst_pair, lip, null_pairs, n_pts * (n_pts - 1) // 2


def is_achronal_graph(g, eps=DEFAULT_EPS):
    """Pair scan of |f(a) - f(b)| <= d0(a, b) + eps."""
    if len(g) == 1:
        return AchronalVerdict(True, 0.0, True, 0)
    worst, pair, lip, null_pairs, count = pairwise_lipschitz_scan(g.points, g.values, eps)
    achronal = worst <= eps
    verdict = AchronalVerdict(
        achronal=achronal,
        lipschitz=lip,
        strict=achronal and null_pairs == 0,
        pairs_checked=count,
        null_pairs=null_pairs,
    )
    if not achronal:
        a, b = g.point(pair[0]), g.point(pair[1])
        rel = causal_classify(a, b, eps)
        verdict.witness = pair
        verdict.witness_points = (a, b)
        verdict.witness_relation = rel
    return verdict


@dataclass
class CauchyVerdict:
    cauchy: bool
    probes: int
    crossings: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def to_dict(self):
        c = np.asarray(self.crossings) if self.crossings else np.zeros(0)
        return {
            "cauchy": self.cauchy,
            "probes": self.probes,
            "failed_probes": len(self.failures),
            "crossing_min": float(c.min()) if c.size else None,
            "crossing_max": float(c.max()) if c.size else None,
            "crossing_mean": float(c.mean()) if c.size else None,
            "certificate": "no failing probe (sampling-limited)" if self.cauchy else "refuted by probe",
        }


def _crossing(c, eps):
    """Analyse a sampled crossing function; return (ok, index) of the sign change."""
    if np.any(np.diff(c) < -eps):
        return False, None
    signs = np.where(c > eps, 1, np.where(c < -eps, -1, 0))
    nz = signs[signs != 0]
    if nz.size == 0 or nz[0] != -1 or nz[-1] != 1:
        return False, None
    if np.count_nonzero(np.diff(nz) != 0) != 1:
        return False, None
    return True, int(np.argmax(c >= 0.0))


def probe_geodesic_crossing(g, x0, t0, direction, eps, step=None):
    """Crossing function s -> t(s) - f(x(s)) along one inextensible null geodesic.

    Returns (ok, s_cross, slope).
    """
    fmin, fmax = float(np.min(g.values)), float(np.max(g.values))
    lo, hi = fmin - t0 - 1.0, fmax - t0 + 1.0
    step = step or max(g.mesh / 2.0, 1e-3)
    count = int(np.ceil((hi - lo) / step)) + 1
    s = np.linspace(lo, hi, count)
    xs, ts = null_geodesic_arrays(x0, t0, direction, s)
    c = ts - g.evaluate(xs)
    ok, i = _crossing(c, eps)
    if not ok:
        return False, None, None
    if i == 0:
        return True, float(s[0]), None
    c0, c1 = c[i - 1], c[i]
    frac = 0.0 if c1 == c0 else -c0 / (c1 - c0)
    s_cross = float(s[i - 1] + frac * (s[i] - s[i - 1]))
    slope = float((c1 - c0) / (s[i] - s[i - 1]))
    return True, s_cross, slope


def is_cauchy_graph(g, probes=100, seed=0, eps=DEFAULT_EPS):
    """Probe a full-sphere graph with random inextensible null geodesics.

    Each probe must cross the graph exactly once with a nondecreasing crossing
    function. Acceptance is sampling-limited.
    """
    if not g.full_sphere:
        raise PreconditionError(
            "Cauchy check needs a graph over the whole sphere (compact, edgeless)"
        )
    rng = make_rng(seed)
    n = g.dim
    xs = random_sphere_points(rng, n, probes)
    dirs = random_tangents(rng, xs)
    fmin, fmax = float(np.min(g.values)), float(np.max(g.values))
    t0s = rng.uniform(fmin - 1.0, fmax + 1.0, probes)
    verdict = CauchyVerdict(cauchy=True, probes=probes)
    for k in range(probes):
        ok, s_cross, slope = probe_geodesic_crossing(g, xs[k], t0s[k], dirs[k], eps)
        if ok:
            verdict.crossings.append(s_cross)
            verdict.slopes.append(slope)
        else:
            verdict.cauchy = False
            verdict.failures.append(
                {"x": xs[k].tolist(), "t": float(t0s[k]), "direction": dirs[k].tolist()}
            )
    return verdict
