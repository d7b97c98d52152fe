"""One-sided probe of Cauchy-development membership.

An adversary searches past-directed piecewise-null curves from q (at most
three segments, the last one extended far enough to be inextensible for the
graph's time range) for one that avoids the graph over its domain. A found
curve is a certified refutation; failing to find one proves nothing.
"""

import enum
from dataclasses import dataclass

import numpy as np

from ..ein_model import DEFAULT_EPS, sphere_distances
from ..errors import PreconditionError
from ..sampling import make_rng, random_sphere_points, random_tangents
from .curves import CausalCurve, classify_curve


class DevelopmentKind(enum.Enum):
    InsideUpToSampling = "InsideUpToSampling"
    EscapeWitness = "EscapeWitness"


@dataclass
class DevelopmentVerdict:
    kind: DevelopmentKind
    curve: CausalCurve = None
    candidates: int = 0
    miss_distance: float = None

    def to_dict(self):
        out = {
            "verdict": self.kind.value,
            "candidates": self.candidates,
            "certificate": (
                "escape curve re-verified" if self.curve is not None
                else "no escape found (sampling-limited, not a proof)"
            ),
        }
        if self.miss_distance is not None:
            out["miss_distance"] = self.miss_distance
        return out


def _past_null_path(x0, t0, directions, lengths, t_end, step):
    """Samples of a past-directed piecewise-null curve; last segment runs to t_end."""
    xs_all, ts_all = [x0[None, :]], [np.array([t0])]
    x, t = x0, t0
    for k, v in enumerate(directions):
        # transport the requested direction into the tangent space at x
        v = v - (v @ x) * x
        nv = np.linalg.norm(v)
        if nv < 1e-9:
            continue
        v = v / nv
        length = lengths[k] if k < len(lengths) else t - t_end
        length = min(length, t - t_end)
        if length <= 0:
            break
        s = np.linspace(0.0, length, max(2, int(np.ceil(length / step)) + 1))[1:]
        seg = np.cos(s)[:, None] * x + np.sin(s)[:, None] * v
        seg /= np.linalg.norm(seg, axis=1, keepdims=True)
        xs_all.append(seg)
        ts_all.append(t - s)
        x, t = seg[-1], t - length
    if t > t_end:
        # stay put on the time line for the remainder
        s = np.linspace(0.0, t - t_end, max(2, int(np.ceil((t - t_end) / step)) + 1))[1:]
        xs_all.append(np.repeat(x[None, :], s.size, axis=0))
        ts_all.append(t - s)
    return np.vstack(xs_all), np.concatenate(ts_all)


def _assess(g, xs, ts, reach):
    """Score a sampled curve: (violations, miss distance).

    Near the graph's domain the curve must stay at least ``reach`` away from
    the graph in time, with no sign change inside any contiguous near-run.
    """
    near = g.nearest_distance(xs) <= reach
    if not np.any(near):
        return 0, np.inf
    gap = ts[near] - g.evaluate(xs[near])
    violations = int(np.count_nonzero(np.abs(gap) <= reach))
    # sign changes inside a run of consecutive near samples
    idx = np.flatnonzero(near)
    sign = np.sign(gap)
    same_run = np.diff(idx) == 1
    violations += int(np.count_nonzero(same_run & (sign[1:] != sign[:-1])))
    return violations, float(np.min(np.abs(gap)))


def development_membership(q, g, budget=200, seed=0, eps=DEFAULT_EPS):
    """InsideUpToSampling, or EscapeWitness with a past causal curve missing the graph."""
    reach = g.mesh
    xq = np.asarray(q.x)
    near_q = g.nearest_distance(xq)[0] <= reach
    fq = float(g.evaluate(xq)[0])
    if near_q and abs(q.t - fq) <= max(eps, 1e-12):
        return DevelopmentVerdict(DevelopmentKind.InsideUpToSampling)
    below = sphere_distances(g.points, xq) < q.t - g.values - eps
    if not np.any(below):
        raise PreconditionError("q must lie in the chronological future of the graph")

    rng = make_rng(seed)
    n = g.dim
    t_end = float(np.min(g.values)) - np.pi - 0.1
    step = reach / 4.0

    def build(params):
        dirs, lengths = params
        return _past_null_path(xq, q.t, dirs, lengths, t_end, step)

    def random_params():
        dirs = [random_tangents(rng, xq[None, :])[0]]
        dirs += [rng.standard_normal(n + 1) for _ in range(2)]
        lengths = list(rng.uniform(0.0, np.pi, 2))
        return dirs, lengths

    # aim the first candidates at the sample point farthest from the domain
    probe = random_sphere_points(rng, n, 512)
    hole = probe[int(np.argmax(g.nearest_distance(probe)))]
    seeds = []
    if sphere_distances(hole, xq) > 1e-6 and sphere_distances(hole, -xq) > 1e-6:
        toward = hole - (hole @ xq) * xq
        toward /= np.linalg.norm(toward)
        dist_h = float(sphere_distances(hole, xq))
        seeds.append(([toward], []))
        for _ in range(3):
            seeds.append(([toward, rng.standard_normal(n + 1)], [dist_h]))

    best = None
    tried = 0
    candidates = seeds + [random_params() for _ in range(max(0, budget - len(seeds)))]
    for params in candidates:
        tried += 1
        xs, ts = build(params)
        score = _assess(g, xs, ts, reach)
        if best is None or score[0] < best[0][0] or (score[0] == best[0][0] and score[1] > best[0][1]):
            best = (score, params)
        if score[0] == 0:
            break

    # local refinement around the best candidate
    scale = 0.3
    while best[0][0] > 0 and scale > 0.02:
        for _ in range(10):
            dirs, lengths = best[1]
            dirs = [v + scale * rng.standard_normal(n + 1) for v in dirs]
            lengths = [float(np.clip(l + scale * rng.standard_normal(), 0.0, np.pi)) for l in lengths]
            tried += 1
            xs, ts = build((dirs, lengths))
            score = _assess(g, xs, ts, reach)
            if score[0] < best[0][0]:
                best = (score, (dirs, lengths))
        scale /= 2.0

    if best[0][0] > 0:
        return DevelopmentVerdict(DevelopmentKind.InsideUpToSampling, candidates=tried)

    xs, ts = build(best[1])
    # future-directed copy for verification
    curve = CausalCurve(ts[::-1], xs[::-1])
    check = classify_curve(curve, 1e-9)
    violations, miss = _assess(g, xs, ts, reach)
    if not check.is_causal or violations or miss <= reach or ts.min() > t_end + 1e-12:
        return DevelopmentVerdict(DevelopmentKind.InsideUpToSampling, candidates=tried)
    return DevelopmentVerdict(DevelopmentKind.EscapeWitness, curve, tried, miss)
