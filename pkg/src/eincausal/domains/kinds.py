"""Causally convex regions of the universal cover with exact membership."""

import math
from dataclasses import dataclass

import numpy as np

from ..ein_model import EinTildePoint, _FutureBoundary, _PastBoundary, causal_classify, classify_codes
from ..causal_analysis.graphs import AchronalGraph, BlendFunction
from ..errors import ValidationError

# windows used to sample unbounded kinds
UNBOUNDED_SPAN = 2.0 * math.pi


class Domain:
    """Base class; subclasses implement ``contains_arrays`` and ``time_bounds``."""

    kind = "abstract"

    def contains(self, p):
        return bool(self.contains_arrays(p.x[None, :], np.array([p.t]))[0])

    def contains_arrays(self, xs, ts):
        raise NotImplementedError

    def time_bounds(self):
        """(lo, hi); infinite where the region is unbounded in time."""
        raise NotImplementedError

    def sampling_window(self):
        lo, hi = self.time_bounds()
        if math.isinf(lo) and math.isinf(hi):
            return -UNBOUNDED_SPAN / 2, UNBOUNDED_SPAN / 2
        if math.isinf(lo):
            return hi - UNBOUNDED_SPAN, hi
        if math.isinf(hi):
            return lo, lo + UNBOUNDED_SPAN
        return lo, hi


@dataclass(frozen=True)
class AllDomain(Domain):
    kind = "all"

    def contains_arrays(self, xs, ts):
        return np.ones(np.shape(ts), dtype=bool)

    def time_bounds(self):
        return -math.inf, math.inf

    def to_dict(self):
        return {"kind": "all"}


@dataclass(frozen=True)
class FutureCone(Domain):
    """Chronological future I^+(apex)."""

    apex: EinTildePoint
    kind = "future_cone"

    def contains_arrays(self, xs, ts):
        return classify_codes(self.apex.x, self.apex.t, xs, ts, 0.0) == 1

    def time_bounds(self):
        return self.apex.t, math.inf

    def to_dict(self):
        return {"kind": "future_cone", "apex": _pt(self.apex)}


@dataclass(frozen=True)
class PastCone(Domain):
    """Chronological past I^-(apex)."""

    apex: EinTildePoint
    kind = "past_cone"

    def contains_arrays(self, xs, ts):
        return classify_codes(self.apex.x, self.apex.t, xs, ts, 0.0) == 3

    def time_bounds(self):
        return -math.inf, self.apex.t

    def to_dict(self):
        return {"kind": "past_cone", "apex": _pt(self.apex)}


@dataclass(frozen=True)
class Diamond(Domain):
    """I^+(a) intersected with I^-(b), for b in the chronological future of a."""

    a: EinTildePoint
    b: EinTildePoint
    kind = "diamond"

    def __post_init__(self):
        if causal_classify(self.a, self.b).value != "ChronologicalFuture":
            raise ValidationError("diamond tip b must be in the chronological future of a")

    def contains_arrays(self, xs, ts):
        above = classify_codes(self.a.x, self.a.t, xs, ts, 0.0) == 1
        below = classify_codes(self.b.x, self.b.t, xs, ts, 0.0) == 3
        return above & below

    def time_bounds(self):
        return self.a.t, self.b.t

    def to_dict(self):
        return {"kind": "diamond", "a": _pt(self.a), "b": _pt(self.b)}

    def cauchy_graph(self, mesh):
        """Graph halfway between the two cones; Cauchy for the diamond even when tilted."""
        func = BlendFunction(
            [_FutureBoundary(self.a.x, self.a.t), _PastBoundary(self.b.x, self.b.t)], [0.5, 0.5]
        )
        return AchronalGraph.from_function(func, self.a.dim, mesh)


def minkowski_diamond(base):
    """Image of the Penrose embedding: Diamond((x0, -pi), (x0, pi))."""
    return Diamond(EinTildePoint(base, -math.pi), EinTildePoint(base, math.pi))


@dataclass(frozen=True, eq=False)
class Lens(Domain):
    """Region strictly between two full-sphere graphs."""

    lower: AchronalGraph
    upper: AchronalGraph
    kind = "lens"

    def __post_init__(self):
        if not (self.lower.full_sphere and self.upper.full_sphere):
            raise ValidationError("lens boundaries must be full-sphere graphs")
        gap_u = self.upper.evaluate(self.lower.points) - self.lower.values
        gap_l = self.upper.values - self.lower.evaluate(self.upper.points)
        if min(gap_u.min(), gap_l.min()) <= 0:
            raise ValidationError("lens upper graph must lie strictly above the lower graph")

    def contains_arrays(self, xs, ts):
        xs = np.atleast_2d(xs)
        ts = np.atleast_1d(ts)
        return (self.lower.evaluate(xs) < ts) & (ts < self.upper.evaluate(xs))

    def time_bounds(self):
        return float(np.min(self.lower.values)) - 1e-9, float(np.max(self.upper.values)) + 1e-9

    def to_dict(self):
        from ..io import graph_to_dict

        return {"kind": "lens", "lower": graph_to_dict(self.lower), "upper": graph_to_dict(self.upper)}


@dataclass(frozen=True)
class Union(Domain):
    parts: tuple
    kind = "union"

    def __post_init__(self):
        if not self.parts:
            raise ValidationError("union needs at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))

    def contains_arrays(self, xs, ts):
        out = np.zeros(np.shape(np.atleast_1d(ts)), dtype=bool)
        for part in self.parts:
            out |= part.contains_arrays(xs, ts)
        return out

    def time_bounds(self):
        bounds = [p.time_bounds() for p in self.parts]
        return min(b[0] for b in bounds), max(b[1] for b in bounds)

    def to_dict(self):
        return {"kind": "union", "parts": [p.to_dict() for p in self.parts]}


def _pt(p):
    return {"x": p.x.tolist(), "t": p.t}
