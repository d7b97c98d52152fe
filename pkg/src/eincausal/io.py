"""JSON (de)serialization for points, curves, graphs, transforms and domains.

Floats go through ``json`` which writes the shortest round-trip decimal
(``repr``), so every value survives a dump/load cycle bit for bit.
"""

import json

import numpy as np

from .causal_analysis.curves import CausalCurve
from .causal_analysis.graphs import AchronalGraph, BlendFunction, ConeFunction, ConstantFunction
from .causal_analysis.graphs import _Negated, _Rotated, _Shifted
from .conformal_group import LiftedConformalTransform, validate_orthogonal
from .ein_model import EinPoint, EinTildePoint, _FutureBoundary, _PastBoundary
from .embeddings import MinkowskiPoint
from .errors import ValidationError


def dumps(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def _require(data, *keys):
    if not isinstance(data, dict):
        raise ValidationError(f"expected a JSON object, got {type(data).__name__}")
    missing = [k for k in keys if k not in data]
    if missing:
        raise ValidationError(f"missing field(s): {', '.join(missing)}")


# --------------------------------------------------------------------------
# points


def point_to_dict(p):
    if isinstance(p, EinPoint):
        return {"x": p.x.tolist(), "theta": p.theta}
    return {"x": p.x.tolist(), "t": p.t}


def point_from_dict(data, dim=None):
    """EinTildePoint from {"x", "t"} or EinPoint from {"x", "theta"}."""
    _require(data, "x")
    if "t" in data:
        p = EinTildePoint(data["x"], data["t"])
    elif "theta" in data:
        p = EinPoint(data["x"], data["theta"])
    else:
        raise ValidationError('point needs "t" (universal cover) or "theta" (compact model)')
    if dim is not None and p.dim != dim:
        raise ValidationError(f"point has dimension {p.dim}, expected {dim}")
    return p


def minkowski_to_dict(m):
    return m.to_dict()


def minkowski_from_dict(data, dim=None):
    _require(data, "tm", "y")
    m = MinkowskiPoint(data["tm"], data["y"])
    if dim is not None and m.y.shape[0] != dim:
        raise ValidationError(f"Minkowski point has {m.y.shape[0]} spatial coordinates, expected {dim}")
    return m


# --------------------------------------------------------------------------
# curves


def curve_to_dict(c):
    return {"samples": [{"t": float(t), "x": x.tolist()} for t, x in zip(c.ts, c.xs)]}


def curve_from_dict(data):
    _require(data, "samples")
    samples = data["samples"]
    if not samples:
        raise ValidationError("curve has no samples")
    for s in samples:
        _require(s, "t", "x")
    return CausalCurve([s["t"] for s in samples], np.array([s["x"] for s in samples], dtype=float))


# --------------------------------------------------------------------------
# graphs


def function_from_dict(data):
    _require(data, "kind")
    kind = data["kind"]
    if kind == "constant":
        return ConstantFunction(data["value"])
    if kind == "cone":
        return ConeFunction(np.asarray(data["center"], dtype=float), data["slope"], data.get("offset", 0.0))
    if kind == "blend":
        return BlendFunction([function_from_dict(p) for p in data["parts"]], data["weights"])
    if kind == "past_boundary":
        return _PastBoundary(data["apex"]["x"], data["apex"]["t"])
    if kind == "future_boundary":
        return _FutureBoundary(data["apex"]["x"], data["apex"]["t"])
    if kind == "negated":
        return _Negated(function_from_dict(data["of"]))
    if kind == "shifted":
        return _Shifted(function_from_dict(data["of"]), data["dt"])
    if kind == "rotated":
        return _Rotated(function_from_dict(data["of"]), np.asarray(data["rotation"], dtype=float))
    raise ValidationError(f"unknown graph function kind {kind!r}")


def graph_to_dict(g, explicit=False):
    """Parametric form when the graph came from a describable function, else samples."""
    if not explicit and g.build is not None and hasattr(g.func, "describe"):
        anchors, cap = g.build
        params = {"spacing": g.mesh, "dim": g.dim, "function": g.func.describe()}
        if anchors is not None:
            params["anchors"] = anchors
        if cap is not None:
            params["cap"] = {"center": np.asarray(cap[0]).tolist(), "radius": float(cap[1])}
        return {"mesh": params}
    return {
        "mesh": [{"x": x.tolist(), "f": float(f)} for x, f in zip(g.points, g.values)],
        "spacing": g.mesh,
        "full_sphere": g.full_sphere,
    }


def graph_from_dict(data):
    _require(data, "mesh")
    mesh = data["mesh"]
    if isinstance(mesh, dict):
        _require(mesh, "spacing", "dim", "function")
        cap = None
        if "cap" in mesh:
            cap = (np.asarray(mesh["cap"]["center"], dtype=float), float(mesh["cap"]["radius"]))
        dim = int(mesh["dim"])
        if dim < 2:
            raise ValidationError("graph dimension must be >= 2")
        return AchronalGraph.from_function(
            function_from_dict(mesh["function"]), dim, float(mesh["spacing"]),
            anchors=mesh.get("anchors"), cap=cap,
        )
    if not isinstance(mesh, list) or not mesh:
        raise ValidationError("graph mesh must be a parameter object or a non-empty sample list")
    for s in mesh:
        _require(s, "x", "f")
    return AchronalGraph(
        np.array([s["x"] for s in mesh], dtype=float),
        np.array([s["f"] for s in mesh], dtype=float),
        bool(data.get("full_sphere", False)),
        float(data.get("spacing", 0.0)),
    )


# --------------------------------------------------------------------------
# transforms


def transform_to_dict(lift):
    return lift.to_dict()


def transform_from_dict(data, dim=None):
    """LiftedConformalTransform from {"matrix": row-major reals, "winding": int}."""
    _require(data, "matrix")
    flat = np.asarray(data["matrix"], dtype=float).ravel()
    size = int(round(np.sqrt(flat.shape[0])))
    if size * size != flat.shape[0]:
        raise ValidationError(f"matrix has {flat.shape[0]} entries, not a square count")
    base = validate_orthogonal(flat.reshape(size, size))
    if dim is not None and base.n != dim:
        raise ValidationError(f"transform acts in dimension {base.n}, expected {dim}")
    winding = data.get("winding", 0)
    if int(winding) != winding:
        raise ValidationError("winding must be an integer")
    return LiftedConformalTransform(base, int(winding))


def correspondences_to_dict(pairs):
    return {"pairs": [{"source": point_to_dict(a), "target": point_to_dict(b)} for a, b in pairs]}


def correspondences_from_dict(data):
    _require(data, "pairs")
    out = []
    for pair in data["pairs"]:
        _require(pair, "source", "target")
        a, b = point_from_dict(pair["source"]), point_from_dict(pair["target"])
        if not (isinstance(a, EinPoint) and isinstance(b, EinPoint)):
            raise ValidationError('correspondences are points of the compact model ({"x", "theta"})')
        out.append((a, b))
    return out


# --------------------------------------------------------------------------
# domains


def domain_to_dict(d):
    return d.to_dict()


def domain_from_dict(data):
    from .domains import AllDomain, Diamond, FutureCone, Lens, PastCone, Union

    _require(data, "kind")
    kind = data["kind"]
    if kind == "all":
        return AllDomain()
    if kind == "future_cone":
        return FutureCone(point_from_dict(data["apex"]))
    if kind == "past_cone":
        return PastCone(point_from_dict(data["apex"]))
    if kind == "diamond":
        _require(data, "a", "b")
        return Diamond(point_from_dict(data["a"]), point_from_dict(data["b"]))
    if kind == "lens":
        _require(data, "lower", "upper")
        return Lens(graph_from_dict(data["lower"]), graph_from_dict(data["upper"]))
    if kind == "union":
        _require(data, "parts")
        return Union(tuple(domain_from_dict(p) for p in data["parts"]))
    raise ValidationError(f"unknown domain kind {kind!r}")
