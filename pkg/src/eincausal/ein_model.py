"""Exact geometry of the Einstein universe Ein_{1,n} and its universal cover.

Ein_{1,n} is the space of null rays of R^{2,n+1}; slicing the null cone with
|u| = |w| = 1 identifies it with S^n x S^1. The universal cover is S^n x R with
the conformal class of dsigma^2 - dt^2, and its causal relations are closed
form in the round distance on S^n.

Points on S^n are plain unit numpy vectors of length n+1.
"""

import enum
import math

import numpy as np

from .errors import DegenerateRayError, ValidationError

TWO_PI = 2.0 * math.pi
UNIT_TOL = 1e-9
DEFAULT_EPS = 1e-9
ANTIPODAL_GUARD = 1e-9


def check_sphere_point(x, tol=UNIT_TOL):
    """Return ``x`` as a float array after checking it lies on S^n, n >= 2."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"sphere point must be a vector, got shape {x.shape}")
    if x.shape[0] < 3:
        raise ValidationError(f"need n >= 2, i.e. at least 3 coordinates; got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sphere point has non-finite coordinates")
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"sphere point is not unit: |x| = {norm!r}")
    return x


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


class _PointBase:
    __slots__ = ()

    @property
    def dim(self):
        """n, the dimension of the sphere factor."""
        return self.x.shape[0] - 1


class EinTildePoint(_PointBase):
    """Point (x, t) of the universal cover S^n x R."""

    __slots__ = ("x", "t")

    def __init__(self, x, t):
        t = float(t)
        if not math.isfinite(t):
            raise ValidationError(f"time coordinate must be finite, got {t}")
        object.__setattr__(self, "x", _frozen(check_sphere_point(x)))
        object.__setattr__(self, "t", t)

    def __setattr__(self, name, value):
        raise AttributeError("EinTildePoint is immutable")

    def __eq__(self, other):
        if not isinstance(other, EinTildePoint):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((self.x.tobytes(), self.t))

    def __repr__(self):
        return f"EinTildePoint(x={self.x.tolist()}, t={self.t!r})"


class EinPoint(_PointBase):
    """Point (x, theta) of Ein_{1,n} = S^n x S^1, theta in [0, 2pi)."""

    __slots__ = ("x", "theta")

    def __init__(self, x, theta):
        theta = float(theta)
        if not math.isfinite(theta):
            raise ValidationError(f"angle must be finite, got {theta}")
        object.__setattr__(self, "x", _frozen(check_sphere_point(x)))
        object.__setattr__(self, "theta", normalize_angle(theta))

    def __setattr__(self, name, value):
        raise AttributeError("EinPoint is immutable")

    def __eq__(self, other):
        if not isinstance(other, EinPoint):
            return NotImplemented
        return self.theta == other.theta and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((self.x.tobytes(), self.theta))

    def __repr__(self):
        return f"EinPoint(x={self.x.tolist()}, theta={self.theta!r})"


class CausalClass(enum.Enum):
    """Relation of the second point to the first."""

    ChronologicalFuture = "ChronologicalFuture"
    CausalNullFuture = "CausalNullFuture"
    ChronologicalPast = "ChronologicalPast"
    CausalNullPast = "CausalNullPast"
    Unrelated = "Unrelated"
    Coincident = "Coincident"

    @property
    def is_future(self):
        return self in (CausalClass.ChronologicalFuture, CausalClass.CausalNullFuture)

    @property
    def is_past(self):
        return self in (CausalClass.ChronologicalPast, CausalClass.CausalNullPast)


# integer codes used by the vectorised classifier
_CODES = (
    CausalClass.Unrelated,
    CausalClass.ChronologicalFuture,
    CausalClass.CausalNullFuture,
    CausalClass.ChronologicalPast,
    CausalClass.CausalNullPast,
    CausalClass.Coincident,
)
CODE_OF = {c: i for i, c in enumerate(_CODES)}


def normalize_angle(theta):
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta = 0.0
    return theta


def unit_basis(n, i):
    e = np.zeros(n + 1)
    e[i] = 1.0
    return e


# --------------------------------------------------------------------------
# distances


def sphere_distances(a, b):
    """Round distance between rows of ``a`` and ``b`` (broadcasting).

    Uses 2*atan2(|a-b|, |a+b|), accurate near 0 and near pi alike.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 2.0 * np.arctan2(
        np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1)
    )


def sphere_distance(a, b):
    """d0(a, b) in [0, pi]."""
    a = check_sphere_point(a)
    b = check_sphere_point(b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(sphere_distances(a, b))


def great_circle_point(a, b, frac):
    """Point at fraction ``frac`` along the minimizing arc from a to b.

    Refuses (near-)antipodal pairs: the minimizing arc is not unique there.
    """
    d = float(sphere_distances(a, b))
    if d >= math.pi - ANTIPODAL_GUARD:
        raise ValidationError(
            "great-circle interpolation between antipodal points is ambiguous; "
            "supply an explicit direction"
        )
    if d == 0.0:
        return np.array(a, dtype=float)
    frac = np.asarray(frac, dtype=float)
    sd = math.sin(d)
    out = (np.sin((1.0 - frac) * d)[..., None] * a + np.sin(frac * d)[..., None] * b) / sd
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def direction_towards(a, b):
    """Unit tangent at ``a`` pointing along the minimizing arc to ``b``."""
    w = b - (a @ b) * a
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        raise ValidationError("direction undefined for coincident or antipodal points")
    return w / nw


# --------------------------------------------------------------------------
# null-cone model


def quadratic_form(v):
    """Q(v) = u1^2 + u2^2 - |w|^2 on R^{2,n+1} (last axis)."""
    v = np.asarray(v, dtype=float)
    return v[..., 0] ** 2 + v[..., 1] ** 2 - np.sum(v[..., 2:] ** 2, axis=-1)


def null_cone_rep(e):
    """The representative (cos theta, sin theta | x) on the |u| = |w| = 1 slice."""
    return np.concatenate([[math.cos(e.theta), math.sin(e.theta)], e.x])


def normalize_null_arrays(vs, tol=1e-12):
    """Vectorised normalize_null: rows of ``vs`` -> (xs, thetas in [0, 2pi))."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    u = vs[:, :2]
    w = vs[:, 2:]
    nu = np.linalg.norm(u, axis=1)
    nw = np.linalg.norm(w, axis=1)
    scale = np.maximum(np.linalg.norm(vs, axis=1), 1e-300)
    if np.any(nu <= tol * scale) or np.any(nw <= tol * scale):
        raise DegenerateRayError(
            f"degenerate ray: |u| = {nu.min()!r}, |w| = {nw.min()!r}"
        )
    xs = w / nw[:, None]
    thetas = np.mod(np.arctan2(u[:, 1], u[:, 0]), TWO_PI)
    thetas = np.where(thetas >= TWO_PI, 0.0, thetas)
    return xs, thetas


def normalize_null(v, tol=1e-9):
    """Read (x, theta) off a null vector, invariant under positive rescaling."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 5:
        raise ValidationError(f"null vector must have length n+3 >= 5, got {v.shape}")
    q = float(quadratic_form(v))
    if abs(q) > tol * float(v @ v):
        raise ValidationError(f"vector is not null: Q(v) = {q!r}")
    xs, thetas = normalize_null_arrays(v[None, :])
    return EinPoint(xs[0], thetas[0])


# --------------------------------------------------------------------------
# covering structure


def project_to_cover_base(p):
    return EinPoint(p.x, normalize_angle(p.t))


def lift_from_base(e, k):
    return EinTildePoint(e.x, e.theta + TWO_PI * int(k))


def sigma(p):
    """Conjugate point (-x, t + pi)."""
    return EinTildePoint(-p.x, p.t + math.pi)


def sigma_inverse(p):
    return EinTildePoint(-p.x, p.t - math.pi)


def delta(p):
    """Deck transformation (x, t + 2pi)."""
    return EinTildePoint(p.x, p.t + TWO_PI)


def delta_inverse(p):
    return EinTildePoint(p.x, p.t - TWO_PI)


# --------------------------------------------------------------------------
# causal relations


def classify_codes(xp, tp, xq, tq, eps=DEFAULT_EPS):
    """Vectorised causal_classify returning integer codes (see ``CODE_OF``)."""
    d = sphere_distances(xp, xq)
    dt = np.asarray(tq, dtype=float) - np.asarray(tp, dtype=float)
    d, dt = np.broadcast_arrays(d, dt)
    codes = np.zeros(d.shape, dtype=np.int8)  # Unrelated
    codes[(d < dt - eps)] = 1
    codes[(np.abs(d - dt) <= eps) & (dt > eps)] = 2
    codes[(d < -dt - eps)] = 3
    codes[(np.abs(d + dt) <= eps) & (dt < -eps)] = 4
    codes[(d <= eps) & (np.abs(dt) <= eps)] = 5
    return codes


def causal_classify(p, q, eps=DEFAULT_EPS):
    """Relation of ``q`` to ``p`` on the universal cover."""
    if eps < 0:
        raise ValidationError(f"eps must be >= 0, got {eps}")
    if p.x.shape != q.x.shape:
        raise ValidationError("points live in different dimensions")
    code = classify_codes(p.x, p.t, q.x, q.t, eps)
    return _CODES[int(code)]


def decode(codes):
    return [_CODES[int(c)] for c in np.ravel(codes)]


# --------------------------------------------------------------------------
# null geodesics


def check_direction(x, direction, tol=UNIT_TOL):
    direction = np.asarray(direction, dtype=float)
    if direction.shape != x.shape:
        raise ValidationError(
            f"direction has shape {direction.shape}, expected {x.shape}"
        )
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"direction is not unit: |v| = {norm!r}")
    dot = float(direction @ x)
    if abs(dot) > tol:
        raise ValidationError(f"direction is not tangent: <v, x> = {dot!r}")
    return direction


def null_geodesic_arrays(x, t, direction, s):
    """Sphere positions and times of the null geodesic at parameters ``s``."""
    s = np.asarray(s, dtype=float)
    xs = np.cos(s)[..., None] * x + np.sin(s)[..., None] * direction
    xs = xs / np.linalg.norm(xs, axis=-1, keepdims=True)
    return xs, t + s


def null_geodesic(p, direction, s):
    """Point at parameter ``s`` on the future null geodesic from p along ``direction``."""
    direction = check_direction(p.x, direction)
    s = float(s)
    xs, ts = null_geodesic_arrays(p.x, p.t, direction, s)
    return EinTildePoint(xs, ts)


def boundary_of_past(p, mesh):
    """Graph t = t_p - d0(x_p, .) of the boundary of I^-(p), over all of S^n.

    The mesh always contains x_p and its antipode.
    """
    from .causal_analysis.graphs import AchronalGraph

    if mesh <= 0:
        raise ValidationError(f"mesh must be positive, got {mesh}")
    return AchronalGraph.from_function(
        _PastBoundary(p.x, p.t), p.dim, mesh, anchors=[p.x, -p.x]
    )


def boundary_of_future(p, mesh):
    """Graph t = t_p + d0(x_p, .) of the boundary of I^+(p)."""
    from .causal_analysis.graphs import AchronalGraph

    if mesh <= 0:
        raise ValidationError(f"mesh must be positive, got {mesh}")
    return AchronalGraph.from_function(
        _FutureBoundary(p.x, p.t), p.dim, mesh, anchors=[p.x, -p.x]
    )


class _PastBoundary:
    def __init__(self, apex_x, apex_t):
        self.apex_x = np.array(apex_x)
        self.apex_t = float(apex_t)

    def __call__(self, xs):
        return self.apex_t - sphere_distances(xs, self.apex_x)

    def describe(self):
        return {"kind": "past_boundary", "apex": {"x": self.apex_x.tolist(), "t": self.apex_t}}


class _FutureBoundary(_PastBoundary):
    def __call__(self, xs):
        return self.apex_t + sphere_distances(xs, self.apex_x)

    def describe(self):
        return {"kind": "future_boundary", "apex": {"x": self.apex_x.tolist(), "t": self.apex_t}}


def totally_vicious_witness(e1, e2, eps=DEFAULT_EPS):
    """Least k >= 0 with lift(e2, k) in the causal future of lift(e1, 0).

    On the compact quotient this exhibits e2 in the future of e1.
    """
    p = lift_from_base(e1, 0)
    d = float(sphere_distances(e1.x, e2.x))
    bound = 1 + int(math.ceil(d / TWO_PI)) + 1
    for k in range(0, bound + 1):
        if causal_classify(p, lift_from_base(e2, k), eps).is_future:
            return k
    raise AssertionError("no future lift found; Ein should be totally vicious")
