"""The conformal group O(2, n+1) acting on Ein_{1,n}, and its lift to the cover.

A lifted transform is an identity-component matrix together with a winding
number k: it acts on S^n x R as the continuous lift of the matrix action,
normalized so the basepoint (e_1, 0) moves by a time displacement in
(-pi, pi], followed by delta^k.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .ein_model import (
    TWO_PI,
    EinPoint,
    EinTildePoint,
    normalize_null_arrays,
    null_cone_rep,
)
from .errors import (
    NonUniquenessError,
    OrientationError,
    PrecisionError,
    PreconditionError,
    ValidationError,
)
from .sampling import make_rng

ORTHO_TOL = 1e-8
TRACK_STEP = math.pi / 4
COCYCLE_GUARD = 1e-3
GAP_THRESHOLD = 1e-6


def signature_form(n):
    """J = diag(+1, +1, -1, ..., -1) of size n+3."""
    return np.diag([1.0, 1.0] + [-1.0] * (n + 1))


def j_inverse(m):
    """Inverse of a J-orthogonal matrix, J M^T J."""
    j = signature_form(m.shape[0] - 3)
    return j @ m.T @ j


@dataclass(frozen=True, eq=False)
class OrthogonalTransform:
    """An element of O(2, n+1) with its component flags."""

    matrix: np.ndarray
    orientation: int
    time_orientation: int
    defect: float

    @property
    def n(self):
        return self.matrix.shape[0] - 3

    @property
    def identity_component(self):
        # both diagonal blocks orientation preserving
        return self.orientation == 1 and self.time_orientation == 1

    def to_dict(self):
        return {"matrix": self.matrix.ravel().tolist(), "winding": 0}


def validate_orthogonal(m, tol=ORTHO_TOL):
    """Membership test M^T J M = J, with component flags.

    ``time_orientation`` is the sign of det of the 2x2 time block, which decides
    whether the S^1 direction is preserved; ``orientation`` is sign det M.
    """
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"transform must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 5:
        raise ValidationError(f"matrix size must be n+3 >= 5, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    j = signature_form(m.shape[0] - 3)
    defect = float(np.linalg.norm(m.T @ j @ m - j))
    if defect > tol:
        raise ValidationError(f"matrix is not in O(2,n+1): Frobenius defect {defect:.3e} > {tol:g}")
    time_or = 1 if np.linalg.det(m[:2, :2]) > 0 else -1
    space_or = 1 if np.linalg.det(m[2:, 2:]) > 0 else -1
    orientation = 1 if time_or * space_or > 0 else -1
    m.setflags(write=False)
    return OrthogonalTransform(m, orientation, time_or, defect)


def identity_transform(n):
    return validate_orthogonal(np.eye(n + 3))


def time_rotation(n, phi):
    """Rotation by phi in the (u1, u2) plane: theta -> theta + phi."""
    m = np.eye(n + 3)
    c, s = math.cos(phi), math.sin(phi)
    m[:2, :2] = [[c, -s], [s, c]]
    return validate_orthogonal(m)


def spatial_rotation(rot):
    """Embed an orthogonal (n+1)x(n+1) matrix acting on the S^n factor."""
    rot = np.asarray(rot, dtype=float)
    k = rot.shape[0]
    m = np.eye(k + 2)
    m[2:, 2:] = rot
    return validate_orthogonal(m)


def random_orthogonal(seed, magnitude, n=2):
    """exp of a random generator of o(2, n+1) with Frobenius norm ``magnitude``."""
    if magnitude < 0:
        raise ValidationError("magnitude must be non-negative")
    rng = make_rng(seed)
    size = n + 3
    a = rng.standard_normal((size, size))
    a = a - a.T
    x = signature_form(n) @ a
    norm = np.linalg.norm(x)
    x = x * (magnitude / norm) if norm > 0 else x
    return validate_orthogonal(expm(x), tol=max(ORTHO_TOL, 1e-12 * math.exp(4 * magnitude)))


# --------------------------------------------------------------------------
# action on Ein


def _image_arrays(m, xs, thetas):
    vs = np.column_stack([np.cos(thetas), np.sin(thetas), xs])
    return normalize_null_arrays(vs @ m.T)


def apply_ein(transform, e):
    """Projective action on Ein: normalize_null(M . (cos theta, sin theta | x))."""
    m = transform.matrix
    if m.shape[0] != e.x.shape[0] + 2:
        raise ValidationError("transform and point dimensions differ")
    xs, thetas = normalize_null_arrays((m @ null_cone_rep(e))[None, :])
    return EinPoint(xs[0], thetas[0])


# --------------------------------------------------------------------------
# lifts to the universal cover


@dataclass(frozen=True, eq=False)
class LiftedConformalTransform:
    """Element of Conf(universal cover) = O(2, n+1) x| Z."""

    base: OrthogonalTransform
    winding: int

    @property
    def n(self):
        return self.base.n

    def to_dict(self):
        return {"matrix": self.base.matrix.ravel().tolist(), "winding": int(self.winding)}


def canonical_lift(transform, winding=0):
    if not transform.identity_component:
        raise OrientationError(
            "only identity-component transforms have a canonical lift "
            f"(orientation {transform.orientation}, time orientation {transform.time_orientation})"
        )
    return LiftedConformalTransform(transform, int(winding))


def deck_lift(n, k=1):
    """delta^k as a lifted transform."""
    return LiftedConformalTransform(identity_transform(n), int(k))


def _base_displacement(m):
    """Time image of the basepoint (e_1, 0) under the canonical section, in (-pi, pi]."""
    n = m.shape[0] - 3
    x0 = np.zeros((1, n + 1))
    x0[0, 0] = 1.0
    _, th = _image_arrays(m, x0, np.zeros(1))
    t = float(th[0])
    return t - TWO_PI if t > math.pi else t


def _track_paths(m, xs, t0s, steps):
    """Unwrapped image times along paths from the basepoint; None if undersampled."""
    n = m.shape[0] - 3
    count = xs.shape[0]
    e1 = np.zeros(n + 1)
    e1[0] = 1.0
    # spatial leg: great circle e1 -> x at t = 0
    cosd = np.clip(xs @ e1, -1.0, 1.0)
    w = xs - cosd[:, None] * e1
    nw = np.linalg.norm(w, axis=1)
    dist = 2.0 * np.arctan2(np.linalg.norm(xs - e1, axis=1), np.linalg.norm(xs + e1, axis=1))
    fallback = np.zeros(n + 1)
    fallback[1] = 1.0
    w = np.where(nw[:, None] > 1e-12, w / np.where(nw > 1e-12, nw, 1.0)[:, None], fallback)
    u = np.linspace(0.0, 1.0, steps + 1)
    ang = dist[:, None] * u[None, :]
    path_x = np.cos(ang)[..., None] * e1 + np.sin(ang)[..., None] * w[:, None, :]
    path_t = np.zeros_like(ang)
    # time leg: t from 0 to t0 at fixed x
    tt = t0s[:, None] * u[None, 1:]
    path_x = np.concatenate([path_x, np.repeat(xs[:, None, :], steps, axis=1)], axis=1)
    path_t = np.concatenate([path_t, tt], axis=1)
    flat_x = path_x.reshape(-1, n + 1)
    flat_x = flat_x / np.linalg.norm(flat_x, axis=1, keepdims=True)
    _, th = _image_arrays(m, flat_x, path_t.ravel())
    th = th.reshape(count, -1)
    inc = np.angle(np.exp(1j * np.diff(th, axis=1)))
    if np.max(np.abs(inc)) >= TRACK_STEP:
        return None
    return inc.sum(axis=1), th[:, -1]


def apply_cover_arrays(lift, xs, ts):
    """Vectorised apply_cover: rows (xs, ts) -> (image xs, image ts)."""
    m = lift.base.matrix
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    k = np.floor(ts / TWO_PI)
    t0s = ts - TWO_PI * k
    img_x, _ = _image_arrays(m, xs, ts)
    base_t = _base_displacement(m)
    # conformal distortion bounds how far one domain step can move the image
    cond = np.linalg.norm(m, 2) ** 2
    steps = int(min(4096, max(16, math.ceil(8 * cond))))
    chunk = max(1, 200000 // steps)
    accum = np.empty(xs.shape[0])
    final_theta = np.empty(xs.shape[0])
    for s in range(0, xs.shape[0], chunk):
        sl = slice(s, s + chunk)
        k_steps = steps
        while True:
            res = _track_paths(m, xs[sl], t0s[sl], k_steps)
            if res is not None:
                break
            if k_steps >= 1 << 16:
                raise PrecisionError("winding tracking did not resolve; transform too distorting")
            k_steps *= 2
        accum[sl], final_theta[sl] = res
    raw = base_t + accum
    # snap onto the exact fibre over the projected image
    img_t = final_theta + TWO_PI * np.round((raw - final_theta) / TWO_PI)
    img_t = img_t + TWO_PI * (k + lift.winding)
    return img_x, img_t


def apply_cover(lift, p):
    if p.x.shape[0] != lift.n + 1:
        raise ValidationError("transform and point dimensions differ")
    xs, ts = apply_cover_arrays(lift, p.x[None, :], np.array([p.t]))
    return EinTildePoint(xs[0], ts[0])


def _orthonormalize(m, max_iter=50, tol=1e-10):
    """Scale to the J-orthogonal group and apply the polar-type iteration."""
    n = m.shape[0] - 3
    j = signature_form(n)
    c2 = np.trace(j @ m.T @ j @ m) / (n + 3)
    if c2 <= 0:
        raise OrientationError("matrix cannot be rescaled into O(2,n+1)")
    m = m / math.sqrt(c2)
    for _ in range(max_iter):
        if np.linalg.norm(m.T @ j @ m - j) < tol:
            break
        m = 0.5 * (3.0 * m - m @ j @ m.T @ j @ m)
    return m


def _cocycle(actual, canonical):
    diff = (actual - canonical) / TWO_PI
    c = round(diff)
    if abs(diff - c) * TWO_PI > math.pi - COCYCLE_GUARD:
        raise PrecisionError(
            "winding cocycle ambiguous (time defect near pi); use a smaller tracking step"
        )
    if abs(diff - c) * TWO_PI > 1e-3:
        raise PrecisionError(f"lifted time defect {abs(diff - c) * TWO_PI:.3e} too large")
    return int(c)


def _basepoint(n):
    e1 = np.zeros(n + 1)
    e1[0] = 1.0
    return EinTildePoint(e1, 0.0)


def compose(l1, l2):
    """Group law: apply l2 first, then l1."""
    if l1.n != l2.n:
        raise ValidationError("cannot compose transforms of different dimension")
    m = _orthonormalize(l1.base.matrix @ l2.base.matrix)
    base = validate_orthogonal(m)
    b = _basepoint(l1.n)
    actual = apply_cover(l1, apply_cover(l2, b)).t
    canonical = apply_cover(canonical_lift(base), b).t
    return LiftedConformalTransform(base, _cocycle(actual, canonical))


def inverse(lift):
    base = validate_orthogonal(_orthonormalize(j_inverse(lift.base.matrix)))
    b = _basepoint(lift.n)
    back = apply_cover(canonical_lift(base), apply_cover(lift, b)).t
    return LiftedConformalTransform(base, -_cocycle(back, b.t))


def lifts_equal(l1, l2, tol=1e-8):
    return l1.winding == l2.winding and np.linalg.norm(l1.base.matrix - l2.base.matrix) <= tol


# --------------------------------------------------------------------------
# Liouville reconstruction


@dataclass
class FitReport:
    transform: OrthogonalTransform
    residual: float
    singular_gap: float

    def to_dict(self):
        return {"residual": self.residual, "singular_gap": self.singular_gap}


def _ray(e):
    return null_cone_rep(e)


def fit_liouville(correspondences):
    """Recover the unique element of O(2, n+1) mapping sources to targets.

    Each pair (e, e') asks M v = lambda w with v, w the null representatives.
    Projecting out w eliminates lambda, leaving a homogeneous linear system in
    the entries of M whose one-dimensional null space is read off an SVD.
    """
    pairs = list(correspondences)
    if not pairs:
        raise ValidationError("no correspondences given")
    n = pairs[0][0].dim
    size = n + 3
    if len(pairs) < n + 4:
        raise PreconditionError(f"need at least n+4 = {n + 4} correspondences, got {len(pairs)}")
    vs = np.array([_ray(a) for a, _ in pairs])
    ws = np.array([_ray(b) for _, b in pairs])
    rows = []
    for v, w in zip(vs, ws):
        proj = np.eye(size) - np.outer(w, w) / (w @ w)
        # (proj M v) as a linear map of vec(M) in row-major order
        rows.append(np.kron(proj, v[None, :]))
    a = np.vstack(rows)
    _, sv, vt = np.linalg.svd(a, full_matrices=False)
    gap = float(sv[-2] / sv[0])
    if gap < GAP_THRESHOLD:
        raise NonUniquenessError(
            f"correspondences are degenerate: second-smallest singular value ratio {gap:.3e}"
        )
    m = vt[-1].reshape(size, size)
    lam = np.einsum("ij,ij->i", vs @ m.T, ws) / np.einsum("ij,ij->i", ws, ws)
    if np.all(lam < 0):
        m, lam = -m, -lam
    elif not np.all(lam > 0):
        raise OrientationError("fitted scales have mixed signs; correspondences inconsistent")
    m = _orthonormalize(m)
    transform = validate_orthogonal(m, tol=max(ORTHO_TOL, 1e-12 * np.linalg.norm(m) ** 2))
    imgs = np.array([null_cone_rep(apply_ein(transform, a)) for a, _ in pairs])
    residual = float(np.max(np.linalg.norm(imgs - ws, axis=1)))
    return FitReport(transform, residual, gap)


def correspondences_from(transform, points):
    return [(e, apply_ein(transform, e)) for e in points]
