"""Conformal embedding of Minkowski space R^{1,n} into the universal cover.

(t_m, y) goes to the null ray of ((1-q)/2, t_m | y, (1+q)/2) with
q = t_m^2 - |y|^2, where the last spatial slot is aligned with the chosen base
point of S^n. The image is the open diamond d0(base, x) + |t| < pi, and the
section above pulls the ambient form back to the flat metric exactly, so the
conformal factor relative to dsigma^2 - dt^2 is 1/|w|^2.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .ein_model import (
    DEFAULT_EPS,
    EinTildePoint,
    check_sphere_point,
    classify_codes,
    sphere_distances,
)
from .errors import DomainError, ValidationError
from .sampling import make_rng, tangent_frame

FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class MinkowskiPoint:
    tm: float
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        if y.shape[0] < 2:
            raise ValidationError("Minkowski space needs n >= 2 spatial coordinates")
        if not (math.isfinite(self.tm) and np.all(np.isfinite(y))):
            raise ValidationError("Minkowski coordinates must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "tm", float(self.tm))
        object.__setattr__(self, "y", y)

    def to_dict(self):
        return {"tm": self.tm, "y": self.y.tolist()}


def _frame(base):
    """Columns: base point, then an orthonormal tangent basis at it."""
    return tangent_frame(check_sphere_point(base))


def embed_arrays(tm, ys, base):
    """Vectorised penrose_embed: (m,), (m, n) -> sphere points (m, n+1), times (m,)."""
    tm = np.atleast_1d(np.asarray(tm, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    frame = _frame(base)
    q = tm**2 - np.sum(ys**2, axis=1)
    u1 = 0.5 * (1.0 - q)
    w = 0.5 * (1.0 + q)[:, None] * frame[:, 0] + ys @ frame[:, 1:].T
    nw = np.linalg.norm(w, axis=1)
    xs = w / nw[:, None]
    # the image stays in t in (-pi, pi), so the principal angle is the continuous lift
    ts = np.arctan2(tm, u1)
    return xs, ts


def penrose_embed(m, base):
    xs, ts = embed_arrays(m.tm, m.y[None, :], base)
    return EinTildePoint(xs[0], ts[0])


def diamond_margin(xs, ts, base):
    """pi - d0(base, x) - |t|; positive exactly inside the Minkowski diamond."""
    return math.pi - sphere_distances(np.atleast_2d(xs), np.asarray(base, dtype=float)) - np.abs(ts)


def inverse_arrays(xs, ts, base, margin=1e-9):
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    gap = diamond_margin(xs, ts, base)
    if np.any(gap < margin):
        raise DomainError(
            f"point outside the Minkowski diamond: distance to boundary {float(gap.min())!r}"
        )
    frame = _frame(base)
    coords = xs @ frame  # (cos d0, tangent components)
    scale = 1.0 / (np.cos(ts) + coords[:, 0])
    tm = scale * np.sin(ts)
    ys = scale[:, None] * coords[:, 1:]
    return tm, ys


def penrose_inverse(p, base):
    tm, ys = inverse_arrays(p.x[None, :], np.array([p.t]), base)
    return MinkowskiPoint(float(tm[0]), ys[0])


def analytic_conformal_factor(tm, y):
    """lambda with pullback of dsigma^2 - dt^2 = lambda * (|dy|^2 - dt_m^2)."""
    y = np.asarray(y, dtype=float)
    q = tm**2 - float(y @ y)
    return 1.0 / (float(y @ y) + (0.5 * (1.0 + q)) ** 2)


def flat_classify_codes(tm1, y1, tm2, y2, eps=DEFAULT_EPS):
    """Causal codes (same convention as ``classify_codes``) from the flat form."""
    dt = np.asarray(tm2) - np.asarray(tm1)
    dy = np.linalg.norm(np.asarray(y2) - np.asarray(y1), axis=-1)
    codes = np.zeros(np.shape(dt), dtype=np.int8)
    codes[dy < dt - eps] = 1
    codes[(np.abs(dy - dt) <= eps) & (dt > eps)] = 2
    codes[dy < -dt - eps] = 3
    codes[(np.abs(dy + dt) <= eps) & (dt < -eps)] = 4
    codes[(dy <= eps) & (np.abs(dt) <= eps)] = 5
    return codes


@dataclass
class ConformalityReport:
    factors: list = field(default_factory=list)
    analytic_factors: list = field(default_factory=list)
    defects: list = field(default_factory=list)

    @property
    def max_defect(self):
        return max(self.defects) if self.defects else 0.0

    @property
    def max_factor_error(self):
        if not self.factors:
            return 0.0
        f = np.asarray(self.factors)
        a = np.asarray(self.analytic_factors)
        return float(np.max(np.abs(f - a) / a))

    def to_dict(self):
        return {
            "samples": [
                {"factor": f, "analytic_factor": a, "defect": d}
                for f, a, d in zip(self.factors, self.analytic_factors, self.defects)
            ],
            "max_defect": self.max_defect,
            "max_factor_error": self.max_factor_error,
        }


def pullback_metric(tm, y, base, h=FD_STEP):
    """Pullback of dsigma^2 - dt^2 by central differences; coordinates (t_m, y)."""
    dim = 1 + len(y)
    centre = np.concatenate([[tm], y])
    steps = np.eye(dim) * h
    plus = centre + steps
    minus = centre - steps
    xp, tp = embed_arrays(plus[:, 0], plus[:, 1:], base)
    xm, tmm = embed_arrays(minus[:, 0], minus[:, 1:], base)
    jx = (xp - xm) / (2 * h)  # rows: derivative along each coordinate
    jt = (tp - tmm) / (2 * h)
    return jx @ jx.T - np.outer(jt, jt)


def conformality_at(tm, y, base, h=FD_STEP):
    g = pullback_metric(tm, y, base, h)
    eta = np.diag([-1.0] + [1.0] * len(y))
    lam = float(np.sum(g * eta) / np.sum(eta * eta))
    defect = float(np.linalg.norm(g - lam * eta) / abs(lam))
    return lam, defect


def conformality_report(base, samples, seed, radius=5.0, include_origin=True):
    """Finite-difference check that the embedding pulls back a multiple of the flat form."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    base = check_sphere_point(base)
    n = base.shape[0] - 1
    rng = make_rng(seed)
    pts = []
    if include_origin:
        pts.append(np.zeros(n + 1))
    while len(pts) < samples:
        v = rng.uniform(-radius, radius, n + 1)
        if np.linalg.norm(v) <= radius:
            pts.append(v)
    report = ConformalityReport()
    for v in pts:
        lam, defect = conformality_at(v[0], v[1:], base)
        report.factors.append(lam)
        report.analytic_factors.append(analytic_conformal_factor(v[0], v[1:]))
        report.defects.append(defect)
    return report


def penrose_csv(tm, ys, base):
    """CSV rows (tm, |y|, t, d0) for Penrose-diagram plotting."""
    xs, ts = embed_arrays(tm, ys, base)
    d0 = sphere_distances(xs, np.asarray(base, dtype=float))
    buf = io.StringIO()
    buf.write("tm,abs_y,t,d0\n")
    for a, r, t, d in zip(np.atleast_1d(tm), np.linalg.norm(np.atleast_2d(ys), axis=1), ts, d0):
        buf.write(f"{float(a)!r},{float(r)!r},{float(t)!r},{float(d)!r}\n")
    return buf.getvalue()


def causal_agreement(base, pairs, seed, radius=5.0, eps=1e-7):
    """Count disagreements between flat and embedded causal classification."""
    base = check_sphere_point(base)
    n = base.shape[0] - 1
    rng = make_rng(seed)
    a = rng.uniform(-radius, radius, (pairs, n + 1))
    b = rng.uniform(-radius, radius, (pairs, n + 1))
    flat = flat_classify_codes(a[:, 0], a[:, 1:], b[:, 0], b[:, 1:], eps)
    xa, ta = embed_arrays(a[:, 0], a[:, 1:], base)
    xb, tb = embed_arrays(b[:, 0], b[:, 1:], base)
    ein = classify_codes(xa, ta, xb, tb, eps)
    return int(np.count_nonzero(flat != ein)), pairs


def exhaustion_constant(base, radius, samples, seed):
    """Smallest c with every sampled diamond point of margin > c/radius hit by the radius-ball image.

    Reported as radius * (largest margin among diamond points whose preimage
    has Minkowski norm above ``radius``).
    """
    base = check_sphere_point(base)
    n = base.shape[0] - 1
    rng = make_rng(seed)
    g = rng.standard_normal((samples, n + 1))
    xs = g / np.linalg.norm(g, axis=1, keepdims=True)
    ts = rng.uniform(-math.pi, math.pi, samples)
    margin = diamond_margin(xs, ts, base)
    keep = margin > 1e-6
    tm, ys = inverse_arrays(xs[keep], ts[keep], base, margin=1e-6)
    norm = np.sqrt(tm**2 + np.sum(ys**2, axis=1))
    outside = norm > radius
    worst = float(margin[keep][outside].max()) if np.any(outside) else 0.0
    return radius * worst
