"""Sampled curves t -> (x(t), t) in the universal cover.

Between samples a curve follows the minimizing great circle in x and is
linear in t. Causality is the 1-Lipschitz condition on each segment.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..ein_model import (
    ANTIPODAL_GUARD,
    DEFAULT_EPS,
    EinTildePoint,
    sphere_distances,
)
from ..errors import (
    ImpossibilityError,
    NonConvergenceError,
    PrecisionError,
    PreconditionError,
    ValidationError,
)


def slerp_rows(a, b, frac):
    """Row-wise great-circle interpolation between ``a`` and ``b``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    frac = np.asarray(frac, dtype=float)
    d = sphere_distances(a, b)
    sd = np.sin(d)
    small = sd < 1e-12
    safe = np.where(small, 1.0, sd)
    wa = np.where(small, 1.0 - frac, np.sin((1.0 - frac) * d) / safe)
    wb = np.where(small, frac, np.sin(frac * d) / safe)
    out = wa[:, None] * a + wb[:, None] * b
    return out / np.linalg.norm(out, axis=1, keepdims=True)


class CausalCurve:
    """Finite sampled path with strictly increasing time."""

    def __init__(self, ts, xs):
        ts = np.array(ts, dtype=float).ravel()
        xs = np.array(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[0] != ts.shape[0]:
            raise ValidationError(f"curve needs matching (m,) times and (m, n+1) points, got {ts.shape} and {xs.shape}")
        if xs.shape[1] < 3:
            raise ValidationError("curve points need n >= 2")
        if ts.shape[0] < 1:
            raise ValidationError("curve needs at least one sample")
        if not np.all(np.isfinite(ts)) or not np.all(np.isfinite(xs)):
            raise ValidationError("curve samples must be finite")
        norms = np.linalg.norm(xs, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValidationError("curve point off the sphere")
        if np.any(np.diff(ts) <= 0.0):
            raise ValidationError("curve times must be strictly increasing")
        if ts.shape[0] > 1 and np.any(sphere_distances(xs[:-1], xs[1:]) >= math.pi - ANTIPODAL_GUARD):
            raise ValidationError("consecutive curve samples are antipodal; interpolation is ambiguous")
        ts.setflags(write=False)
        xs.setflags(write=False)
        self.ts = ts
        self.xs = xs

    @classmethod
    def from_points(cls, points):
        return cls([p.t for p in points], np.array([p.x for p in points]))

    def __len__(self):
        return self.ts.shape[0]

    @property
    def dim(self):
        return self.xs.shape[1] - 1

    @property
    def start(self):
        return EinTildePoint(self.xs[0], self.ts[0])

    @property
    def end(self):
        return EinTildePoint(self.xs[-1], self.ts[-1])

    def points(self):
        return [EinTildePoint(x, t) for x, t in zip(self.xs, self.ts)]

    def segment_distances(self):
        return sphere_distances(self.xs[:-1], self.xs[1:])

    def position_at(self, times):
        """Interpolated sphere positions at the given times (clamped to the span)."""
        times = np.clip(np.atleast_1d(np.asarray(times, dtype=float)), self.ts[0], self.ts[-1])
        if len(self) == 1:
            return np.repeat(self.xs[:1], times.shape[0], axis=0)
        j = np.clip(np.searchsorted(self.ts, times, side="right") - 1, 0, len(self) - 2)
        frac = (times - self.ts[j]) / (self.ts[j + 1] - self.ts[j])
        return slerp_rows(self.xs[j], self.xs[j + 1], frac)

    def resampled(self, times):
        times = np.asarray(times, dtype=float)
        return CausalCurve(times, self.position_at(times))

    def densified(self, per_segment):
        """Insert ``per_segment - 1`` interpolated samples in every segment."""
        if len(self) == 1:
            return self
        frac = np.arange(per_segment) / per_segment
        ts = (self.ts[:-1, None] + frac[None, :] * np.diff(self.ts)[:, None]).ravel()
        ts = np.append(ts, self.ts[-1])
        return self.resampled(ts)


class CurveKind(enum.Enum):
    Timelike = "Timelike"
    Causal = "Causal"
    NullGeodesic = "NullGeodesic"
    NotCausal = "NotCausal"


@dataclass
class CurveVerdict:
    kind: CurveKind
    witness_segment: int = None
    max_excess: float = 0.0
    plane_defect: float = None

    @property
    def is_causal(self):
        return self.kind is not CurveKind.NotCausal

    def to_dict(self):
        out = {"kind": self.kind.value, "max_excess": self.max_excess}
        if self.witness_segment is not None:
            out["witness_segment"] = self.witness_segment
        if self.plane_defect is not None:
            out["plane_defect"] = self.plane_defect
        return out


def _is_null_geodesic(c, d, dt, eps):
    if np.any(np.abs(d - dt) > eps):
        return False, None
    m = len(c)
    sv = np.linalg.svd(c.xs, compute_uv=False)
    defect = float(sv[2]) if sv.shape[0] > 2 else 0.0
    if defect >= eps * math.sqrt(m) and defect > 0.0:
        return False, defect
    # orientation: angles in the fitted plane must advance monotonically
    _, _, vt = np.linalg.svd(c.xs, full_matrices=False)
    e1, e2 = vt[0], vt[1]
    phi = np.arctan2(c.xs @ e2, c.xs @ e1)
    inc = np.angle(np.exp(1j * np.diff(phi)))
    moving = dt > eps
    if np.any(moving):
        signs = np.sign(inc[moving])
        if not (np.all(signs > 0) or np.all(signs < 0)):
            return False, defect
    return True, defect


def classify_curve(c, eps=DEFAULT_EPS):
    """Timelike / Causal / NullGeodesic / NotCausal with first violating segment."""
    if len(c) < 2:
        raise ValidationError("classification needs at least 2 samples")
    d = c.segment_distances()
    dt = np.diff(c.ts)
    excess = d - dt
    bad = np.nonzero(excess > eps)[0]
    max_excess = float(excess.max())
    if bad.size:
        return CurveVerdict(CurveKind.NotCausal, int(bad[0]), max_excess)
    null, defect = _is_null_geodesic(c, d, dt, eps)
    if null:
        return CurveVerdict(CurveKind.NullGeodesic, None, max_excess, defect)
    if np.all(d < dt - eps):
        return CurveVerdict(CurveKind.Timelike, None, max_excess, defect)
    return CurveVerdict(CurveKind.Causal, None, max_excess, defect)


# --------------------------------------------------------------------------
# timelike perturbation


def _point_at_arclength(xs, ell, targets):
    seg = np.clip(np.searchsorted(ell, targets, side="right") - 1, 0, len(ell) - 2)
    lens = ell[seg + 1] - ell[seg]
    frac = np.where(lens > 0, (targets - ell[seg]) / np.where(lens > 0, lens, 1.0), 0.0)
    return slerp_rows(xs[seg], xs[seg + 1], np.clip(frac, 0.0, 1.0))


def _cut_corner(ts, xs, i, r):
    """Replace vertex i by a short chord between points at distance r on each leg."""
    f0 = 1.0 - r / (ts[i] - ts[i - 1])
    f1 = r / (ts[i + 1] - ts[i])
    before = slerp_rows(xs[i - 1], xs[i], np.array([f0]))[0]
    after = slerp_rows(xs[i], xs[i + 1], np.array([f1]))[0]
    mid = slerp_rows(before, after, np.array([0.5]))[0]
    new_ts = np.concatenate([ts[:i], [ts[i] - r, ts[i], ts[i] + r], ts[i + 1:]])
    new_xs = np.vstack([xs[:i], before, mid, after, xs[i + 1:]])
    return new_ts, new_xs


def timelike_perturbation(c, eps=1e-4, tol=DEFAULT_EPS):
    """A timelike curve with the same endpoints, uniformly within 10*eps of ``c``.

    Slack comes either from strict segments already present or from shaving a
    corner between null segments; it is then spread over every segment by
    blending the arc-length schedule with the uniform-speed one.
    """
    verdict = classify_curve(c, tol)
    if verdict.kind is CurveKind.NotCausal:
        raise PreconditionError("input curve is not causal")
    if verdict.kind is CurveKind.NullGeodesic:
        raise ImpossibilityError(
            "a single null geodesic admits no timelike curve between its endpoints"
        )
    if verdict.kind is CurveKind.Timelike or classify_curve(c, 0.0).kind is CurveKind.Timelike:
        return CausalCurve(c.ts, c.xs)

    ts = np.array(c.ts)
    xs = np.array(c.xs)
    d = sphere_distances(xs[:-1], xs[1:])
    dt = np.diff(ts)
    slack = np.clip(dt - d, 0.0, None)
    if slack.sum() <= 100.0 * tol:
        # look for a corner between two consecutive segments
        joined = sphere_distances(xs[:-2], xs[2:])
        gain = d[:-1] + d[1:] - joined
        if gain.size == 0 or gain.max() <= tol:
            raise ImpossibilityError("curve is a null pregeodesic; no slack to spread")
        i = int(np.argmax(gain)) + 1
        r = min(2.0 * eps, 0.25 * dt[i - 1], 0.25 * dt[i])
        ts, xs = _cut_corner(ts, xs, i, r)
        d = sphere_distances(xs[:-1], xs[1:])

    ell = np.concatenate([[0.0], np.cumsum(d)])
    total = ell[-1]
    span = ts[-1] - ts[0]
    if total >= span:
        raise PrecisionError("no strict slack survived; increase eps")
    blend = 1.0 if total <= 0.0 else min(1.0, 2.0 * eps / total)
    uniform = total * (ts - ts[0]) / span
    target = (1.0 - blend) * ell + blend * uniform
    target[0], target[-1] = 0.0, total
    new_xs = _point_at_arclength(xs, ell, target)
    new_xs[0], new_xs[-1] = xs[0], xs[-1]
    out = CausalCurve(ts, new_xs)
    if classify_curve(out, 0.0).kind is not CurveKind.Timelike:
        raise PrecisionError("spread slack fell below rounding; increase eps")
    return out


# --------------------------------------------------------------------------
# limit curves


def _sup_distances(pos):
    """Pairwise sup over grid times of the sphere distance, shape (K, K)."""
    k = pos.shape[0]
    out = np.zeros((k, k))
    for i in range(k):
        out[i, i + 1:] = sphere_distances(pos[i][None, :, :], pos[i + 1:]).max(axis=1)
    return out + out.T


def limit_curve(curves, grid=256, eps=DEFAULT_EPS):
    """Grid-scale Arzela-Ascoli: a uniformly convergent subsequence and its limit.

    Curves are evaluated on ``grid + 1`` common times. The subsequence is
    refined by halving a sup-distance radius, each time keeping the densest
    cluster (ties broken toward later terms) until the radius reaches the grid
    spacing. The latest surviving term is returned as the limit.
    """
    curves = list(curves)
    if not curves:
        raise ValidationError("need at least one curve")
    for i, c in enumerate(curves):
        if len(c) >= 2 and not classify_curve(c, eps).is_causal:
            raise PreconditionError(f"curve {i} is not causal")
    a = max(c.ts[0] for c in curves)
    b = min(c.ts[-1] for c in curves)
    if not b > a:
        raise PreconditionError("curves share no common time interval")
    times = np.linspace(a, b, grid + 1)
    pos = np.stack([c.position_at(times) for c in curves])
    spacing = (b - a) / grid

    idx = np.arange(len(curves))
    if len(curves) > 1:
        dist = _sup_distances(pos)
        radius = math.pi
        while radius > spacing:
            radius /= 2.0
            sub = dist[np.ix_(idx, idx)] <= radius
            counts = sub.sum(axis=1)
            best = np.flatnonzero(counts == counts.max())[-1]
            idx = idx[sub[best]]
            if idx.size < 2:
                raise NonConvergenceError(
                    f"no two curves agree within {radius:.3g} on the grid; "
                    "sequence has no detectable convergent subsequence"
                )
    rep = int(idx.max())
    return CausalCurve(times, pos[rep])
