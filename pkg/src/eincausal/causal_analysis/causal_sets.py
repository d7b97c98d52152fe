"""Sprinkled causal sets: finite samples of a domain with their causal order."""

import base64
import io

import numpy as np

from ..ein_model import DEFAULT_EPS, EinTildePoint, classify_codes
from ..errors import DomainTooThinError, ValidationError
from ..sampling import make_rng, random_sphere_points

MIN_EFFICIENCY = 1e-4


class CausalSet:
    """Points and the relation R[i, j] = (j is in the causal future of i)."""

    def __init__(self, xs, ts, relation):
        self.xs = np.asarray(xs, dtype=float)
        self.ts = np.asarray(ts, dtype=float)
        self.relation = np.asarray(relation, dtype=bool)
        if self.relation.shape != (len(self.ts), len(self.ts)):
            raise ValidationError("relation must be a square table matching the points")

    @classmethod
    def from_arrays(cls, xs, ts, eps=DEFAULT_EPS):
        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        codes = classify_codes(xs[:, None, :], ts[:, None], xs[None, :, :], ts[None, :], eps)
        return cls(xs, ts, (codes == 1) | (codes == 2))

    def __len__(self):
        return len(self.ts)

    def points(self):
        return [EinTildePoint(x, t) for x, t in zip(self.xs, self.ts)]

    def is_partial_order(self):
        r = self.relation
        if np.any(np.diag(r)):
            return False
        if np.any(r & r.T):
            return False
        return not np.any(self.transitive_closure() & ~r)

    def transitive_closure(self):
        """Warshall's algorithm on the boolean table."""
        r = self.relation.copy()
        for k in range(len(self)):
            r |= r[:, k:k + 1] & r[k:k + 1, :]
        return r

    def edges(self):
        return np.argwhere(self.relation)

    def to_edge_csv(self):
        buf = io.StringIO()
        buf.write("source,target\n")
        for i, j in self.edges():
            buf.write(f"{i},{j}\n")
        return buf.getvalue()

    def to_dict(self):
        packed = np.packbits(self.relation.ravel())
        return {
            "points": [{"x": x.tolist(), "t": float(t)} for x, t in zip(self.xs, self.ts)],
            "count": len(self),
            "relation": base64.b64encode(packed.tobytes()).decode("ascii"),
            "relation_encoding": "row-major packbits, base64",
        }

    @classmethod
    def from_dict(cls, data):
        pts = data["points"]
        xs = np.array([p["x"] for p in pts], dtype=float)
        ts = np.array([p["t"] for p in pts], dtype=float)
        count = len(ts)
        bits = np.unpackbits(np.frombuffer(base64.b64decode(data["relation"]), dtype=np.uint8))
        rel = bits[: count * count].reshape(count, count).astype(bool)
        return cls(xs, ts, rel)


def sample_in_domain(domain, rng, count, n, max_draws=None):
    """Rejection-sample ``count`` points uniform for dsigma x dt inside ``domain``."""
    lo, hi = domain.sampling_window()
    batch = 4096
    max_draws = max_draws or max(10 * batch, int(count / MIN_EFFICIENCY) + batch)
    xs_out, ts_out = [], []
    got = drawn = 0
    while got < count:
        xs = random_sphere_points(rng, n, batch)
        ts = rng.uniform(lo, hi, batch)
        keep = domain.contains_arrays(xs, ts)
        drawn += batch
        xs_out.append(xs[keep])
        ts_out.append(ts[keep])
        got += int(np.count_nonzero(keep))
        if drawn >= max(10 * batch, 1) and got / drawn < MIN_EFFICIENCY:
            raise DomainTooThinError(
                f"rejection efficiency {got / drawn:.2e} below {MIN_EFFICIENCY:g}"
            )
        if drawn > max_draws:
            raise DomainTooThinError("sampling budget exhausted")
    return np.vstack(xs_out)[:count], np.concatenate(ts_out)[:count]


def sprinkle(domain, count, seed, n=2, eps=DEFAULT_EPS):
    """Seeded uniform sprinkling of ``count`` points with the induced causal order."""
    if count < 1:
        raise ValidationError("count must be positive")
    rng = make_rng(seed)
    xs, ts = sample_in_domain(domain, rng, count, n)
    return CausalSet.from_arrays(xs, ts, eps)
