import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eincausal.causal_analysis import (
    AchronalGraph,
    BlendFunction,
    CausalCurve,
    ConeFunction,
    ConstantFunction,
    classify_curve,
)
from eincausal.conformal_group import random_orthogonal
from eincausal.domains import (
    AllDomain,
    Diamond,
    FutureCone,
    Lens,
    PastCone,
    Union,
    boundary_samples,
    boundary_split,
    cauchy_in_domain,
    conjugate_construction,
    expansion_check,
    glue,
    is_causally_convex,
    minkowski_diamond,
    null_corner,
)
from eincausal.ein_model import (
    EinTildePoint,
    boundary_of_future,
    boundary_of_past,
    classify_codes,
    sigma,
    sphere_distances,
)
from eincausal.errors import (
    GluingFailure,
    PreconditionError,
    ResolutionError,
    ValidationError,
)
from eincausal.sampling import make_rng, random_sphere_points

from conftest import E1, E2, E3, unit

MESH = 2 * math.pi / 32


def P(x, t):
    return EinTildePoint(x, t)


def flat(value, mesh=MESH):
    return AchronalGraph.from_function(ConstantFunction(value), 2, mesh)


def probe_points(seed, count, lo=-5.0, hi=5.0):
    rng = make_rng(seed)
    return random_sphere_points(rng, 2, count), rng.uniform(lo, hi, count)


# --------------------------------------------------------------------------
# membership


def test_all_contains_everything():
    xs, ts = probe_points(0, 1000, -100, 100)
    assert AllDomain().contains_arrays(xs, ts).all()
    assert AllDomain().contains(P(E1, 1e6))


def test_diamond_membership_examples():
    d = Diamond(P(E3, 0.0), P(E3, 1.0))
    assert d.contains(P(E3, 0.5))
    assert not d.contains(P(E3, 0.0))  # open: the tip is excluded
    assert not d.contains(P(E1, 0.5))


def test_diamond_membership_matches_cone_codes():
    a, b = P(unit([1, 1, 0]), -0.7), P(unit([1, 0, 1]), 1.9)
    d = Diamond(a, b)
    xs, ts = probe_points(1, 5000, -1, 2.5)
    codes_a = classify_codes(a.x, a.t, xs, ts, 0.0)
    codes_b = classify_codes(b.x, b.t, xs, ts, 0.0)
    assert np.array_equal(d.contains_arrays(xs, ts), (codes_a == 1) & (codes_b == 3))


def test_diamond_needs_chronological_tips():
    with pytest.raises(ValidationError):
        Diamond(P(E3, 0.0), P(E1, 0.5))  # unrelated
    with pytest.raises(ValidationError):
        Diamond(P(E3, 0.0), P(-E3, math.pi))  # null related


def test_cones_and_minkowski_diamond():
    fc, pc = FutureCone(P(E3, 0.0)), PastCone(P(E3, 0.0))
    assert fc.contains(P(E3, 0.1)) and not fc.contains(P(E3, -0.1))
    assert pc.contains(P(E3, -0.1)) and not pc.contains(P(E3, 0.1))
    m = minkowski_diamond(E3)
    xs, ts = probe_points(2, 10_000, -math.pi, math.pi)
    margin = math.pi - sphere_distances(xs, E3) - np.abs(ts)
    assert np.array_equal(m.contains_arrays(xs, ts), margin > 0)


def test_lens_membership_and_validation():
    f = ConeFunction(E1, 0.5)
    lo = AchronalGraph.from_function(BlendFunction([f], [1.0]), 2, MESH).shifted(-0.3)
    hi = lo.shifted(0.6)
    lens = Lens(lo, hi)
    assert lens.contains(P(E1, 0.0))
    assert not lens.contains(P(E1, 0.31))
    with pytest.raises(ValidationError):
        Lens(hi, lo)
    half = AchronalGraph.from_function(ConstantFunction(0.0), 2, MESH, cap=(E3, 1.0))
    with pytest.raises(ValidationError):
        Lens(half.shifted(-1), half)


def test_union_is_disjunction():
    a = Diamond(P(E3, 0.0), P(E3, 1.0))
    b = Diamond(P(E1, 0.0), P(E1, 1.0))
    u = Union([a, b])
    xs, ts = probe_points(3, 5000, -0.5, 1.5)
    assert np.array_equal(u.contains_arrays(xs, ts), a.contains_arrays(xs, ts) | b.contains_arrays(xs, ts))


# --------------------------------------------------------------------------
# causal convexity


def random_diamond(rng):
    x0 = random_sphere_points(rng, 2, 1)[0]
    span = rng.uniform(0.8, 2.8)
    x1 = random_sphere_points(rng, 2, 1)[0]
    r = rng.uniform(0, span - 0.3)
    v = x1 - (x1 @ x0) * x0
    v /= np.linalg.norm(v)
    xb = math.cos(r) * x0 + math.sin(r) * v
    t0 = rng.uniform(-1, 1)
    return Diamond(P(x0, t0), P(xb, t0 + span))


@pytest.mark.parametrize("seed", range(3))
def test_random_diamonds_are_causally_convex(seed):
    d = random_diamond(make_rng(seed))
    v = is_causally_convex(d, trials=300, seed=seed)
    assert v.convex and v.witness is None
    assert v.pairs_checked == 300 and v.curves_checked >= 300


def test_all_is_causally_convex():
    assert is_causally_convex(AllDomain(), trials=200).convex


def test_stacked_diamonds_are_refuted_with_a_checked_witness():
    x0 = E3
    u = Union([Diamond(P(x0, -1.0), P(x0, 0.0)), Diamond(P(x0, 0.5), P(x0, 1.5))])
    v = is_causally_convex(u, trials=300, seed=0)
    assert not v.convex
    c = v.witness
    assert classify_curve(c, 1e-9).is_causal
    inside = u.contains_arrays(c.xs, c.ts)
    assert inside[0] and inside[-1] and not inside.all()


def test_null_corner_lands_on_the_null_cone_of_the_target():
    rng = make_rng(4)
    xp, xq = E3, unit([0.3, 0.2, 1.0])
    tp, tq = 0.0, 1.5
    dirs = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    s = null_corner(np.repeat(xp[None], 2, 0), np.full(2, tp), dirs,
                    np.repeat(xq[None], 2, 0), np.full(2, tq))
    corner = np.cos(s)[:, None] * xp + np.sin(s)[:, None] * dirs
    gap = (tq - tp - s) - sphere_distances(corner, xq)
    np.testing.assert_allclose(gap, 0.0, atol=1e-9)
    assert rng is not None


def test_convexity_needs_interior():
    with pytest.raises(Exception, match="degenerate"):
        is_causally_convex(Diamond(P(E3, 0.0), P(E3, 1e-4)), trials=10)


# --------------------------------------------------------------------------
# boundary decomposition


def test_boundary_split_of_untilted_diamond_follows_the_cones():
    a, b = P(E3, -1.0), P(E3, 1.0)
    d = Diamond(a, b)
    mesh = 2 * math.pi / 48
    split = boundary_split(d, flat(0.0, mesh), mesh, triples=500)
    assert split.valid and split.triples_checked == 500
    assert np.max(np.abs(split.plus_ts - (b.t - sphere_distances(split.plus_xs, b.x)))) < mesh
    assert np.max(np.abs(split.minus_ts - (a.t + sphere_distances(split.minus_xs, a.x)))) < mesh


def test_boundary_split_of_tilted_diamond_uses_its_midway_graph():
    d = random_diamond(make_rng(7))
    mesh = 2 * math.pi / 48
    split = boundary_split(d, d.cauchy_graph(mesh), mesh, triples=500)
    assert split.valid
    dev_plus = split.plus_ts - (d.b.t - sphere_distances(split.plus_xs, d.b.x))
    dev_minus = split.minus_ts - (d.a.t + sphere_distances(split.minus_xs, d.a.x))
    assert max(np.abs(dev_plus).max(), np.abs(dev_minus).max()) < mesh


def test_boundary_split_of_lens_is_its_two_graphs():
    f = BlendFunction([ConeFunction(E1, 0.6), ConeFunction(E2, -0.3)], [0.5, 0.5])
    mid = AchronalGraph.from_function(f, 2, MESH)
    c = 0.4
    lens = Lens(mid.shifted(-c), mid.shifted(c))
    split = boundary_split(lens, mid, MESH, triples=300)
    assert split.valid
    np.testing.assert_allclose(split.plus_ts, mid.evaluate(split.plus_xs) + c, atol=1e-9)
    np.testing.assert_allclose(split.minus_ts, mid.evaluate(split.minus_xs) - c, atol=1e-9)
    assert len(split.plus_ts) == len(split.minus_ts) == len(mid)


def test_boundary_split_of_all_is_empty():
    split = boundary_split(AllDomain(), flat(0.0), MESH)
    assert len(split.plus_ts) == 0 and len(split.minus_ts) == 0 and split.valid


def test_boundary_split_refuses_graph_touching_the_boundary():
    lens = Lens(flat(-1.0), flat(0.0))
    with pytest.raises(ResolutionError):
        boundary_split(lens, flat(0.0), MESH)  # the upper sheet is the graph itself


def test_boundary_samples_are_on_the_boundary():
    d = Diamond(P(E1, 0.0), P(E2, 2.5))
    pts, idx, ts, entering = boundary_samples(d, MESH)
    xs = pts[idx]
    h = 1e-6
    below = d.contains_arrays(xs, ts - h)
    above = d.contains_arrays(xs, ts + h)
    assert np.array_equal(above, entering) and np.array_equal(below, ~entering)


# --------------------------------------------------------------------------
# Cauchy surfaces of domains and gluing


def big_diamond(x, lo, hi):
    return Diamond(P(x, lo), P(x, hi))


def test_flat_slice_is_cauchy_for_tall_diamond_only():
    s = flat(0.0)
    assert cauchy_in_domain(big_diamond(E3, -4.0, 4.0), s, probes=100).cauchy
    v = cauchy_in_domain(big_diamond(E3, -1.0, 1.0), s, probes=100)
    assert not v.cauchy and not v.contained


def test_glue_identical_domains_is_trivial():
    d = big_diamond(E3, -4.0, 4.0)
    out, rep = glue(d, d, flat(0.0))
    assert out is d and rep.trivial and rep.valid


def test_glue_short_diamonds_fails_precondition():
    # the t = 0 slice leaves diamonds of half-height below pi
    d1 = big_diamond(E3, -1.0, 1.0)
    d2 = big_diamond(E3, -1.5, 0.8)
    with pytest.raises(PreconditionError, match="Cauchy"):
        glue(d1, d2, flat(0.0), probes=50)


def test_glue_two_tall_diamonds_sharing_a_slice():
    d1 = big_diamond(E3, -4.0, 4.0)
    d2 = Diamond(P(unit([0.2, 0.0, 1.0]), -3.5), P(unit([0.2, 0.0, 1.0]), 3.8))
    union, rep = glue(d1, d2, flat(0.0), trials=300, probes=100)
    assert isinstance(union, Union)
    assert rep.valid, rep.to_dict()
    assert rep.unexplained_points == 0 and rep.merged_points > 0


def test_glue_lens_with_enclosing_diamond():
    d = big_diamond(E3, -4.0, 4.0)
    lens = Lens(flat(-0.3), flat(0.3))
    union, rep = glue(lens, d, flat(0.0), trials=300, probes=100)
    assert rep.valid, rep.to_dict()
    xs, ts = probe_points(5, 2000, -4.5, 4.5)
    assert np.array_equal(union.contains_arrays(xs, ts), d.contains_arrays(xs, ts))
    assert rep.swallowed_points > 0


def test_glue_reports_failure_with_witness(monkeypatch):
    # unions sharing a Cauchy graph are convex inside the cover, so force the refutation path
    import eincausal.domains.checks as checks

    stacked = Union([Diamond(P(E3, -1.0), P(E3, 0.0)), Diamond(P(E3, 0.5), P(E3, 1.5))])
    refuted = is_causally_convex(stacked, trials=200, seed=0)
    monkeypatch.setattr(checks, "is_causally_convex", lambda *a, **k: refuted)
    d1 = big_diamond(E3, -4.0, 4.0)
    d2 = Diamond(P(unit([0.2, 0.0, 1.0]), -3.5), P(unit([0.2, 0.0, 1.0]), 3.8))
    with pytest.raises(GluingFailure) as info:
        glue(d1, d2, flat(0.0), trials=50, probes=40)
    rep = info.value.report
    assert not rep.valid
    assert classify_curve(rep.convexity.witness, 1e-9).is_causal


def test_glue_is_commutative_and_idempotent_on_membership():
    d1 = big_diamond(E3, -4.0, 4.0)
    d2 = Diamond(P(unit([0.2, 0.0, 1.0]), -3.5), P(unit([0.2, 0.0, 1.0]), 3.8))
    s = flat(0.0)
    u12, _ = glue(d1, d2, s, trials=200, probes=60)
    u21, _ = glue(d2, d1, s, trials=200, probes=60)
    u11, _ = glue(d1, d1, s)
    xs, ts = probe_points(6, 1000, -4.5, 4.5)
    assert np.array_equal(u12.contains_arrays(xs, ts), u21.contains_arrays(xs, ts))
    assert np.array_equal(u11.contains_arrays(xs, ts), d1.contains_arrays(xs, ts))


# --------------------------------------------------------------------------
# expansion


def test_expansion_of_constant_graph_is_isometric():
    rep = expansion_check(flat(0.0), pairs=500)
    assert rep.min_ratio == 1.0 and rep.max_ratio == 1.0


def test_expansion_of_half_slope_cone():
    g = AchronalGraph.from_function(ConeFunction(E3, 0.5), 2, MESH)
    rep = expansion_check(g, pairs=1000)
    assert rep.max_ratio <= 1.0
    assert rep.min_ratio >= 0.75 - MESH
    assert 0.45 < rep.lipschitz <= 0.5 + 1e-12


def test_expansion_refuses_null_graphs():
    with pytest.raises(PreconditionError):
        expansion_check(boundary_of_past(P(E3, 0.0), MESH), pairs=10)


@given(st.integers(0, 2**31))
def test_expansion_is_rotation_invariant(seed):
    g = AchronalGraph.from_function(ConeFunction(E2, 0.7, 0.3), 2, 2 * math.pi / 24)
    rot = random_orthogonal(seed, 1.0).matrix[2:, 2:]
    # the spatial block of a random conformal map is not orthogonal; use its polar part
    u, _, vt = np.linalg.svd(rot)
    r = u @ vt
    a = expansion_check(g, pairs=300, seed=1)
    b = expansion_check(g.transformed(r), pairs=300, seed=1)
    assert abs(a.min_ratio - b.min_ratio) < 1e-9
    assert abs(a.max_ratio - b.max_ratio) < 1e-9


# --------------------------------------------------------------------------
# conjugate construction


def test_conjugate_construction_is_valid():
    rep = conjugate_construction(P(unit([1, 2, 2]), 0.3), MESH, probes=100, seed=0)
    assert rep.refocus_error < 1e-9
    assert rep.achronal and rep.cauchy
    assert rep.generator_distance < MESH
    assert rep.valid


def test_conjugate_construction_is_sigma_invariant():
    p = P(unit([0.3, -1.0, 0.5]), -0.8)
    a = conjugate_construction(p, MESH, probes=50, seed=2)
    b = conjugate_construction(sigma(p), MESH, probes=50, seed=2)
    assert a.achronal == b.achronal and a.cauchy == b.cauchy and a.valid == b.valid
    assert abs(a.refocus_error - b.refocus_error) < 1e-12
    assert abs(a.generator_distance - b.generator_distance) < 1e-9


def test_sigma_of_past_boundary_is_boundary_of_next_past():
    p = P(E1, 0.0)
    g = boundary_of_past(p, MESH)
    moved = sigma(P(g.points[0], g.values[0]))
    target = boundary_of_future(p, MESH)
    # sigma maps the boundary of I^-(p) onto the boundary of I^+(p)
    assert abs(target.evaluate(moved.x)[0] - moved.t) < 1e-12
    imgs = -g.points, g.values + math.pi
    np.testing.assert_allclose(target.evaluate(imgs[0]), imgs[1], atol=1e-12)


def test_sampled_curve_witness_is_a_causal_curve_object():
    u = Union([Diamond(P(E3, -1.0), P(E3, 0.0)), Diamond(P(E3, 0.5), P(E3, 1.5))])
    v = is_causally_convex(u, trials=100, seed=1)
    assert isinstance(v.witness, CausalCurve)
    d = v.to_dict()
    assert d["convex"] is False and "witness" in d
