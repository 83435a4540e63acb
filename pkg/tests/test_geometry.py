import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czhardy import geometry as geo
from czhardy.errors import ContainmentViolation
from czhardy.generators import random_admissible_set

RNG = lambda seed=0: np.random.default_rng(seed)


def brute_force_dist(p, R, n=160):
    """Independent oracle: minimize the metric over a dense lattice on R."""
    xs = np.linspace(R.cube.lower()[0], R.cube.upper()[0], n)
    us = np.linspace(R.log_lo, R.log_hi, n)
    best = math.inf
    for u in us:
        q = geo.GroupPoint((0.0,), math.exp(u))
        for x in xs:
            best = min(best, geo.metric_distance(p, geo.GroupPoint((x,), math.exp(u))))
    return best


# ---------------------------------------------------------------------------
# group structure
# ---------------------------------------------------------------------------

def test_identity_element():
    p = geo.GroupPoint((3.0, -1.0), 2.5)
    assert geo.group_mul(geo.identity(2), p) == p
    assert geo.group_mul(p, geo.identity(2)).a == p.a


def test_product_formula_example():
    # ((1),2)·((3),4) = ((1+2·3), 2·4) = ((7), 8)
    out = geo.group_mul(geo.GroupPoint((1.0,), 2.0), geo.GroupPoint((3.0,), 4.0))
    assert out.x == (7.0,) and out.a == 8.0


coords = st.floats(min_value=-5, max_value=5, allow_nan=False)
heights = st.floats(min_value=0.1, max_value=10, allow_nan=False)


@given(st.tuples(coords, heights), st.tuples(coords, heights),
       st.tuples(coords, heights))
@settings(max_examples=200, deadline=None)
def test_group_axioms(t1, t2, t3):
    p, q, s = (geo.GroupPoint((c,), a) for c, a in (t1, t2, t3))
    lhs = geo.group_mul(geo.group_mul(p, q), s)
    rhs = geo.group_mul(p, geo.group_mul(q, s))
    assert np.allclose(lhs.as_array(), rhs.as_array(), rtol=0, atol=1e-12 * (1 + abs(lhs.x[0])))
    e = geo.group_mul(p, geo.group_inv(p))
    assert abs(e.x[0]) < 1e-12 * (1 + abs(p.x[0])) and abs(e.a - 1.0) < 1e-12


@given(st.tuples(coords, heights), st.tuples(coords, heights),
       st.tuples(coords, heights))
@settings(max_examples=200, deadline=None)
def test_metric_left_invariance(t1, t2, t3):
    g, p, q = (geo.GroupPoint((c,), a) for c, a in (t1, t2, t3))
    d0 = geo.metric_distance(p, q)
    d1 = geo.metric_distance(geo.group_mul(g, p), geo.group_mul(g, q))
    assert abs(d0 - d1) < 1e-12 * (1 + d0)


def test_metric_axioms_random():
    rng = RNG(7)
    for _ in range(200):
        pts = [geo.GroupPoint(tuple(rng.uniform(-4, 4, 2)),
                              float(np.exp(rng.uniform(-2, 2)))) for _ in range(3)]
        p, q, s = pts
        assert geo.metric_distance(p, p) == 0.0
        assert abs(geo.metric_distance(p, q) - geo.metric_distance(q, p)) < 1e-12
        assert geo.metric_distance(p, q) <= (geo.metric_distance(p, s)
                                             + geo.metric_distance(s, q) + 1e-12)


def test_vertical_geodesic():
    assert abs(geo.metric_distance(geo.GroupPoint((0.0,), 1.0),
                                   geo.GroupPoint((0.0,), math.e)) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def test_rho_closed_form_example():
    R = geo.CZSet(geo.DyadicCube(3, (0,)), 0.0, 1.0)  # L=8, a=1, r=1
    assert geo.rho_measure(R) == pytest.approx(16.0, abs=0)


def test_rho_vs_stratified_mc():
    # Monte Carlo quadrature of the density 1/a over the box; geometric
    # strata keep the per-stratum variance of 1/a uniformly small.
    rng = RNG(11)
    for _ in range(50):
        R = random_admissible_set(rng, 1)
        edges = np.exp(np.linspace(R.log_lo, R.log_hi, 257))
        est = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            a = rng.uniform(lo, hi, 48)
            est += (hi - lo) * float(np.mean(1.0 / a))
        est *= R.cube.side
        assert est == pytest.approx(geo.rho_measure(R), rel=1e-3)


def test_lambda_example_and_quadrature():
    R = geo.CZSet(geo.DyadicCube(3, (0,)), 0.0, 1.0)
    expected = 8.0 * (math.e - 1.0 / math.e)
    assert geo.lambda_measure(R) == pytest.approx(expected, rel=1e-14)
    # composite Simpson quadrature of a^-(d+1) as an independent oracle
    a = np.linspace(R.a_lo, R.a_hi, 20001)
    vals = a ** (-2.0)
    h = a[1] - a[0]
    simpson = h / 3 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum())
    assert geo.lambda_measure(R) == pytest.approx(8.0 * simpson, rel=1e-9)


def test_lambda_scaling_in_a():
    rng = RNG(3)
    for _ in range(20):
        R = random_admissible_set(rng, 1)
        c = float(np.exp(rng.uniform(-1, 1)))
        shifted = geo.CZSet(R.cube, R.log_a + math.log(c), R.r)
        assert geo.lambda_measure(shifted) == pytest.approx(
            geo.lambda_measure(R) * c ** (-1), rel=1e-12)


def test_rho_r_to_zero_limit():
    vals = [geo.rho_measure(geo.CZSet(geo.DyadicCube(0, (0,)), 0.0, r))
            for r in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-5


# ---------------------------------------------------------------------------
# admissibility and splitting
# ---------------------------------------------------------------------------

def test_is_admissible_examples():
    assert geo.is_admissible(geo.DyadicCube(3, (0,)), 1.0, 1.0)       # L=8
    assert not geo.is_admissible(geo.DyadicCube(2, (0,)), 1.0, 1.0)   # L=4 < e^2
    assert geo.is_admissible(geo.DyadicCube(1, (0,)), 1.0, 0.25)      # L=2


def test_split_example_strategy_a():
    R = geo.CZSet(geo.DyadicCube(3, (0,)), 0.0, 1.0)
    kids = geo.split(R)
    assert len(kids) == 2
    assert kids[0].log_a == pytest.approx(-0.5) and kids[1].log_a == pytest.approx(0.5)
    assert all(k.r == 0.5 and k.cube == R.cube for k in kids)
    assert all(geo.czset_is_admissible(k) for k in kids)
    assert all(geo.rho_measure(k) == 8.0 for k in kids)
    grandkids = [g for k in kids for g in geo.split(k)]
    assert len(grandkids) == 4
    assert all(geo.czset_is_admissible(g) for g in grandkids)
    assert sum(geo.rho_measure(g) for g in grandkids) == pytest.approx(16.0, rel=1e-15)


def _boxes_disjoint(k1, k2):
    # as boxes in (x, log a)
    x_overlap = all(max(k1.cube.lower()[i], k2.cube.lower()[i])
                    < min(k1.cube.upper()[i], k2.cube.upper()[i])
                    for i in range(k1.dimension))
    u_overlap = max(k1.log_lo, k2.log_lo) < min(k1.log_hi, k2.log_hi) - 1e-15
    return not (x_overlap and u_overlap)


def test_split_random_properties():
    rng = RNG(5)
    for _ in range(200):
        R = random_admissible_set(rng, 1)
        kids = geo.split(R)
        assert 2 <= len(kids) <= 2
        assert all(geo.czset_is_admissible(k) for k in kids)
        measures = [geo.rho_measure(k) for k in kids]
        assert max(measures) - min(measures) <= 1e-12 * geo.rho_measure(R)
        assert sum(measures) == pytest.approx(geo.rho_measure(R), rel=1e-12)
        for i in range(len(kids)):
            for j in range(i + 1, len(kids)):
                assert _boxes_disjoint(kids[i], kids[j])


def test_split_dimension_2():
    rng = RNG(9)
    for _ in range(50):
        R = random_admissible_set(rng, 2)
        kids = geo.split(R)
        assert len(kids) in (2, 4)
        assert sum(geo.rho_measure(k) for k in kids) == pytest.approx(
            geo.rho_measure(R), rel=1e-12)
        assert all(geo.czset_is_admissible(k) for k in kids)


def test_split_never_fails_on_scan():
    # deterministic scan across the admissible window; resolves the open
    # question of strategy coverage empirically
    for ri in range(1, 240):
        r = 0.025 * ri
        lo, hi = geo._admissible_log_window(0.0, r)
        j_lo = math.ceil(lo / geo.LN2)
        j_hi = math.ceil(hi / geo.LN2) - 1
        for j in range(j_lo, j_hi + 1):
            R = geo.CZSet(geo.DyadicCube(j, (0,)), 0.0, r)
            assert geo.czset_is_admissible(R)
            geo.split(R)  # must not raise


# ---------------------------------------------------------------------------
# enclosing balls, distance, dilation
# ---------------------------------------------------------------------------

def test_enclosing_ball_example():
    R = geo.CZSet(geo.DyadicCube(3, (0,)), 0.0, 1.0)
    ball = geo.enclosing_ball(R, kappa0=10.0)
    assert ball.center.x == (4.0,) and ball.center.a == 1.0
    assert R.contains_point(ball.center)
    for corner in R.corners():
        assert geo.metric_distance(ball.center, corner) <= 10.0 * ball.radius


def test_enclosing_ball_tiny_kappa_raises():
    R = geo.CZSet(geo.DyadicCube(3, (0,)), 0.0, 1.0)
    with pytest.raises(ContainmentViolation):
        geo.enclosing_ball(R, kappa0=0.01)


def test_dist_closed_form_vs_brute_force():
    rng = RNG(13)
    for _ in range(10):
        R = random_admissible_set(rng, 1, r_range=(0.2, 1.5), log_a_range=(-1, 1))
        p = geo.GroupPoint((float(rng.uniform(-40, 40)),),
                           float(np.exp(rng.uniform(-3, 3))))
        exact = geo.dist_to_set(p, R)
        brute = brute_force_dist(p, R)
        assert brute >= exact - 1e-12
        assert brute - exact < 0.05  # lattice resolution gap only


def test_dilated_contains_membership():
    rng = RNG(17)
    for _ in range(30):
        R = random_admissible_set(rng, 1)
        inside = geo.sample_in_set(R, 5, rng)
        for row in inside:
            p = geo.GroupPoint((row[0],), row[1])
            assert geo.dist_to_set(p, R) == 0.0
            assert geo.dilated_contains(R, p)


def test_dilated_contains_far_point_false():
    rng = RNG(19)
    for _ in range(30):
        R = random_admissible_set(rng, 1, r_range=(0.1, 2.0))
        center = geo.center_point(R)
        diam = 2.0 * geo.circumradius(R)
        # far point straight above: distance from center is the log gap
        gap = geo.r_scale(R) + diam + 1.0
        p = geo.GroupPoint(center.x, center.a * math.exp(gap))
        assert geo.metric_distance(p, center) > geo.r_scale(R) + diam
        assert not geo.dilated_contains(R, p)


def test_dilated_measure_bound():
    rng = RNG(23)
    for _ in range(40):
        R = random_admissible_set(rng, 1, r_range=(0.05, 4.0))
        est = geo.mc_dilated_measure(R, 2500, rng)
        assert est <= geo.DEFAULT_KAPPA0 * geo.rho_measure(R)


# ---------------------------------------------------------------------------
# ball growth
# ---------------------------------------------------------------------------

def test_ball_growth_small_radius_regime():
    rng = RNG(29)
    est = geo.ball_growth(0.5, 400_000, 1, rng)
    assert est / 0.5 ** 2 < 4.0 and est / 0.5 ** 2 > 1.0 / 4.0


def test_ball_growth_large_radius_regime():
    rng = RNG(31)
    ratios = [geo.ball_growth(r, 400_000, 1, rng) / math.exp(r)
              for r in (3.0, 4.0, 5.0)]
    assert max(ratios) / min(ratios) < 4.0


def test_ball_growth_vanishes_with_radius():
    rng = RNG(37)
    assert geo.ball_growth(1e-3, 10_000, 1, rng) < 1e-5


def test_ball_growth_rho_equals_lambda_at_identity():
    rng = RNG(41)
    r = 2.0
    rho_est = geo.ball_growth(r, 400_000, 1, rng, measure="rho")
    lam_est = geo.ball_growth(r, 400_000, 1, rng, measure="lambda")
    assert rho_est == pytest.approx(lam_est, rel=0.05)


def test_ball_growth_zero_samples_raises():
    with pytest.raises(ValueError):
        geo.ball_growth(1.0, 0, 1)
