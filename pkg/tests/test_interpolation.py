import math

import numpy as np
import pytest

from czhardy import decomposition as dec
from czhardy import functions as fn
from czhardy import geometry as geo
from czhardy import interpolation as itp
from czhardy.errors import EmptyGrid, ExponentOrder
from czhardy.generators import (geometric_spike_function, random_atom,
                                random_function, random_topology)

DOMAIN = fn.ComputationDomain.standard()


# ---------------------------------------------------------------------------
# theta and the objective
# ---------------------------------------------------------------------------

def test_theta_examples():
    assert itp.theta_of(2.0, math.inf) == pytest.approx(0.5, rel=1e-15)
    assert itp.theta_of(1.5, 3.0) == pytest.approx(0.5, rel=1e-15)
    assert itp.theta_of(1.0 + 1e-6, math.inf) < 1e-5  # p -> 1 limit


def test_theta_relation_holds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = float(rng.uniform(1.01, 5.0))
        p1 = float(rng.uniform(p + 0.01, 10.0))
        th = itp.theta_of(p, p1)
        assert 0 < th < 1
        assert 1.0 / p == pytest.approx(1 - th + th / p1, rel=1e-12)


def test_theta_rejects_bad_order():
    with pytest.raises(ExponentOrder):
        itp.theta_of(3.0, 2.0)
    with pytest.raises(ExponentOrder):
        itp.theta_of(2.0, 2.0)


def test_g_objective_example():
    assert itp.g_objective(1.0, 1.0, 2.0, math.inf, 1.0) == pytest.approx(2.0)
    vals = [itp.g_objective(1.0, lam, 2.0, math.inf, 1.0)
            for lam in (1e-4, 1.0, 1e4)]
    assert vals[0] > vals[1] and vals[2] > vals[1]  # diverges both ways


def test_g_objective_linear_in_t():
    for lam in (0.3, 1.0, 4.0):
        g1 = itp.g_objective(1.0, lam, 2.0, 4.0, 1.5)
        g2 = itp.g_objective(2.0, lam, 2.0, 4.0, 1.5)
        assert g2 - g1 == pytest.approx(lam ** (1 - 2.0 / 4.0), rel=1e-12)


def test_lambda_star_example():
    assert itp.lambda_star(1.0, 2.0, math.inf, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_lambda_star_is_grid_argmin():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = float(rng.uniform(1.2, 4.0))
        p1 = float(rng.choice([math.inf, p + rng.uniform(0.5, 6.0)]))
        norm = float(np.exp(rng.uniform(-1, 2)))
        t = float(np.exp(rng.uniform(-3, 3)))
        star = itp.lambda_star(t, p, p1, norm)
        grid = star * np.logspace(-2, 2, 81)
        vals = [itp.g_objective(t, lam, p, p1, norm) for lam in grid]
        k = int(np.argmin(vals))
        # within one grid step of the closed-form stationary point
        assert abs(math.log(grid[k]) - math.log(star)) <= math.log(grid[1] / grid[0]) + 1e-12
        assert itp.g_objective(t, star, p, p1, norm) <= min(vals) * (1 + 1e-12)


def test_g_min_scales_like_t_theta():
    for p, p1 in ((2.0, math.inf), (1.5, 3.0), (2.0, 4.0)):
        theta = itp.theta_of(p, p1)
        ts = np.logspace(-3, 3, 25)
        gs = [itp.g_objective(t, itp.lambda_star(t, p, p1, 1.0), p, p1, 1.0)
              for t in ts]
        slopes = np.diff(np.log(gs)) / np.diff(np.log(ts))
        assert np.max(np.abs(slopes - theta)) < 1e-6
        if not math.isinf(p1):
            # the proof's displayed t exponent equals theta
            assert p1 * (p - 1) / (p * (p1 - 1)) == pytest.approx(theta, rel=1e-12)


def test_lambda_star_t_exponent():
    p, p1 = 1.5, 3.0
    t1, t2 = 0.7, 2.9
    ratio = itp.lambda_star(t2, p, p1, 1.0) / itp.lambda_star(t1, p, p1, 1.0)
    expected = (t2 / t1) ** (p1 / (p - p * p1))
    assert ratio == pytest.approx(expected, rel=1e-12)
    r_inf = itp.lambda_star(t2, 2.0, math.inf, 1.0) / itp.lambda_star(t1, 2.0, math.inf, 1.0)
    assert r_inf == pytest.approx((t2 / t1) ** (-1 / 2.0), rel=1e-12)


# ---------------------------------------------------------------------------
# lambda decomposition
# ---------------------------------------------------------------------------

def _bounded_function(rng, max_depth=4, p=2.0, level=0.3):
    # scaled so the worst root p-average equals `level`; heights above it
    # satisfy the stopping-time precondition
    t = random_topology(DOMAIN, rng, max_depth=max_depth)
    f = random_function(t, rng)
    worst = max(fn.average_on(f.with_values(np.abs(f.values) ** p), R) ** (1 / p)
                for R in DOMAIN.roots)
    return f * (level / worst)


def test_lambda_large_gives_trivial_split():
    rng = np.random.default_rng(2)
    f = _bounded_function(rng)
    lam = fn.lp_norm(f, math.inf) * 1.01
    out = itp.lambda_decompose(f, lam, 2.0)
    assert out.bad_sets == ()
    assert out.bound_c == 0.0
    assert np.array_equal(out.good.values, f.values)


def test_lambda_decompose_reconstruction_and_bounds():
    rng = np.random.default_rng(3)
    p = 2.0
    d = DOMAIN.dimension
    for _ in range(20):
        f = _bounded_function(rng, p=p)
        lam = 0.35
        out = itp.lambda_decompose(f, lam, p)
        recon = out.reconstruct()
        assert np.max(np.abs(recon.values - f.values)) <= 1e-12 * max(
            1.0, fn.lp_norm(f, math.inf))
        # good part bounded by 2^(d/p) lambda (averages of the sandwich)
        assert out.bound_a <= 2 ** (d / p) * lam * (1 + 1e-12)
        # per-set averages stay within the proof constant
        for R in out.bad_sets:
            assert abs(fn.average_on(f, R)) <= 2 ** (d / p) * lam * (1 + 1e-12)


def test_lambda_decompose_bound_c_budget():
    # the certified atomic bound obeys C * lambda^(1-p) ||f||_p^p with the
    # run-certified constant C = 2 * 2^(d/p) * max atom certificate
    rng = np.random.default_rng(4)
    p = 2.0
    d = 1
    for _ in range(20):
        f = _bounded_function(rng, p=p)
        lam = 0.32
        out = itp.lambda_decompose(f, lam, p)
        if not out.bad_sets:
            continue
        max_cert = max(out.piece_certificates)
        cap = 2 * 2 ** (d / p) * max_cert * lam ** (1 - p) * fn.lp_norm(f, p) ** p
        assert out.bound_c <= cap * (1 + 1e-12)


def test_lambda_decompose_bound_b():
    rng = np.random.default_rng(5)
    p, p1 = 2.0, 4.0
    d = 1
    for _ in range(10):
        f = _bounded_function(rng, p=p)
        lam = 0.4
        out = itp.lambda_decompose(f, lam, p, p1=p1)
        cap = (2 ** (d * p1 / p) + 1) * lam ** (p1 - p) * fn.lp_norm(f, p) ** p
        assert out.bound_b <= cap * (1 + 1e-12)


# ---------------------------------------------------------------------------
# K-functional curves
# ---------------------------------------------------------------------------

def test_k_upper_envelope_for_scaled_atom():
    rng = np.random.default_rng(6)
    t_topo = fn.uniform_topology(DOMAIN, 3)
    a, R = random_atom(t_topo, rng, math.inf)
    f = a * (3.0 * geo.rho_measure(R))
    t_grid = np.logspace(-2, 2, 9)
    rep = itp.k_functional_upper(f, t_grid, 2.0, 4.0, lambda_grid_size=24)
    h1 = dec.h1_upper_bound(f, 2.0)
    p1_norm = fn.lp_norm(f, 4.0)
    for t, k in zip(rep.t_grid, rep.k_upper):
        assert k <= min(h1, t * p1_norm) * (1 + 1e-12)


def test_k_upper_shape_properties():
    rng = np.random.default_rng(7)
    f = _bounded_function(rng)
    t_grid = np.logspace(-2, 2, 13)
    rep = itp.k_functional_upper(f, t_grid, 2.0, math.inf, lambda_grid_size=32)
    k = np.asarray(rep.k_upper)
    t = np.asarray(rep.t_grid)
    assert np.all(np.diff(k) >= -1e-12)
    slopes = np.diff(k) / np.diff(t)
    assert np.all(np.diff(slopes) <= 1e-9 * max(1.0, np.abs(slopes).max()))
    assert np.all(k <= t * fn.lp_norm(f, math.inf) * (1 + 1e-12))


def test_k_upper_mid_grid_slope():
    # the theta-slope regime needs a function with scales: the critical
    # chain profile keeps intermediate splittings optimal across the grid
    rng = np.random.default_rng(8)
    p, p1 = 2.0, 4.0
    theta = itp.theta_of(p, p1)
    f = geometric_spike_function(DOMAIN, rng, p=p, depth=16, root_index=9)
    t_grid = np.logspace(-1, 3.5, 19)
    rep = itp.k_functional_upper(f, t_grid, p, p1, lambda_grid_size=48)
    logk = np.log(rep.k_upper)
    logt = np.log(rep.t_grid)
    lo, hi = len(logt) // 3, 2 * len(logt) // 3
    slope = np.polyfit(logt[lo:hi + 1], logk[lo:hi + 1], 1)[0]
    assert slope <= theta + 0.05


def test_c_fit_uniform_across_functions():
    rng = np.random.default_rng(9)
    p, p1 = 2.0, 4.0
    t_grid = np.logspace(-1, 3, 9)
    fits = []
    for _ in range(20):
        f = geometric_spike_function(DOMAIN, rng, p=p,
                                     depth=int(rng.integers(10, 17)))
        rep = itp.k_functional_upper(f, t_grid, p, p1, lambda_grid_size=24)
        fits.append(rep.c_fit)
    assert max(fits) / min(fits) < 10.0


def test_k_upper_bounded_normalized_curve():
    # membership indicator: t^-theta K(t) stays bounded along the grid
    rng = np.random.default_rng(10)
    f = _bounded_function(rng)
    t_grid = np.logspace(-2, 2, 9)
    rep = itp.k_functional_upper(f, t_grid, 2.0, 4.0, lambda_grid_size=24)
    curve = np.asarray(rep.k_upper) / (np.asarray(rep.t_grid) ** rep.theta
                                       * rep.f_norm_p)
    assert np.max(curve) == pytest.approx(rep.c_fit, rel=1e-12)
    assert np.max(curve) < 50.0


def test_empty_grid_rejected():
    rng = np.random.default_rng(11)
    f = _bounded_function(rng)
    with pytest.raises(EmptyGrid):
        itp.k_functional_upper(f, [], 2.0, 4.0)
    with pytest.raises(EmptyGrid):
        itp.k_functional_upper(f, [1.0], 2.0, 4.0, lambda_grid_size=0)
