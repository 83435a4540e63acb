"""Geometry of the group S = R^d x R^+ with product (x,a)(x',a') = (x+ax', aa').

The module provides the group operations, the hyperbolic upper-half-space
metric, the right and left Haar measures, and the admissible box family
(a dyadic cube times an exponential height interval) together with its
split and dilation machinery.

Vertical intervals are kept in logarithmic coordinates throughout: the box
Q x [a e^-r, a e^r] is stored as (log_a, r).  Admissibility tests compare
logs, so extremely elongated boxes never overflow, and both split
strategies halve exact quantities (r or the cube side), which keeps the
measures of children exact binary fractions of the parent's.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContainmentViolation, NoAdmissibleSplit

LN2 = math.log(2.0)

#: Default Calderon-Zygmund constant; a configuration value, validated by the
#: property tests rather than derived.  Large enough for the dilation bound
#: rho(R*) <= kappa0 rho(R) on the whole admissible family at d <= 3.
DEFAULT_KAPPA0 = 10.0


# ---------------------------------------------------------------------------
# points and group structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupPoint:
    """A point (x, a) of the group, x in R^d and a > 0."""

    x: tuple[float, ...]
    a: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("vertical coordinate must be positive")
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))

    @property
    def dimension(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array(self.x + (self.a,), dtype=float)


def identity(dimension: int) -> GroupPoint:
    return GroupPoint((0.0,) * dimension, 1.0)


def group_mul(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    """(x, a) (x', a') = (x + a x', a a')."""
    if p.dimension != q.dimension:
        raise ValueError("dimension mismatch")
    x = tuple(px + p.a * qx for px, qx in zip(p.x, q.x))
    return GroupPoint(x, p.a * q.a)


def group_inv(p: GroupPoint) -> GroupPoint:
    return GroupPoint(tuple(-px / p.a for px in p.x), 1.0 / p.a)


def _arccosh1p(u):
    # arccosh(1 + u) for u >= 0, accurate near u = 0
    u = np.maximum(u, 0.0)
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def metric_distance(p: GroupPoint, q: GroupPoint) -> float:
    """Hyperbolic distance of the upper half-space model.

    cosh d = 1 + (|x - x'|^2 + (a - a')^2) / (2 a a'); this is the distance
    of the left-invariant metric a^-2 (dx^2 + da^2).
    """
    dx2 = sum((px - qx) ** 2 for px, qx in zip(p.x, q.x))
    u = (dx2 + (p.a - q.a) ** 2) / (2.0 * p.a * q.a)
    return float(_arccosh1p(u))


def pairwise_distance(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Distance matrix between point arrays of shape (n, d+1) and (m, d+1).

    The last column is the vertical coordinate.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    dx2 = ((xs[:, None, :-1] - ys[None, :, :-1]) ** 2).sum(axis=2)
    da = xs[:, None, -1] - ys[None, :, -1]
    u = (dx2 + da * da) / (2.0 * xs[:, None, -1] * ys[None, :, -1])
    return _arccosh1p(u)


# ---------------------------------------------------------------------------
# dyadic cubes and admissible sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicCube:
    """Half-open dyadic cube prod_i [k_i 2^j, (k_i+1) 2^j) with side 2^j."""

    scale: int
    corner: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(int(k) for k in self.corner))

    @property
    def dimension(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> float:
        return 2.0 ** self.scale

    def lower(self) -> np.ndarray:
        return np.array(self.corner, dtype=float) * self.side

    def upper(self) -> np.ndarray:
        return (np.array(self.corner, dtype=float) + 1.0) * self.side

    def center(self) -> np.ndarray:
        return (np.array(self.corner, dtype=float) + 0.5) * self.side

    def children(self) -> list["DyadicCube"]:
        """The 2^d dyadic children at scale - 1."""
        out = []
        for delta in itertools.product((0, 1), repeat=self.dimension):
            out.append(DyadicCube(self.scale - 1,
                                  tuple(2 * k + e for k, e in zip(self.corner, delta))))
        return out

    def contains_point(self, x) -> bool:
        lo, hi = self.lower(), self.upper()
        x = np.asarray(x, dtype=float)
        return bool(np.all(lo <= x) and np.all(x < hi))

    def contains_cube(self, other: "DyadicCube") -> bool:
        if other.scale > self.scale:
            return False
        shift = self.scale - other.scale
        return all(ok >= k << shift and ok + 1 <= (k + 1) << shift
                   for k, ok in zip(self.corner, other.corner))


@dataclass(frozen=True)
class CZSet:
    """Admissible box Q x [a e^-r, a e^r]; the vertical part stored in logs."""

    cube: DyadicCube
    log_a: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("half log length r must be positive")

    @property
    def dimension(self) -> int:
        return self.cube.dimension

    @property
    def a_center(self) -> float:
        return math.exp(self.log_a)

    @property
    def log_lo(self) -> float:
        return self.log_a - self.r

    @property
    def log_hi(self) -> float:
        return self.log_a + self.r

    @property
    def a_lo(self) -> float:
        return math.exp(self.log_lo)

    @property
    def a_hi(self) -> float:
        return math.exp(self.log_hi)

    def contains_point(self, p: GroupPoint) -> bool:
        # half-open on top in log coordinates, matching the cube convention
        u = math.log(p.a)
        return self.cube.contains_point(p.x) and self.log_lo <= u < self.log_hi

    def corners(self) -> list[GroupPoint]:
        pts = []
        lo, hi = self.cube.lower(), self.cube.upper()
        for delta in itertools.product((0, 1), repeat=self.dimension):
            x = tuple(hi[i] if e else lo[i] for i, e in enumerate(delta))
            for aa in (self.a_lo, self.a_hi):
                pts.append(GroupPoint(x, aa))
        return pts

    def key(self):
        return (self.cube.scale, self.cube.corner, self.log_a, self.r)


def _admissible_log_window(log_a: float, r: float) -> tuple[float, float]:
    # window for ln L; the two branches of the defining inequality
    if r < 1.0:
        base = log_a + math.log(r)
        return base + 2.0, base + 8.0
    return log_a + 2.0 * r, log_a + 8.0 * r


def is_admissible(cube: DyadicCube, a: float, r: float) -> bool:
    """Branch inequality on the side length; lower bound closed, upper open."""
    if a <= 0 or r <= 0:
        raise ValueError("a and r must be positive")
    lo, hi = _admissible_log_window(math.log(a), r)
    ln_side = cube.scale * LN2
    return lo <= ln_side < hi


def czset_is_admissible(R: CZSet) -> bool:
    lo, hi = _admissible_log_window(R.log_a, R.r)
    ln_side = R.cube.scale * LN2
    return lo <= ln_side < hi


def rho_measure(R: CZSet) -> float:
    """Right-measure of the box: side^d * (length of the log interval)."""
    return R.cube.side ** R.dimension * (2.0 * R.r)


def lambda_measure(R: CZSet) -> float:
    """Left-measure of the box, from the antiderivative of a^-(d+1)."""
    d = R.dimension
    return R.cube.side ** d * (R.a_lo ** (-d) - R.a_hi ** (-d)) / d


def split(R: CZSet) -> list[CZSet]:
    """Partition R into equal-measure admissible children.

    Strategy A halves the log interval (two children, same cube); if either
    child fails admissibility, strategy B halves the cube (2^d children,
    same interval).  The scan in the tests shows the pair always covers the
    admissible family, but NoAdmissibleSplit is kept as a detectable error.
    """
    half = R.r / 2.0
    kids_a = [CZSet(R.cube, R.log_a - half, half),
              CZSet(R.cube, R.log_a + half, half)]
    if all(czset_is_admissible(k) for k in kids_a):
        return kids_a
    kids_b = [CZSet(c, R.log_a, R.r) for c in R.cube.children()]
    if all(czset_is_admissible(k) for k in kids_b):
        return kids_b
    raise NoAdmissibleSplit(f"no admissible split for {R}")


# ---------------------------------------------------------------------------
# enclosing balls and dilated sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: GroupPoint
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")


def r_scale(R: CZSet) -> float:
    """Radius scale r_R of the set, used for the dilation R*.

    Taking r_R = r keeps rho(R*) within a small multiple of rho(R)
    uniformly over the admissible family, which is what the dilation
    property requires.
    """
    return R.r


def center_point(R: CZSet) -> GroupPoint:
    return GroupPoint(tuple(R.cube.center()), R.a_center)


def circumradius(R: CZSet) -> float:
    """Exact max distance from the center to the set.

    The distance grows with the horizontal offset componentwise and, for a
    fixed horizontal offset, is maximal at one of the two interval ends, so
    the corners are exact extremizers.
    """
    c = center_point(R)
    return max(metric_distance(c, q) for q in R.corners())


def enclosing_ball(R: CZSet, kappa0: float = DEFAULT_KAPPA0) -> Ball:
    """Ball(center x_R, radius r_R) with containment R within B(x_R, kappa0 r_R).

    Containment is verified at the corners (the exact extremizers).  Failure
    raises ContainmentViolation: the configured kappa0 is too small for R.
    """
    rad = circumradius(R)
    rr = r_scale(R)
    if rad > kappa0 * rr:
        raise ContainmentViolation(
            f"corner at distance {rad:.6g} exceeds kappa0*r_R = {kappa0 * rr:.6g}")
    return Ball(center_point(R), rr)


def dist_to_set(p: GroupPoint, R: CZSet) -> float:
    """Exact distance from a point to the box.

    For each height s the nearest cube point is the componentwise clamp of
    x, independent of s; the remaining one-variable function of s has a
    single interior minimum at sqrt(|dx|^2 + h^2), so clamping s to the
    interval finishes the minimization.
    """
    x = np.array(p.x, dtype=float)
    q = np.clip(x, R.cube.lower(), R.cube.upper())
    c2 = float(((x - q) ** 2).sum())
    h = p.a
    s = min(max(math.sqrt(c2 + h * h), R.a_lo), R.a_hi)
    u = (c2 + (h - s) ** 2) / (2.0 * h * s)
    return float(_arccosh1p(u))


def dist_to_set_points(points: np.ndarray, R: CZSet) -> np.ndarray:
    """Vectorized dist_to_set; points of shape (n, d+1), last column height."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x = pts[:, :-1]
    h = pts[:, -1]
    q = np.clip(x, R.cube.lower(), R.cube.upper())
    c2 = ((x - q) ** 2).sum(axis=1)
    s = np.clip(np.sqrt(c2 + h * h), R.a_lo, R.a_hi)
    u = (c2 + (h - s) ** 2) / (2.0 * h * s)
    return _arccosh1p(u)


def dilated_contains(R: CZSet, p: GroupPoint, tol: float = 1e-3) -> bool:
    """Whether p lies in the dilated set R* = {x : d(x, R) < r_R}.

    The distance is evaluated in closed form, so the tolerance only guards
    the strict inequality at the boundary.
    """
    del tol  # kept for interface stability; evaluation is exact
    return dist_to_set(p, R) < r_scale(R)


def dilation_bounding_box(R: CZSet) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Box certainly containing R*: (x_lo, x_hi, log_lo, log_hi).

    Within distance r_R of the box, |dx|^2 < 2 h s (cosh r_R - 1) with
    h <= a e^{r+r_R} and s <= a e^r.
    """
    rr = r_scale(R)
    hmax = math.exp(R.log_hi + rr)
    smax = R.a_hi
    eps = math.sqrt(2.0 * hmax * smax * (math.cosh(rr) - 1.0))
    return (R.cube.lower() - eps, R.cube.upper() + eps,
            R.log_lo - rr, R.log_hi + rr)


def mc_dilated_measure(R: CZSet, n_samples: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of rho(R*), sampled uniformly in (x, log a)."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    xlo, xhi, ulo, uhi = dilation_bounding_box(R)
    d = R.dimension
    xs = rng.uniform(xlo, xhi, size=(n_samples, d))
    us = rng.uniform(ulo, uhi, size=n_samples)
    pts = np.column_stack([xs, np.exp(us)])
    inside = dist_to_set_points(pts, R) < r_scale(R)
    vol = float(np.prod(xhi - xlo)) * (uhi - ulo)
    return vol * float(np.count_nonzero(inside)) / n_samples


def sample_in_set(R: CZSet, n: int, rng: np.random.Generator) -> np.ndarray:
    """n rho-uniform samples in R, as an (n, d+1) array."""
    xs = rng.uniform(R.cube.lower(), R.cube.upper(), size=(n, R.dimension))
    us = rng.uniform(R.log_lo, R.log_hi, size=n)
    return np.column_stack([xs, np.exp(us)])


# ---------------------------------------------------------------------------
# ball growth
# ---------------------------------------------------------------------------

def ball_growth(radius: float, n_samples: int, dimension: int = 1,
                rng: np.random.Generator | None = None,
                measure: str = "rho") -> float:
    """Monte Carlo estimate of the measure of B(e, radius).

    The ball lies in |x_i| < sinh(radius), |log a| < radius; sampling is
    uniform in (x, log a), which is the rho density, and the left measure
    adds the weight a^-d.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng() if rng is None else rng
    xmax = math.sinh(radius)
    xs = rng.uniform(-xmax, xmax, size=(n_samples, dimension))
    us = rng.uniform(-radius, radius, size=n_samples)
    a = np.exp(us)
    dx2 = (xs ** 2).sum(axis=1)
    u = (dx2 + (a - 1.0) ** 2) / (2.0 * a)
    inside = _arccosh1p(u) < radius
    vol = (2.0 * xmax) ** dimension * (2.0 * radius)
    if measure == "rho":
        w = inside.astype(float)
    elif measure == "lambda":
        w = inside * a ** (-dimension)
    else:
        raise ValueError("measure must be 'rho' or 'lambda'")
    return vol * float(w.mean())
