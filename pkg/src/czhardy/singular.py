"""Kernel operators, the integral smoothness condition, and atom-image bounds.

Operators are discretized on the leaf partition: Tf(x) is evaluated at leaf
centroids by the quadrature sum_j K(x, y_j) f(y_j) rho(leaf_j).  The
smoothness functional integrates |K(x,y) - K(x,z)| over the leaves outside
the dilated set R*, with y, z sampled on a corner-plus-grid pattern in R;
both integrals are truncated to the computation domain, and reports say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decomposition import validate_atom
from .errors import AtomInvalid, NonFiniteKernelValue
from .functions import PartitionFunction, Topology, lp_norm, rho_measure
from .geometry import (DEFAULT_KAPPA0, CZSet, GroupPoint, dist_to_set_points,
                       pairwise_distance, r_scale)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel K(x, y) with optional vectorized matrix evaluation.

    evaluate takes two GroupPoints; matrix, when provided, takes (n, d+1)
    and (m, d+1) point arrays and returns the (n, m) kernel matrix.
    adjoint_flag selects the transposed-variable form of the smoothness
    functional; singular_diagonal skips quadrature cells on the diagonal.
    """

    name: str
    evaluate: Callable[[GroupPoint, GroupPoint], float]
    matrix: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    adjoint_flag: bool = False
    singular_diagonal: bool = False

    def matrix_eval(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            out = np.asarray(self.matrix(xs, ys), dtype=float)
        else:
            d = xs.shape[1] - 1
            out = np.array([[self.evaluate(GroupPoint(tuple(x[:d]), x[d]),
                                           GroupPoint(tuple(y[:d]), y[d]))
                             for y in ys] for x in xs], dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteKernelValue(f"kernel {self.name} produced non-finite values")
        return out

    def transposed(self) -> "KernelSpec":
        ev = self.evaluate
        mat = self.matrix
        return KernelSpec(
            name=self.name + "^T",
            evaluate=lambda x, y: ev(y, x),
            matrix=(None if mat is None else (lambda xs, ys: mat(ys, xs).T)),
            adjoint_flag=self.adjoint_flag,
            singular_diagonal=self.singular_diagonal)


# ---------------------------------------------------------------------------
# built-in kernel library
# ---------------------------------------------------------------------------

def _points(xs):
    return np.atleast_2d(np.asarray(xs, dtype=float))


def zero_kernel() -> KernelSpec:
    return KernelSpec("zero", lambda x, y: 0.0,
                      matrix=lambda xs, ys: np.zeros((_points(xs).shape[0],
                                                      _points(ys).shape[0])))


def constant_kernel(c: float = 1.0) -> KernelSpec:
    return KernelSpec("constant", lambda x, y: c,
                      matrix=lambda xs, ys: np.full((_points(xs).shape[0],
                                                     _points(ys).shape[0]), c))


def radial_bump_kernel(support: float, amplitude: float = 1.0) -> KernelSpec:
    """K(x,y) = amplitude * (1 - (d(x,y)/support)^2)^2 inside the support.

    Radial in the distance, hence symmetric; vanishes when d(x,y) >= support,
    which is what makes the smoothness functional exactly zero on sets whose
    dilation radius exceeds the support.
    """
    if support <= 0:
        raise ValueError("support must be positive")

    def phi(dist):
        u = np.clip(dist / support, 0.0, 1.0)
        return amplitude * (1.0 - u * u) ** 2 * (dist < support)

    def matrix(xs, ys):
        return phi(pairwise_distance(_points(xs), _points(ys)))

    def evaluate(x: GroupPoint, y: GroupPoint) -> float:
        return float(matrix(x.as_array()[None, :], y.as_array()[None, :])[0, 0])

    return KernelSpec("radial_bump", evaluate, matrix=matrix)


def jump_kernel(threshold: float, psi_center: GroupPoint, psi_support: float,
                amplitude: float = 1.0) -> KernelSpec:
    """K(x, y) = sign(y_1 - threshold) * bump(d(x, center)).

    Discontinuous in y across the hyperplane y_1 = threshold, so kernel
    differences over a straddling set do not cancel.
    """
    c = psi_center.as_array()

    def matrix(xs, ys):
        xs, ys = _points(xs), _points(ys)
        dist = pairwise_distance(xs, c[None, :])[:, 0]
        u = np.clip(dist / psi_support, 0.0, 1.0)
        psi = amplitude * (1.0 - u * u) ** 2 * (dist < psi_support)
        sign = np.sign(ys[:, 0] - threshold)
        sign[sign == 0.0] = 1.0
        return psi[:, None] * sign[None, :]

    def evaluate(x: GroupPoint, y: GroupPoint) -> float:
        return float(matrix(x.as_array()[None, :], y.as_array()[None, :])[0, 0])

    return KernelSpec("jump", evaluate, matrix=matrix)


KERNEL_BUILDERS: dict[str, Callable[..., KernelSpec]] = {
    "zero": zero_kernel,
    "constant": constant_kernel,
    "radial_bump": radial_bump_kernel,
    "jump": jump_kernel,
}


def make_kernel(name: str, **params) -> KernelSpec:
    if name not in KERNEL_BUILDERS:
        raise ValueError(f"unknown kernel '{name}'; known: {sorted(KERNEL_BUILDERS)}")
    return KERNEL_BUILDERS[name](**params)


# ---------------------------------------------------------------------------
# discretized operator
# ---------------------------------------------------------------------------

def kernel_matrix(K: KernelSpec, topology: Topology) -> np.ndarray:
    """K at leaf centroid pairs, diagonal zeroed for singular kernels."""
    pts = topology.leaf_centroid
    mat = K.matrix_eval(pts, pts)
    if K.singular_diagonal:
        np.fill_diagonal(mat, 0.0)
    return mat


def apply_kernel(K: KernelSpec, f: PartitionFunction) -> PartitionFunction:
    """Quadrature image Tf at leaf centroids, as a function on the same tree."""
    topo = f.topology
    mat = kernel_matrix(K, topo)
    out = mat @ (f.values * topo.leaf_measure)
    return f.with_values(out)


def operator_l2_norm(K: KernelSpec, topology: Topology, iterations: int = 50,
                     seed: int = 0) -> float:
    """Power iteration for the L2(rho) -> L2(rho) norm of the discretization."""
    mat = kernel_matrix(K, topology)
    w = np.sqrt(topology.leaf_measure)
    B = w[:, None] * mat * w[None, :]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        u = B @ v
        v = B.T @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
    # v now approximates the top right singular vector
    return float(np.linalg.norm(B @ v))


# ---------------------------------------------------------------------------
# integral smoothness condition
# ---------------------------------------------------------------------------

def sample_pattern(R: CZSet, grid_per_axis: int = 3) -> np.ndarray:
    """Corners plus an interior lattice of the box, as (n, d+1) points."""
    pts = [q.as_array() for q in R.corners()]
    m = grid_per_axis
    axes = []
    lo, hi = R.cube.lower(), R.cube.upper()
    for i in range(R.dimension):
        axes.append(lo[i] + (np.arange(m) + 0.5) * (hi[i] - lo[i]) / m)
    axes.append(R.log_lo + (np.arange(m) + 0.5) * (2.0 * R.r) / m)
    grids = np.meshgrid(*axes, indexing="ij")
    lattice = np.column_stack([g.ravel() for g in grids])
    lattice[:, -1] = np.exp(lattice[:, -1])
    return np.vstack([np.array(pts), lattice])


@dataclass(frozen=True)
class HormanderReport:
    per_set: tuple[tuple[CZSet, float], ...]
    overall_sup: float
    truncation_note: str
    adjoint: bool


def hormander_sup(K: KernelSpec, family, quadrature: Topology,
                  samples_per_set: int = 3) -> HormanderReport:
    """sup over sampled y,z in R of the integral of |K(.,y) - K(.,z)| over
    the domain leaves outside R*.

    The sampled supremum is a lower bound of the true one; the outer
    integral is truncated to the computation domain.
    """
    kernel = K.transposed() if K.adjoint_flag else K
    centroids = quadrature.leaf_centroid
    mu = quadrature.leaf_measure
    per_set = []
    for R in family:
        outside = dist_to_set_points(centroids, R) >= r_scale(R)
        ys = sample_pattern(R, samples_per_set)
        cols = kernel.matrix_eval(centroids[outside], ys)
        w = mu[outside]
        best = 0.0
        for i in range(ys.shape[0]):
            diffs = np.abs(cols[:, i:i + 1] - cols[:, i + 1:])
            if diffs.size:
                best = max(best, float((diffs * w[:, None]).sum(axis=0).max()))
        per_set.append((R, best))
    overall = max((v for _, v in per_set), default=0.0)
    note = ("outer integral truncated to the computation domain; "
            "tails outside the box are not certified")
    return HormanderReport(tuple(per_set), overall, note, K.adjoint_flag)


# ---------------------------------------------------------------------------
# atom images
# ---------------------------------------------------------------------------

def atom_image_l1(K: KernelSpec, a: PartitionFunction, R: CZSet,
                  op_norm_l2: float, hormander_bound: float) -> float:
    """||Ta||_1 by quadrature; the certified pieces live in atom_image_report."""
    return atom_image_report(K, a, R, op_norm_l2, hormander_bound)["l1"]


def atom_image_report(K: KernelSpec, a: PartitionFunction, R: CZSet,
                      op_norm_l2: float, hormander_bound: float,
                      kappa0: float = DEFAULT_KAPPA0) -> dict:
    """Two-piece control of ||Ta||_1 for a (1,2)-atom on R.

    Inside R* the Cauchy-Schwarz piece is kappa0^(1/2) * |||T|||_2 (the atom
    has ||a||_2 rho(R)^(1/2) <= 1); outside, the zero mean of the atom turns
    Ta into an integral of kernel differences against a, bounded by
    ||a||_1 * hormander_bound.  The report carries both pieces and the
    difference-form cross-check of the outside integral.
    """
    cert = validate_atom(a, 2.0, R)
    if not cert.valid:
        raise AtomInvalid("atom_image_l1 requires a valid (1,2)-atom")
    topo = a.topology
    ta = apply_kernel(K, a)
    mu = topo.leaf_measure
    inside = dist_to_set_points(topo.leaf_centroid, R) < r_scale(R)

    l1_in = float(np.dot(np.abs(ta.values[inside]), mu[inside]))
    l1_out = float(np.dot(np.abs(ta.values[~inside]), mu[~inside]))

    # difference form of the outside piece: subtract K(., x_R) against the
    # zero-mean atom; identical up to rounding
    center = R.cube.center()
    x_R = np.concatenate([center, [R.a_center]])
    mat = kernel_matrix(K, topo)
    col = K.matrix_eval(topo.leaf_centroid, x_R[None, :])[:, 0]
    diff_vals = (mat - col[:, None]) @ (a.values * mu)
    l1_out_diff = float(np.dot(np.abs(diff_vals[~inside]), mu[~inside]))

    piece_inside = math.sqrt(kappa0) * op_norm_l2
    piece_outside = lp_norm(a, 1.0) * hormander_bound
    return {
        "l1": l1_in + l1_out,
        "l1_inside": l1_in,
        "l1_outside": l1_out,
        "l1_outside_difference_form": l1_out_diff,
        "bound_inside": piece_inside,
        "bound_outside": piece_outside,
        "bound_total": piece_inside + piece_outside,
    }
