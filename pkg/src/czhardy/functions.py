"""Piecewise-constant functions on refinement trees of admissible boxes.

A ComputationDomain fixes a finite box Q0 x [e^-N, e^N) partitioned into
admissible root sets.  A Topology is a refinement tree grown from those
roots by the deterministic split of the geometry module; a
PartitionFunction attaches one value per leaf.  Averages, L^p norms and
integrals against rho are then exact sums, which is what lets the
decomposition and oscillation machinery assert paper-style constants at
1e-10 .. 1e-12 tolerances instead of quadrature tolerances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, RegionNotResolved
from .geometry import (LN2, CZSet, DyadicCube, GroupPoint, czset_is_admissible,
                       is_admissible, rho_measure, split)


# ---------------------------------------------------------------------------
# computation domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComputationDomain:
    """Finite box [0, 2^J)^d x [e^-N, e^N) tiled by admissible root sets."""

    dimension: int
    cube_exponent: int
    vertical_exponent: int
    slab_half_log: float
    roots: tuple[CZSet, ...]

    @staticmethod
    def standard(dimension: int = 1, cube_exponent: int = 8,
                 vertical_exponent: int = 4,
                 slab_half_log: float = 0.5) -> "ComputationDomain":
        """Stack horizontal slabs of log-height 2*slab_half_log; within each
        slab use the largest admissible dyadic side not exceeding the domain
        cube."""
        if dimension < 1:
            raise ConfigInvalid("dimension must be >= 1")
        n = vertical_exponent
        m = max(1, round(n / slab_half_log))
        r = n / m
        roots: list[CZSet] = []
        for i in range(m):
            log_a = -n + (2 * i + 1) * r
            lo, hi = _window(log_a, r)
            j = min(cube_exponent, math.ceil(hi / LN2) - 1)
            if j * LN2 < lo:
                raise ConfigInvalid(
                    f"no admissible dyadic side <= 2^{cube_exponent} for slab {i}")
            n_per_axis = 2 ** (cube_exponent - j)
            for corner in np.ndindex(*([n_per_axis] * dimension)):
                cube = DyadicCube(j, tuple(int(c) for c in corner))
                root = CZSet(cube, log_a, r)
                assert czset_is_admissible(root)
                roots.append(root)
        return ComputationDomain(dimension, cube_exponent, vertical_exponent,
                                 slab_half_log, tuple(roots))

    @property
    def total_rho(self) -> float:
        return (2.0 ** self.cube_exponent) ** self.dimension * 2.0 * self.vertical_exponent

    def box(self):
        side = 2.0 ** self.cube_exponent
        n = self.vertical_exponent
        return (np.zeros(self.dimension), np.full(self.dimension, side),
                float(-n), float(n))

    def spec_dict(self) -> dict:
        return {"dimension": self.dimension,
                "cube_exponent": self.cube_exponent,
                "vertical_exponent": self.vertical_exponent,
                "slab_half_log": self.slab_half_log}

    @staticmethod
    def from_spec(spec: dict) -> "ComputationDomain":
        return ComputationDomain.standard(**spec)


def _window(log_a, r):
    if r < 1.0:
        base = log_a + math.log(r)
        return base + 2.0, base + 8.0
    return log_a + 2.0 * r, log_a + 8.0 * r


# ---------------------------------------------------------------------------
# topology: the shared refinement tree
# ---------------------------------------------------------------------------

class Topology:
    """Refinement tree skeleton shared by many PartitionFunctions.

    Nodes are stored in depth-first order; the leaves under any node form a
    contiguous slice, so node aggregates reduce to prefix sums over leaf
    arrays.  Instances are immutable by convention.
    """

    def __init__(self, domain: ComputationDomain, regions, children, root_ids):
        self.domain = domain
        self.regions = tuple(regions)
        self.children = tuple(tuple(c) for c in children)
        self.root_ids = tuple(root_ids)

        n = len(self.regions)
        span = np.zeros((n, 2), dtype=np.int64)
        leaf_nodes: list[int] = []

        def _assign(idx: int) -> None:
            start = len(leaf_nodes)
            if not self.children[idx]:
                leaf_nodes.append(idx)
            else:
                for c in self.children[idx]:
                    _assign(c)
            span[idx, 0] = start
            span[idx, 1] = len(leaf_nodes)

        for rid in self.root_ids:
            _assign(rid)
        self.leaf_nodes = np.array(leaf_nodes, dtype=np.int64)
        self.span = span
        self.n_leaves = len(leaf_nodes)

        leaves = [self.regions[i] for i in leaf_nodes]
        d = domain.dimension
        self.leaf_measure = np.array([rho_measure(R) for R in leaves])
        self.leaf_cube_lo = np.array([R.cube.lower() for R in leaves]).reshape(-1, d)
        self.leaf_cube_hi = np.array([R.cube.upper() for R in leaves]).reshape(-1, d)
        self.leaf_log_lo = np.array([R.log_lo for R in leaves])
        self.leaf_log_hi = np.array([R.log_hi for R in leaves])
        centers = 0.5 * (self.leaf_cube_lo + self.leaf_cube_hi)
        self.leaf_centroid = np.column_stack(
            [centers, np.exp(0.5 * (self.leaf_log_lo + self.leaf_log_hi))])
        self._measure_cum = np.concatenate([[0.0], np.cumsum(self.leaf_measure)])
        self._index = {R.key(): i for i, R in enumerate(self.regions)}

    # -- lookups ------------------------------------------------------------

    def node_of(self, R: CZSet):
        return self._index.get(R.key())

    def is_leaf(self, idx: int) -> bool:
        return not self.children[idx]

    def node_measure(self, idx: int) -> float:
        lo, hi = self.span[idx]
        return float(self._measure_cum[hi] - self._measure_cum[lo])

    def leaf_slice(self, idx: int) -> slice:
        lo, hi = self.span[idx]
        return slice(int(lo), int(hi))

    def node_sums(self, leaf_weights: np.ndarray) -> np.ndarray:
        """Prefix-sum table; node aggregate = table[hi] - table[lo]."""
        return np.concatenate([[0.0], np.cumsum(leaf_weights)])

    def iter_nodes(self):
        return range(len(self.regions))

    def leaf_regions(self):
        return [self.regions[i] for i in self.leaf_nodes]

    def depth_of(self, idx: int) -> int:
        # derivable from r relative to the root slab; cheap helper for tests
        root_r = self.domain.roots[0].r
        return max(0, round(math.log2(root_r / self.regions[idx].r)))

    # -- refinement ---------------------------------------------------------

    def refine_node(self, R: CZSet) -> "Topology":
        idx = self.node_of(R)
        if idx is None or not self.is_leaf(idx):
            raise RegionNotResolved(f"{R} is not a current leaf")
        regions = list(self.regions)
        children = [list(c) for c in self.children]
        new_kids = []
        for k in split(R):
            regions.append(k)
            children.append([])
            new_kids.append(len(regions) - 1)
        children[idx] = new_kids
        return Topology(self.domain, regions, children, self.root_ids)

    def structure(self):
        """Nested lists mirroring the tree; a leaf is None."""
        def rec(idx):
            if not self.children[idx]:
                return None
            return [rec(c) for c in self.children[idx]]
        return [rec(r) for r in self.root_ids]


def build_topology(domain: ComputationDomain, splitter=None) -> Topology:
    """Grow a topology from the domain roots.

    splitter(region, depth) -> bool decides whether to refine further;
    None builds the root partition itself.
    """
    regions: list[CZSet] = []
    children: list[list[int]] = []

    def grow(region: CZSet, depth: int) -> int:
        idx = len(regions)
        regions.append(region)
        children.append([])
        if splitter is not None and splitter(region, depth):
            children[idx] = [grow(k, depth + 1) for k in split(region)]
        return idx

    roots = [grow(R, 0) for R in domain.roots]
    return Topology(domain, regions, children, roots)


def uniform_topology(domain: ComputationDomain, depth: int) -> Topology:
    return build_topology(domain, lambda region, dep: dep < depth)


def topology_from_structure(domain: ComputationDomain, structure) -> Topology:
    regions: list[CZSet] = []
    children: list[list[int]] = []

    def grow(region: CZSet, node) -> int:
        idx = len(regions)
        regions.append(region)
        children.append([])
        if node is not None:
            kids = split(region)
            if len(kids) != len(node):
                raise ConfigInvalid("structure does not match deterministic split")
            children[idx] = [grow(k, sub) for k, sub in zip(kids, node)]
        return idx

    if len(structure) != len(domain.roots):
        raise ConfigInvalid("structure root count mismatch")
    roots = [grow(R, node) for R, node in zip(domain.roots, structure)]
    return Topology(domain, regions, children, roots)


# ---------------------------------------------------------------------------
# partition functions
# ---------------------------------------------------------------------------

class PartitionFunction:
    """One real value per leaf of a Topology."""

    __slots__ = ("topology", "values")

    def __init__(self, topology: Topology, values):
        values = np.array(values, dtype=float)
        if values.shape != (topology.n_leaves,):
            raise ValueError("values must have one entry per leaf")
        values.setflags(write=False)
        self.topology = topology
        self.values = values

    def with_values(self, values) -> "PartitionFunction":
        return PartitionFunction(self.topology, values)

    @staticmethod
    def constant(topology: Topology, c: float) -> "PartitionFunction":
        return PartitionFunction(topology, np.full(topology.n_leaves, float(c)))

    @staticmethod
    def indicator(topology: Topology, R: CZSet) -> "PartitionFunction":
        idx = topology.node_of(R)
        vals = np.zeros(topology.n_leaves)
        if idx is None:
            raise RegionNotResolved(f"{R} is not a tree node")
        vals[topology.leaf_slice(idx)] = 1.0
        return PartitionFunction(topology, vals)

    # arithmetic helpers; topologies must be identical objects
    def _check(self, other):
        if self.topology is not other.topology:
            raise ValueError("operands live on different topologies")

    def __add__(self, other):
        self._check(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def integrate_rho(f: PartitionFunction) -> float:
    """Exact rho integral: sum of value * measure over leaves."""
    return float(np.dot(f.values, f.topology.leaf_measure))


def lp_norm(f: PartitionFunction, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    return float(np.dot(np.abs(f.values) ** p, f.topology.leaf_measure) ** (1.0 / p))


def _overlap_measures(topology: Topology, R: CZSet) -> np.ndarray:
    """rho(leaf intersect R) per leaf; exact because both are boxes."""
    lo = np.maximum(topology.leaf_cube_lo, R.cube.lower())
    hi = np.minimum(topology.leaf_cube_hi, R.cube.upper())
    widths = np.clip(hi - lo, 0.0, None)
    ulo = np.maximum(topology.leaf_log_lo, R.log_lo)
    uhi = np.minimum(topology.leaf_log_hi, R.log_hi)
    return widths.prod(axis=1) * np.clip(uhi - ulo, 0.0, None)


def region_covered(topology: Topology, R: CZSet, rel_tol: float = 1e-9) -> np.ndarray:
    """Overlap measures, raising RegionNotResolved if R leaks out of the domain."""
    ov = _overlap_measures(topology, R)
    if ov.sum() < rho_measure(R) * (1.0 - rel_tol):
        raise RegionNotResolved(
            "region extends outside the computation domain")
    return ov


def average_on(f: PartitionFunction, R: CZSet) -> float:
    """Exact average of f over R.

    Fast path when R is a tree node; otherwise the box overlaps with the
    leaves are integrated exactly (f is constant on each leaf)."""
    topo = f.topology
    idx = topo.node_of(R)
    if idx is not None:
        sl = topo.leaf_slice(idx)
        mu = topo.leaf_measure[sl]
        return float(np.dot(f.values[sl], mu) / mu.sum())
    ov = region_covered(topo, R)
    total = ov.sum()
    return float(np.dot(f.values, ov) / total)


def integrate_on(f: PartitionFunction, R: CZSet) -> float:
    topo = f.topology
    idx = topo.node_of(R)
    if idx is not None:
        sl = topo.leaf_slice(idx)
        return float(np.dot(f.values[sl], topo.leaf_measure[sl]))
    ov = region_covered(topo, R)
    return float(np.dot(f.values, ov))


def restrict_to_node(f: PartitionFunction, R: CZSet) -> PartitionFunction:
    idx = f.topology.node_of(R)
    if idx is None:
        raise RegionNotResolved(f"{R} is not a tree node")
    vals = np.zeros_like(f.values)
    sl = f.topology.leaf_slice(idx)
    vals[sl] = f.values[sl]
    return f.with_values(vals)


# -- sampling and refinement -------------------------------------------------

def _cell_average(region: CZSet, sampler, samples_per_axis: int) -> float:
    """Midpoint-lattice average in (x, log a); the rho-uniform coordinates."""
    m = samples_per_axis
    d = region.dimension
    axes = []
    lo, hi = region.cube.lower(), region.cube.upper()
    for i in range(d):
        axes.append(lo[i] + (np.arange(m) + 0.5) * (hi[i] - lo[i]) / m)
    axes.append(region.log_lo + (np.arange(m) + 0.5) * (region.log_hi - region.log_lo) / m)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    pts[:, -1] = np.exp(pts[:, -1])
    return float(np.mean(sampler(pts)))


def project(domain_or_topology, sampler, samples_per_axis: int = 32,
            depth: int = 0) -> PartitionFunction:
    """Project a point-sampled function onto a topology by cell averages.

    sampler(points) receives an (n, d+1) array whose last column is the
    height a and returns n values.
    """
    topo = domain_or_topology
    if isinstance(topo, ComputationDomain):
        topo = uniform_topology(topo, depth)
    vals = np.array([_cell_average(R, sampler, samples_per_axis)
                     for R in topo.leaf_regions()])
    return PartitionFunction(topo, vals)


def refine(f: PartitionFunction, leaf: CZSet, sampler=None,
           samples_per_axis: int = 32) -> PartitionFunction:
    """Split one leaf; children take cell-averaged sampler values, or the
    parent's value when no sampler is given."""
    old = f.topology
    idx = old.node_of(leaf)
    if idx is None or not old.is_leaf(idx):
        raise RegionNotResolved(f"{leaf} is not a current leaf")
    parent_value = float(f.values[old.span[idx, 0]])
    new = old.refine_node(leaf)
    # map leaf keys to old values, then fill the new leaf list
    old_by_key = {old.regions[i].key(): f.values[k]
                  for k, i in enumerate(old.leaf_nodes)}
    vals = np.empty(new.n_leaves)
    for k, i in enumerate(new.leaf_nodes):
        key = new.regions[i].key()
        if key in old_by_key:
            vals[k] = old_by_key[key]
        elif sampler is None:
            vals[k] = parent_value
        else:
            vals[k] = _cell_average(new.regions[i], sampler, samples_per_axis)
    return PartitionFunction(new, vals)


# -- pairings ----------------------------------------------------------------

def product_integral(f: PartitionFunction, g: PartitionFunction) -> float:
    """Exact integral of f*g drho for functions on the same domain.

    Trees grown from the same roots by the deterministic split are nested
    node by node, so the walk descends into whichever tree is finer.
    """
    tf, tg = f.topology, g.topology
    if tf is tg:
        return float(np.dot(f.values * g.values, tf.leaf_measure))
    if tf.domain.roots != tg.domain.roots:
        raise ValueError("functions live on different domains")

    total = 0.0

    def walk(i: int, j: int) -> float:
        fi_leaf, gj_leaf = tf.is_leaf(i), tg.is_leaf(j)
        if fi_leaf and gj_leaf:
            k = tf.span[i, 0]
            return float(f.values[k]) * float(g.values[tg.span[j, 0]]) \
                * tf.node_measure(i)
        if fi_leaf:
            k = tf.span[i, 0]
            sl = tg.leaf_slice(j)
            return float(f.values[k]) * float(
                np.dot(g.values[sl], tg.leaf_measure[sl]))
        if gj_leaf:
            k = tg.span[j, 0]
            sl = tf.leaf_slice(i)
            return float(g.values[k]) * float(
                np.dot(f.values[sl], tf.leaf_measure[sl]))
        return sum(walk(ci, cj) for ci, cj in zip(tf.children[i], tg.children[j]))

    for ri, rj in zip(tf.root_ids, tg.root_ids):
        total += walk(ri, rj)
    return total


def value_at(f: PartitionFunction, p: GroupPoint) -> float:
    """Value of the leaf containing p (half-open convention)."""
    topo = f.topology
    for rid in topo.root_ids:
        if topo.regions[rid].contains_point(p):
            idx = rid
            while not topo.is_leaf(idx):
                for c in topo.children[idx]:
                    if topo.regions[c].contains_point(p):
                        idx = c
                        break
                else:
                    raise RegionNotResolved("point fell between children")
            return float(f.values[topo.span[idx, 0]])
    raise RegionNotResolved("point outside the computation domain")


def right_translate_integral(f: PartitionFunction, g: GroupPoint) -> float:
    """Numerical integral of x -> f(x g) drho(x).

    At a fixed height the horizontal integral of a translated cell is the
    cell's Lebesgue volume; stacking heights splits at the pulled-back leaf
    boundaries, between which the slice integral is constant.  Used to
    check right invariance of rho against integrate_rho(f).
    """
    topo = f.topology
    if g.dimension != topo.domain.dimension:
        raise ValueError("dimension mismatch")
    log_ag = math.log(g.a)
    lo = topo.leaf_log_lo - log_ag
    hi = topo.leaf_log_hi - log_ag
    cube_vol = (topo.leaf_cube_hi - topo.leaf_cube_lo).prod(axis=1)
    cuts = np.unique(np.concatenate([lo, hi]))
    total = 0.0
    for left, right in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (left + right)
        active = (lo <= mid) & (mid < hi)
        slice_sum = float(np.dot(f.values[active], cube_vol[active]))
        total += slice_sum * (right - left)
    return total


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

SCHEMA_PARTITION = "czhardy-partition/1"


def to_json_dict(f: PartitionFunction) -> dict:
    return {"schema": SCHEMA_PARTITION,
            "domain": f.topology.domain.spec_dict(),
            "structure": f.topology.structure(),
            "leaf_values": [float(v) for v in f.values]}


def from_json_dict(doc: dict) -> PartitionFunction:
    if doc.get("schema") != SCHEMA_PARTITION:
        raise ConfigInvalid("unknown partition schema")
    domain = ComputationDomain.from_spec(doc["domain"])
    topo = topology_from_structure(domain, doc["structure"])
    vals = np.asarray(doc["leaf_values"], dtype=float)
    if vals.shape != (topo.n_leaves,):
        raise ConfigInvalid("leaf value count does not match structure")
    return PartitionFunction(topo, vals)


def dumps(f: PartitionFunction) -> str:
    return json.dumps(to_json_dict(f), sort_keys=True)


def loads(text: str) -> PartitionFunction:
    return from_json_dict(json.loads(text))
