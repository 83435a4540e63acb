"""Seeded generators for test families: admissible sets, refinement trees,
atoms and oscillating test functions.

Everything takes an explicit numpy Generator so that experiment runs and the
acceptance suite are reproducible sample by sample.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigInvalid
from .functions import (ComputationDomain, PartitionFunction, Topology,
                        average_on, build_topology, lp_norm, rho_measure)
from .geometry import LN2, CZSet, DyadicCube, czset_is_admissible, split


def random_admissible_set(rng: np.random.Generator, dimension: int = 1,
                          r_range=(0.05, 4.0), log_a_range=(-4.0, 4.0),
                          corner_range: int = 8) -> CZSet:
    """Admissible set with log-uniform r, uniform log a, and a side length
    drawn uniformly from the admissible dyadic window."""
    r = math.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1])))
    log_a = rng.uniform(*log_a_range)
    if r < 1.0:
        lo, hi = log_a + math.log(r) + 2.0, log_a + math.log(r) + 8.0
    else:
        lo, hi = log_a + 2.0 * r, log_a + 8.0 * r
    j_lo = math.ceil(lo / LN2)
    j_hi = math.ceil(hi / LN2) - 1
    j = int(rng.integers(j_lo, j_hi + 1))
    corner = tuple(int(c) for c in rng.integers(-corner_range, corner_range,
                                                size=dimension))
    R = CZSet(DyadicCube(j, corner), log_a, r)
    assert czset_is_admissible(R)
    return R


def random_domain_sets(domain: ComputationDomain, rng: np.random.Generator,
                       count: int, r_range=(0.05, 2.0)) -> list[CZSet]:
    """Admissible sets lying inside the domain box (not necessarily tree
    aligned); used for oscillation families."""
    n = domain.vertical_exponent
    j_cap = domain.cube_exponent
    out: list[CZSet] = []
    guard = 0
    while len(out) < count:
        guard += 1
        if guard > 100 * count:
            raise ConfigInvalid("could not place enough admissible sets in the domain")
        r = math.exp(rng.uniform(math.log(r_range[0]),
                                 math.log(min(r_range[1], n))))
        log_a = rng.uniform(-n + r, n - r)
        if r < 1.0:
            lo, hi = log_a + math.log(r) + 2.0, log_a + math.log(r) + 8.0
        else:
            lo, hi = log_a + 2.0 * r, log_a + 8.0 * r
        j_lo = math.ceil(lo / LN2)
        j_hi = min(j_cap, math.ceil(hi / LN2) - 1)
        if j_hi < j_lo:
            continue
        j = int(rng.integers(j_lo, j_hi + 1))
        span = 2 ** (j_cap - j)
        corner = tuple(int(c) for c in rng.integers(0, span, size=domain.dimension))
        R = CZSet(DyadicCube(j, corner), log_a, r)
        assert czset_is_admissible(R)
        out.append(R)
    return out


def random_topology(domain: ComputationDomain, rng: np.random.Generator,
                    max_depth: int = 5, split_prob: float = 0.7) -> Topology:
    """Random refinement: split with the given probability, always at least
    once at the root so every tree has interior structure."""
    def splitter(region, depth):
        if depth >= max_depth:
            return False
        return depth == 0 or rng.random() < split_prob
    return build_topology(domain, splitter)


def random_function(topology: Topology, rng: np.random.Generator,
                    scale: float = 1.0) -> PartitionFunction:
    return PartitionFunction(topology, scale * rng.standard_normal(topology.n_leaves))


def _interior_nodes(topology: Topology, min_leaves: int = 2) -> list[int]:
    return [i for i in topology.iter_nodes()
            if topology.span[i, 1] - topology.span[i, 0] >= min_leaves
            and not topology.is_leaf(i)]


def random_atom(topology: Topology, rng: np.random.Generator, p: float,
                node: int | None = None) -> tuple[PartitionFunction, CZSet]:
    """Extremal (1,p)-atom on a random interior node: random leaf values,
    mean removed, then scaled so the L^p norm equals rho(R)^(1/p-1)."""
    nodes = _interior_nodes(topology)
    if not nodes:
        raise ConfigInvalid("topology has no interior nodes")
    idx = int(rng.choice(nodes)) if node is None else node
    R = topology.regions[idx]
    sl = topology.leaf_slice(idx)
    mu = topology.leaf_measure[sl]
    vals = np.zeros(topology.n_leaves)
    local = rng.standard_normal(mu.size)
    local -= np.dot(local, mu) / mu.sum()
    if np.max(np.abs(local)) == 0.0:
        local = np.linspace(-1.0, 1.0, mu.size)
        local -= np.dot(local, mu) / mu.sum()
    vals[sl] = local
    f = PartitionFunction(topology, vals)
    target = rho_measure(R) ** (1.0 / p - 1.0)
    return f * (target / lp_norm(f, p)), R


def log_height_profile(topology: Topology) -> PartitionFunction:
    """The canonical unbounded-oscillation profile log(a), projected exactly:
    the leaf average of log a is the midpoint of the leaf's log interval."""
    vals = 0.5 * (topology.leaf_log_lo + topology.leaf_log_hi)
    return PartitionFunction(topology, vals.copy())


def random_bmo_function(topology: Topology, rng: np.random.Generator,
                        n_atoms: int = 4, profile_weight: float = 1.0,
                        atom_weight: float = 1.0) -> PartitionFunction:
    """Sum of scaled sup-normalized atoms plus the log-height profile.

    Membership in the oscillation class is established numerically by the
    tests, not assumed here.
    """
    f = log_height_profile(topology) * (profile_weight * rng.uniform(0.5, 1.5))
    for _ in range(n_atoms):
        atom, R = random_atom(topology, rng, p=math.inf)
        c = atom_weight * rng.uniform(0.2, 1.0) * rho_measure(R)
        f = f + atom * c
    return f


def chain_topology(domain: ComputationDomain, root_index: int,
                   depth: int) -> Topology:
    """Refine one root along its first child repeatedly, to the given depth.

    Relies on the depth-first build order: the first child of a refined node
    is visited immediately after its parent.
    """
    target = {"region": domain.roots[root_index]}

    def splitter(region, dep):
        if dep >= depth:
            return False
        if region.key() == target["region"].key():
            target["region"] = split(region)[0]
            return True
        return False

    return build_topology(domain, splitter)


def geometric_spike_function(domain: ComputationDomain, rng: np.random.Generator,
                             p: float = 2.0, depth: int = 14,
                             root_index: int | None = None,
                             level: float = 0.3,
                             tail_margin: float = 1.2) -> PartitionFunction:
    """Multi-scale power profile along one refinement chain.

    The leaf at relative depth k carries the value 2^(k * tail_margin / p),
    so the distribution of |f| is a power law with tail exponent
    p / tail_margin.  With tail_margin > 1 the profile stays in L^p without
    the critical logarithmic factor, which keeps splittings at intermediate
    heights optimal over a wide window; this is the function class the
    K-functional curve tests need.  Values are zero off the chain; the
    result is scaled so the worst root p-average equals `level`.
    """
    if root_index is None:
        root_index = int(rng.integers(len(domain.roots)))
    topo = chain_topology(domain, root_index, depth)
    root = domain.roots[root_index]
    root_id = topo.node_of(root)
    sl = topo.leaf_slice(root_id)
    vals = np.zeros(topo.n_leaves)
    rho_root = rho_measure(root)
    for k in range(sl.start, sl.stop):
        R = topo.regions[topo.leaf_nodes[k]]
        dep = round(math.log2(rho_root / rho_measure(R)))
        jitter = float(np.exp(rng.uniform(-0.2, 0.2)))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        vals[k] = sign * jitter * 2.0 ** (dep * tail_margin / p)
    f = PartitionFunction(topo, vals)
    worst = max(average_on(f.with_values(np.abs(f.values) ** p), Rt) ** (1.0 / p)
                for Rt in domain.roots)
    return f * (level / worst)


def random_zero_mean_function(topology: Topology, rng: np.random.Generator,
                              node: int | None = None) -> tuple[PartitionFunction, CZSet]:
    """Zero-mean function supported on a single interior node; not normalized."""
    nodes = _interior_nodes(topology)
    idx = int(rng.choice(nodes)) if node is None else node
    R = topology.regions[idx]
    sl = topology.leaf_slice(idx)
    mu = topology.leaf_measure[sl]
    vals = np.zeros(topology.n_leaves)
    local = rng.standard_normal(mu.size) * np.exp(rng.uniform(-1.0, 1.0, mu.size))
    local -= np.dot(local, mu) / mu.sum()
    vals[sl] = local
    return PartitionFunction(topology, vals), R
