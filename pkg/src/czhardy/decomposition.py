"""Stopping-time Calderon-Zygmund decompositions and atomic re-expansion.

cz_decompose splits the refinement tree at level alpha: a node becomes a
stopping set the first time the average of |f|^p along the tree exceeds
alpha^p.  reexpand_atom iterates that construction on a (1,p)-atom,
emitting one sup-normalized atom per processed residual and new residuals
on the stopping sets, with the stage constants kept exactly as the
induction prescribes so every claimed bound is numerically checkable:

    stage n threshold   t_n = 2^(dn/p) 2^n alpha^(n+1)
    stage n coefficient c_n = 2^(d/p) t_n
    contraction ratio   q   = 2 * 2^(d(1-p)/p) * alpha^(1-p)  (< 1 required)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (AlphaTooSmall, AtomInvalid, NonzeroMean,
                     RootAverageTooLarge, SupportViolation)
from .functions import (PartitionFunction, Topology, integrate_rho, lp_norm,
                        region_covered, rho_measure)
from .geometry import CZSet


# ---------------------------------------------------------------------------
# atom certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomCertificate:
    """Numeric check of the (1,p)-atom conditions on R.

    sup_norm_residual is the excess of ||a||_p over rho(R)^(1/p-1);
    mean_residual is |integral of a| / ||a||_1 (zero for the zero function).
    """

    p: float
    region: CZSet
    sup_norm_residual: float
    mean_residual: float

    @property
    def valid(self) -> bool:
        size_ref = rho_measure(self.region) ** (1.0 / self.p - 1.0) \
            if not math.isinf(self.p) else 1.0 / rho_measure(self.region)
        return (self.sup_norm_residual <= 1e-10 * size_ref
                and self.mean_residual <= 1e-10)


def validate_atom(a: PartitionFunction, p: float, R: CZSet) -> AtomCertificate:
    """Certificate for support, size and mean of a candidate (1,p)-atom."""
    if not (1.0 < p):
        raise ValueError("p must lie in (1, inf]")
    topo = a.topology
    ov = region_covered(topo, R)
    outside = ov < topo.leaf_measure * (1.0 - 1e-12)
    if np.any((a.values != 0.0) & outside):
        raise SupportViolation("nonzero value outside the declared support")
    size_bound = rho_measure(R) ** (1.0 / p - 1.0) if not math.isinf(p) \
        else 1.0 / rho_measure(R)
    norm = lp_norm(a, p)
    l1 = lp_norm(a, 1.0)
    mean_resid = abs(integrate_rho(a)) / l1 if l1 > 0 else 0.0
    return AtomCertificate(p, R, norm - size_bound, mean_resid)


# ---------------------------------------------------------------------------
# stopping-time decomposition
# ---------------------------------------------------------------------------

def _stopping_sets(topo: Topology, weight_cum: np.ndarray, start: int,
                   threshold_pow: float) -> list[int]:
    """Nodes below start where the weighted average first exceeds the
    threshold.  Never descends past a stopping set; leaves whose average
    exceeds stop there (constant values cannot be split further)."""
    out: list[int] = []
    stack = [start]
    while stack:
        idx = stack.pop()
        lo, hi = topo.span[idx]
        avg = (weight_cum[hi] - weight_cum[lo]) / topo.node_measure(idx)
        if avg > threshold_pow:
            out.append(idx)
        else:
            stack.extend(topo.children[idx])
    return sorted(out)


@dataclass(frozen=True)
class CZStats:
    bad_measure_sum: float
    good_sup: float
    bad_averages: tuple[float, ...]


@dataclass(frozen=True)
class CZDecomposition:
    """f = good + sum of bad parts, bad part i supported on R_i with zero mean."""

    alpha: float
    exponent: float
    good: PartitionFunction
    bad_parts: tuple[tuple[CZSet, PartitionFunction], ...]
    stats: CZStats

    def reconstruct(self) -> PartitionFunction:
        vals = self.good.values.copy()
        for _, b in self.bad_parts:
            vals = vals + b.values
        return self.good.with_values(vals)


def cz_decompose(f: PartitionFunction, alpha: float,
                 exponent: float = 2.0) -> CZDecomposition:
    """Level-alpha decomposition along the refinement tree of f.

    Requires the average of |f|^exponent over every root set to be at most
    alpha^exponent; stopping sets R_i then satisfy the sandwich
    alpha^p < avg_{R_i} |f|^p <= 2^d alpha^p.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    topo = f.topology
    p = exponent
    thr = alpha ** p
    w = np.abs(f.values) ** p * topo.leaf_measure
    cum = topo.node_sums(w)

    stops: list[int] = []
    for rid in topo.root_ids:
        lo, hi = topo.span[rid]
        if (cum[hi] - cum[lo]) / topo.node_measure(rid) > thr:
            raise RootAverageTooLarge(
                "root average above alpha^p; increase alpha or refine the domain")
        stops.extend(_stopping_sets(topo, cum, rid, thr))

    good_vals = f.values.copy()
    bad_parts = []
    averages = []
    mu_cum = topo.node_sums(f.values * topo.leaf_measure)
    bad_measure = 0.0
    for idx in stops:
        sl = topo.leaf_slice(idx)
        lo, hi = topo.span[idx]
        m = topo.node_measure(idx)
        # single-leaf averages taken exactly so their bad parts vanish
        avg_f = float(f.values[lo]) if hi - lo == 1 else (mu_cum[hi] - mu_cum[lo]) / m
        avg_pow = (cum[hi] - cum[lo]) / m
        good_vals[sl] = avg_f
        b_vals = np.zeros_like(f.values)
        b_vals[sl] = f.values[sl] - avg_f
        bad_parts.append((topo.regions[idx], f.with_values(b_vals)))
        averages.append(avg_pow)
        bad_measure += m
    good = f.with_values(good_vals)
    sup = float(np.max(np.abs(good_vals))) if good_vals.size else 0.0
    return CZDecomposition(alpha, exponent, good, tuple(bad_parts),
                           CZStats(bad_measure, sup, tuple(averages)))


# ---------------------------------------------------------------------------
# atomic re-expansion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StageRecord:
    """Per-stage numeric record: the emitted coefficient mass and the checks
    of the residual family H_n (supports, means, L^p and measure budgets)."""

    stage: int
    threshold: float
    coefficient: float
    coefficient_mass: float
    atom_count: int
    residual_count: int
    residual_l1: float
    residual_l1_bound: float
    measure_sum: float
    measure_bound: float
    lp_pow_sum: float
    lp_pow_bound: float
    per_set_lp_max: float
    per_set_lp_bound: float
    pointwise_excess: float
    max_mean_residual: float


@dataclass(frozen=True)
class AtomicExpansion:
    """Finite expansion b = sum of coefficient * weighted atoms + residuals.

    terms[l] = (c_l, [(R, atom, rho(R)), ...]); residuals hold the leftover
    zero-mean pieces after the last executed stage.
    """

    p: float
    alpha: float
    region: CZSet
    depth: int
    terms: tuple[tuple[float, tuple[tuple[CZSet, PartitionFunction, float], ...]], ...]
    residuals: tuple[tuple[CZSet, PartitionFunction], ...]
    ratio_q: float
    coefficient_sum: float
    residual_l1: float
    stage_records: tuple[StageRecord, ...] = field(default=())

    def reconstruct(self) -> PartitionFunction:
        """Sum of all terms and residuals; equals rho(R) * a exactly."""
        total = None
        for c, atoms in self.terms:
            for _, atom, weight in atoms:
                piece = atom * (c * weight)
                total = piece if total is None else total + piece
        for _, h in self.residuals:
            total = h if total is None else total + h
        return total

    def h1_certificate(self) -> float:
        """Upper bound for ||a||_{H^1,inf}: coefficient sum plus the cost of
        closing each residual as a scaled sup-atom, all divided by rho(R)."""
        tail = sum(lp_norm(h, math.inf) * rho_measure(Rj)
                   for Rj, h in self.residuals)
        return (self.coefficient_sum + tail) / rho_measure(self.region)


def alpha_floor(p: float, dimension: int) -> float:
    return max(1.0, 2.0 ** (-dimension / p) * 2.0 ** (1.0 / (p - 1.0)))


def contraction_ratio(p: float, dimension: int, alpha: float) -> float:
    return 2.0 * 2.0 ** (dimension * (1.0 - p) / p) * alpha ** (1.0 - p)


def reexpand_atom(a: PartitionFunction, p: float, R: CZSet, alpha: float,
                  n_max: int = 12) -> AtomicExpansion:
    """Re-expand a (1,p)-atom into sup-normalized atoms plus residuals.

    Runs the stopping-time induction on b = rho(R) * a for at most n_max
    stages, or until every residual vanishes (guaranteed for bounded b since
    the thresholds grow geometrically).  Stage bounds are recorded, not
    assumed.
    """
    if not (1.0 < p < math.inf):
        raise ValueError("p must lie in (1, inf)")
    floor = alpha_floor(p, R.dimension)
    if alpha <= floor:
        raise AlphaTooSmall(f"alpha must exceed {floor:.6g}")
    cert = validate_atom(a, p, R)
    if not cert.valid:
        raise AtomInvalid(
            f"not a (1,{p})-atom: size excess {cert.sup_norm_residual:.3g}, "
            f"mean residual {cert.mean_residual:.3g}")

    topo = a.topology
    d = R.dimension
    q = contraction_ratio(p, d, alpha)
    rho_R = rho_measure(R)
    b = a * rho_R
    b_norm_p_pow = lp_norm(b, p) ** p
    root = topo.node_of(R)
    if root is None:
        raise SupportViolation("atom support must be a tree node")
    if lp_norm(b, 1.0) == 0.0:
        return AtomicExpansion(p, alpha, R, 0, (), (), q, 0.0, 0.0, ())

    mu = topo.leaf_measure
    current: list[tuple[int, np.ndarray]] = [(root, b.values.copy())]
    terms = []
    records = []
    coefficient_sum = 0.0

    for stage in range(n_max):
        thr = 2.0 ** (d * stage / p) * 2.0 ** stage * alpha ** (stage + 1)
        coeff = 2.0 ** (d / p) * thr
        atoms_out = []
        new_residuals: list[tuple[int, np.ndarray]] = []
        for node, vals in current:
            w_cum = topo.node_sums(np.abs(vals) ** p * mu)
            f_cum = topo.node_sums(vals * mu)
            lo, hi = topo.span[node]
            if (w_cum[hi] - w_cum[lo]) / topo.node_measure(node) > thr ** p:
                raise RootAverageTooLarge(
                    "stage precondition failed; residual average above threshold")
            stops = _stopping_sets(topo, w_cum, node, thr ** p)
            good = vals.copy()
            for s in stops:
                slo, shi = topo.span[s]
                m = topo.node_measure(s)
                avg = float(vals[slo]) if shi - slo == 1 \
                    else (f_cum[shi] - f_cum[slo]) / m
                good[topo.leaf_slice(s)] = avg
                h = np.zeros_like(vals)
                sl = topo.leaf_slice(s)
                h[sl] = vals[sl] - avg
                new_residuals.append((s, h))
            node_rho = topo.node_measure(node)
            atom = PartitionFunction(topo, good / (coeff * node_rho))
            atoms_out.append((topo.regions[node], atom, node_rho))
            coefficient_sum += coeff * node_rho
        terms.append((coeff, tuple(atoms_out)))
        records.append(_stage_record(
            topo, stage, thr, coeff, atoms_out, new_residuals, b, p, d,
            alpha, q, rho_R, b_norm_p_pow))
        current = [(n, h) for n, h in new_residuals
                   if float(np.abs(h).max()) > 0.0]
        if not current:
            break

    residuals = tuple((topo.regions[n], PartitionFunction(topo, h))
                      for n, h in current)
    residual_l1 = sum(lp_norm(h, 1.0) for _, h in residuals)
    return AtomicExpansion(p, alpha, R, len(terms), tuple(terms), residuals,
                           q, coefficient_sum, residual_l1, tuple(records))


def _stage_record(topo, stage, thr, coeff, atoms_out, new_residuals, b, p, d,
                  alpha, q, rho_R, b_norm_p_pow) -> StageRecord:
    n = stage + 1  # the residual family created here is H_n
    mu = topo.leaf_measure
    l1 = 0.0
    meas = 0.0
    lp_pow = 0.0
    per_set_max = 0.0
    pointwise_excess = -math.inf
    mean_resid = 0.0
    point_bound = 2.0 ** (d * n / p) * 2.0 ** n * alpha ** n
    for node, h in new_residuals:
        m = topo.node_measure(node)
        habs = np.abs(h)
        l1 += float(np.dot(habs, mu))
        meas += m
        hp = float(np.dot(habs ** p, mu))
        lp_pow += hp
        per_set_max = max(per_set_max, (hp / m) ** (1.0 / p))
        sl = topo.leaf_slice(node)
        excess = float(np.max(habs[sl] - np.abs(b.values[sl]))) if habs[sl].size else -math.inf
        pointwise_excess = max(pointwise_excess, excess)
        h1 = float(np.dot(habs, mu))
        if h1 > 0:
            mean_resid = max(mean_resid, abs(float(np.dot(h, mu))) / h1)
    coeff_mass = coeff * sum(wt for _, _, wt in atoms_out)
    return StageRecord(
        stage=n,
        threshold=thr,
        coefficient=coeff,
        coefficient_mass=coeff_mass,
        atom_count=len(atoms_out),
        residual_count=len(new_residuals),
        residual_l1=l1,
        residual_l1_bound=2.0 ** d * q ** n * rho_R,
        measure_sum=meas,
        measure_bound=2.0 ** (d * (1 - n)) * alpha ** (-n * p) * b_norm_p_pow,
        lp_pow_sum=lp_pow,
        lp_pow_bound=2.0 ** (p * n) * b_norm_p_pow,
        per_set_lp_max=per_set_max,
        per_set_lp_bound=point_bound,
        pointwise_excess=pointwise_excess,
        max_mean_residual=mean_resid,
    )


def expansion_json_dict(e: AtomicExpansion) -> dict:
    def region_dict(R: CZSet):
        return {"scale": R.cube.scale, "corner": list(R.cube.corner),
                "log_a": R.log_a, "r": R.r}
    return {
        "schema": "czhardy-expansion/1",
        "p": e.p, "alpha": e.alpha, "depth": e.depth, "ratio_q": e.ratio_q,
        "region": region_dict(e.region),
        "coefficient_sum": e.coefficient_sum,
        "residual_l1": e.residual_l1,
        "stages": [{
            "stage": r.stage, "threshold": r.threshold,
            "coefficient": r.coefficient, "coefficient_mass": r.coefficient_mass,
            "atom_count": r.atom_count, "residual_count": r.residual_count,
            "residual_l1": r.residual_l1, "residual_l1_bound": r.residual_l1_bound,
            "measure_sum": r.measure_sum, "measure_bound": r.measure_bound,
        } for r in e.stage_records],
        "atom_supports": [[region_dict(R) for R, _, _ in atoms]
                          for _, atoms in e.terms],
    }


# ---------------------------------------------------------------------------
# certified H^1 upper bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class H1Decomposition:
    """Explicit finite decomposition f = sum lambda_j a_j into sup-atoms."""

    parts: tuple[tuple[float, PartitionFunction, CZSet], ...]
    bound: float

    def reconstruct(self) -> PartitionFunction:
        total = None
        for lam, atom, _ in self.parts:
            piece = atom * lam
            total = piece if total is None else total + piece
        return total


def _minimal_support_node(f: PartitionFunction) -> int:
    topo = f.topology
    nz = np.nonzero(f.values)[0]
    if nz.size == 0:
        raise ValueError("zero function has no support node")
    lo, hi = nz[0], nz[-1] + 1
    roots = [rid for rid in topo.root_ids
             if topo.span[rid, 0] <= lo and hi <= topo.span[rid, 1]]
    if not roots:
        raise SupportViolation("support spans more than one root set")
    idx = roots[0]
    while True:
        tighter = [c for c in topo.children[idx]
                   if topo.span[c, 0] <= lo and hi <= topo.span[c, 1]]
        if not tighter:
            return idx
        idx = tighter[0]


def h1_atomic_decomposition(f: PartitionFunction, p: float) -> H1Decomposition:
    """Greedy multi-level atomic decomposition of a zero-mean function.

    Stopping-time decompositions of |f| at the doubling levels 2^k alpha0
    are telescoped: the level-0 good part is one scaled sup-atom on the
    support node, and between consecutive levels each stopping set carries
    the bounded zero-mean difference of the good parts.  The sum of the
    tight per-atom weights ||A||_inf rho(R) is an upper bound of the atomic
    norm by construction; every part is validated.
    """
    l1 = lp_norm(f, 1.0)
    if l1 == 0.0:
        return H1Decomposition((), 0.0)
    if abs(integrate_rho(f)) > 1e-10 * l1:
        raise NonzeroMean("atomic bounds require vanishing integral")
    topo = f.topology
    support = _minimal_support_node(f)
    R_f = topo.regions[support]
    alpha0 = l1 / topo.node_measure(support)

    w = np.abs(f.values) * topo.leaf_measure
    cum = topo.node_sums(w)
    f_cum = topo.node_sums(f.values * topo.leaf_measure)

    def good_values(level_alpha: float) -> tuple[np.ndarray, list[int]]:
        stops = _stopping_sets(topo, cum, support, level_alpha)
        g = f.values.copy()
        for s in stops:
            lo, hi = topo.span[s]
            g[topo.leaf_slice(s)] = float(f.values[lo]) if hi - lo == 1 \
                else (f_cum[hi] - f_cum[lo]) / topo.node_measure(s)
        return g, stops

    parts: list[tuple[float, PartitionFunction, CZSet]] = []
    g_prev, stops_prev = good_values(alpha0)
    lam0 = float(np.max(np.abs(g_prev))) * topo.node_measure(support)
    if lam0 > 0:
        parts.append((lam0, PartitionFunction(topo, g_prev / lam0), R_f))

    k = 0
    while stops_prev:
        k += 1
        g_next, stops_next = good_values(alpha0 * 2.0 ** k)
        diff = g_next - g_prev
        for s in stops_prev:
            sl = topo.leaf_slice(s)
            sup = float(np.max(np.abs(diff[sl]))) if diff[sl].size else 0.0
            if sup == 0.0:
                continue
            m = topo.node_measure(s)
            lam = sup * m
            vals = np.zeros_like(diff)
            vals[sl] = diff[sl] / lam
            parts.append((lam, PartitionFunction(topo, vals), topo.regions[s]))
        g_prev, stops_prev = g_next, stops_next

    bound = sum(lam for lam, _, _ in parts)
    return H1Decomposition(tuple(parts), bound)


def h1_upper_bound(f: PartitionFunction, p: float) -> float:
    """Certified upper bound of the atomic norm; see h1_atomic_decomposition."""
    return h1_atomic_decomposition(f, p).bound
