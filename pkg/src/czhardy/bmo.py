"""Mean oscillation over admissible sets, exponential tail fits, and the
pairing with atomic decompositions.

Oscillations of piecewise-constant functions are exact sums over box
overlaps, so the reported per-set values carry no quadrature error; only
the supremum over the infinite admissible family is approximated, by a
finite family, and is therefore reported as a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroBMONorm
from .functions import (PartitionFunction, product_integral, region_covered,
                        rho_measure)
from .geometry import CZSet


def oscillation(f: PartitionFunction, R: CZSet, q: float = 1.0) -> float:
    """q-mean oscillation ((1/rho(R)) int_R |f - f_R|^q drho)^(1/q), exact."""
    if q < 1:
        raise ValueError("q must be >= 1")
    ov = region_covered(f.topology, R)
    total = ov.sum()
    mean = float(np.dot(f.values, ov) / total)
    dev = np.abs(f.values - mean)
    return float((np.dot(dev ** q, ov) / total) ** (1.0 / q))


@dataclass(frozen=True)
class OscillationReport:
    """Supremum of per-set oscillations over a finite family.

    bmo_norm_lower is a lower bound of the true norm: the family is finite.
    """

    q: float
    family_size: int
    per_set: tuple[tuple[CZSet, float], ...]
    bmo_norm_lower: float


def bmo_norm_over(f: PartitionFunction, family, q: float = 1.0) -> OscillationReport:
    if not family:
        raise ValueError("family must be nonempty")
    per_set = tuple((R, oscillation(f, R, q)) for R in family)
    return OscillationReport(q, len(per_set), per_set,
                             max(v for _, v in per_set))


def tree_family(f: PartitionFunction, min_leaves: int = 2) -> list[CZSet]:
    """All tree nodes with at least min_leaves leaves below them; on these
    the oscillation of a piecewise-constant function can be extremal."""
    topo = f.topology
    return [topo.regions[i] for i in topo.iter_nodes()
            if topo.span[i, 1] - topo.span[i, 0] >= min_leaves]


@dataclass(frozen=True)
class JNFit:
    """Exact tail measures and an exponential fit tail ~ A e^(-eta t).

    fitted_eta is +inf when the tails vanish on the whole grid and 0.0 when
    no decay is visible; exp_integral_at_eta evaluates the exponential
    moment (1/rho(R)) int_R exp(eta |f-f_R| / norm) at the fitted eta.
    """

    region: CZSet
    t_grid: tuple[float, ...]
    tails: tuple[float, ...]
    fitted_eta: float
    fitted_A: float
    bmo_norm_used: float
    exp_integral_at_eta: float


def jn_tails(f: PartitionFunction, R: CZSet, t_grid, norm: float) -> np.ndarray:
    """rho({x in R : |f - f_R| > t * norm}) for each t, exact."""
    ov = region_covered(f.topology, R)
    total = ov.sum()
    dev = np.abs(f.values - float(np.dot(f.values, ov) / total))
    t = np.asarray(list(t_grid), dtype=float)
    return (ov[None, :] * (dev[None, :] > t[:, None] * norm)).sum(axis=1)


def jn_verify(f: PartitionFunction, R: CZSet, t_grid,
              bmo_norm: float | None = None,
              tail_floor_rel: float = 1e-8) -> JNFit:
    """Tail table on R plus a log-linear least-squares fit.

    The fit uses the grid points where the tail exceeds the relative floor;
    if the tail cuts to exactly zero inside the grid, the first zero is
    included at the floor value so the cutoff steepness is reflected in the
    fitted rate.
    """
    if bmo_norm is None:
        bmo_norm = bmo_norm_over(f, tree_family(f), 1.0).bmo_norm_lower
    if bmo_norm <= 0:
        raise ZeroBMONorm("oscillation norm vanishes on the test family")
    t = np.asarray(list(t_grid), dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t_grid must be positive")
    tails = jn_tails(f, R, t, bmo_norm)
    rho_R = rho_measure(R)
    floor = tail_floor_rel * rho_R
    sel = tails > floor

    ts, ys = list(t[sel]), list(tails[sel] / rho_R)
    zero_idx = np.nonzero(~sel)[0]
    if zero_idx.size and zero_idx[0] > 0:
        # censored cutoff point keeps the drop visible to the fit
        ts.append(float(t[zero_idx[0]]))
        ys.append(tail_floor_rel)

    eta, amp = math.inf, float("nan")
    if not np.any(tails > 0):
        eta, amp = math.inf, 0.0
    elif len(ts) >= 2:
        slope, intercept = np.polyfit(np.asarray(ts), np.log(np.asarray(ys)), 1)
        eta, amp = float(-slope), float(math.exp(intercept))

    ov = region_covered(f.topology, R)
    total = ov.sum()
    dev = np.abs(f.values - float(np.dot(f.values, ov) / total))
    if math.isfinite(eta):
        # steep fitted rates can push the moment to float infinity; report it
        with np.errstate(over="ignore"):
            expint = float(np.dot(np.exp(eta * dev / bmo_norm), ov) / total)
    else:
        expint = float("nan")
    return JNFit(R, tuple(float(x) for x in t), tuple(float(x) for x in tails),
                 eta, amp, bmo_norm, expint)


def jn_eta_floor(dimension: int) -> float:
    """Rate below which the stopping-time construction cannot certify the
    exponential moment: the closing step needs e^((2^d+2) eta) < 2."""
    return math.log(2.0) / (2 ** dimension + 2)


def duality_pairing(f: PartitionFunction, g: PartitionFunction,
                    g_h12_bound: float) -> float:
    """The pairing integral f*g drho, exact on the common refinement.

    g_h12_bound is the caller's certified atomic bound for g; the pairing
    itself does not use it, but the bound |pairing| <= C ||f||_{2,*} * bound
    is what the acceptance harness checks against.
    """
    if g_h12_bound < 0:
        raise ValueError("certified bound must be nonnegative")
    return product_integral(f, g)
