"""Shared-randomness couplings between perturbed runs.

Paired runs draw from the same keyed stream.  For the one coordinate whose
distribution differs between the runs, these helpers turn the shared draws
into an explicit coupling: both marginals stay exact while the two values
agree with the maximum possible probability (one minus the total variation
distance between the two distributions).
"""

from __future__ import annotations

import numpy as np


def uniform_tv(lo1: float, hi1: float, lo2: float, hi2: float) -> float:
    """Total variation distance between U[lo1,hi1) and U[lo2,hi2)."""
    len1, len2 = hi1 - lo1, hi2 - lo2
    if len1 <= 0 and len2 <= 0:
        return 0.0 if lo1 == lo2 else 1.0
    if len1 <= 0 or len2 <= 0:
        return 1.0
    overlap = max(0.0, min(hi1, hi2) - max(lo1, lo2))
    return 1.0 - overlap / max(len1, len2)


def _leftover_icdf(u, lo, hi, o_lo, o_hi, shared_density, p_eq):
    """Inverse CDF of a uniform's residual after removing the shared part.

    The residual density is 1/len off the overlap and 1/len - shared_density
    on it, renormalized by 1 - p_eq.  Piecewise linear with three segments
    [lo, o_lo], [o_lo, o_hi], [o_hi, hi], where the overlap window is
    clamped into [lo, hi] (it degenerates when the intervals are disjoint).
    """
    length = hi - lo
    o_lo = np.minimum(np.maximum(o_lo, lo), hi)
    o_hi = np.minimum(np.maximum(o_hi, o_lo), hi)
    d_out = 1.0 / length
    d_in = d_out - shared_density
    mass_left = d_out * (o_lo - lo)
    mass_mid = d_in * (o_hi - o_lo)
    total = 1.0 - p_eq
    q = u * total
    left_end = mass_left
    mid_end = mass_left + mass_mid
    x_left = lo + q / d_out
    x_mid = o_lo + (q - left_end) / np.maximum(d_in, 1e-300)
    x_right = o_hi + (q - mid_end) / d_out
    return np.where(q <= left_end, x_left, np.where(q <= mid_end, x_mid, x_right))


def max_overlap_uniform_pair(u, accept, lo1, hi1, lo2, hi2):
    """Couple U[lo1,hi1) and U[lo2,hi2) with maximal agreement probability.

    ``u`` positions the draw, ``accept`` selects the shared branch.  Both
    may be scalars or numpy arrays (broadcast together).  Returns (x, y)
    with exact marginals; x == y happens with probability exactly
    1 - TV(U1, U2).  Degenerate (zero-length) intervals collapse to their
    left endpoint.
    """
    u = np.asarray(u, dtype=float)
    accept = np.asarray(accept, dtype=float)
    len1 = hi1 - lo1
    len2 = hi2 - lo2
    scalar = u.ndim == 0 and np.ndim(lo1) == 0 and np.ndim(lo2) == 0

    if np.ndim(len1) == 0 and np.ndim(len2) == 0 and (len1 <= 0 or len2 <= 0):
        x = lo1 + u * max(len1, 0.0)
        y = lo2 + u * max(len2, 0.0)
        return (float(x), float(y)) if scalar else (x, y)

    o_lo = np.maximum(lo1, lo2)
    o_hi = np.minimum(hi1, hi2)
    overlap = np.maximum(0.0, o_hi - o_lo)
    shared_density = 1.0 / np.maximum(len1, len2)
    p_eq = overlap * shared_density

    common = o_lo + u * overlap
    x_rest = _leftover_icdf(u, lo1, hi1, o_lo, np.maximum(o_hi, o_lo), shared_density, p_eq)
    y_rest = _leftover_icdf(u, lo2, hi2, o_lo, np.maximum(o_hi, o_lo), shared_density, p_eq)
    take_common = accept < p_eq
    x = np.where(take_common, common, x_rest)
    y = np.where(take_common, common, y_rest)
    if scalar:
        return float(x), float(y)
    return x, y


def shift_wrap(x, frac):
    """Measure-preserving wrap map on [0,1): x - frac, plus 1 when x <= frac.

    Couples the rounding draw of a perturbed edge with the original one;
    the pair of draws (x, shift_wrap(x, delta/b)) makes the rounded values
    differ by exactly one precisely when x <= delta/b.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x <= frac, x - frac + 1.0, x - frac)
    if out.ndim == 0:
        return float(out)
    return out


def couple_discrete(u: float, accept: float, pmf1, pmf2):
    """Maximal coupling of two discrete distributions over range(len(pmf)).

    pmf1 and pmf2 are sequences of probabilities over the same index set.
    Returns (i, j) with exact marginals and i == j with probability
    sum_k min(pmf1[k], pmf2[k]).
    """
    p1 = np.asarray(pmf1, dtype=float)
    p2 = np.asarray(pmf2, dtype=float)
    common = np.minimum(p1, p2)
    p_eq = float(common.sum())
    if accept < p_eq:
        k = _icdf_discrete(u, common / p_eq)
        return k, k
    rest1 = p1 - common
    rest2 = p2 - common
    s1, s2 = rest1.sum(), rest2.sum()
    if s1 <= 0 or s2 <= 0:
        # distributions identical; accept branch covers everything
        k = _icdf_discrete(u, p1)
        return k, k
    return _icdf_discrete(u, rest1 / s1), _icdf_discrete(u, rest2 / s2)


def _icdf_discrete(u: float, pmf: np.ndarray) -> int:
    cdf = np.cumsum(pmf)
    k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(k, len(pmf) - 1)
