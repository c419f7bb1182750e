"""Distances between edge (multi)sets and between empirical output distributions.

Outputs of the randomized algorithms are edge sets or walks; both are
compared through their multiset of edge ids.  Distributions are empirical:
canonicalized outcomes with sample frequencies.  The earth mover's distance
between two empirical distributions is solved exactly as a transportation
linear program.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, SupportTooLarge

MAX_SUPPORT = 10_000


def as_multiset(obj) -> Counter:
    """Coerce a walk, tree, matching, set or mapping to an edge multiset."""
    if isinstance(obj, Counter):
        return obj
    ms = getattr(obj, "multiset", None)
    if ms is not None:
        return ms
    if isinstance(obj, dict):
        return Counter(obj)
    return Counter(obj)


def canonical_outcome(obj) -> tuple:
    """Sorted ((edge, mult), ...) key identifying a multiset outcome."""
    ms = as_multiset(obj)
    return tuple(sorted((int(e), int(k)) for e, k in ms.items() if k))


def d_u(f1, f2) -> float:
    """Multiplicity-wise L1 distance: sum_e |mult1(e) - mult2(e)|."""
    m1, m2 = as_multiset(f1), as_multiset(f2)
    total = 0
    for e in m1.keys() | m2.keys():
        total += abs(m1.get(e, 0) - m2.get(e, 0))
    return float(total)


def d_w(f1, w1, f2, w2) -> float:
    """L1 distance between weighted incidence vectors.

    Each multiset F with weights w maps to sum_e w(e) * mult(e) * 1_e, so
    the distance is sum_e |w1(e) mult1(e) - w2(e) mult2(e)|.
    """
    m1, m2 = as_multiset(f1), as_multiset(f2)
    total = 0.0
    for e in m1.keys() | m2.keys():
        total += abs(w1[e] * m1.get(e, 0) - w2[e] * m2.get(e, 0))
    return float(total)


@dataclass(frozen=True)
class EdgeSetDistribution:
    """Empirical distribution over canonicalized edge multisets."""

    outcomes: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.outcomes) != len(self.probs):
            raise BadParams("outcomes and probs must have equal length")
        if self.probs and abs(sum(self.probs) - 1.0) > 1e-12:
            raise BadParams(f"probabilities sum to {sum(self.probs)}, not 1")
        if any(p < 0 for p in self.probs):
            raise BadParams("negative probability")

    @classmethod
    def from_samples(cls, samples) -> "EdgeSetDistribution":
        counts = Counter(canonical_outcome(s) for s in samples)
        total = sum(counts.values())
        if total == 0:
            raise BadParams("no samples")
        items = sorted(counts.items())
        return cls(
            outcomes=tuple(k for k, _ in items),
            probs=tuple(c / total for _, c in items),
        )

    @classmethod
    def from_pairs(cls, pairs) -> "EdgeSetDistribution":
        items = sorted((canonical_outcome(o), float(p)) for o, p in pairs)
        merged: dict = {}
        for k, p in items:
            merged[k] = merged.get(k, 0.0) + p
        keys = sorted(merged)
        return cls(outcomes=tuple(keys), probs=tuple(merged[k] for k in keys))

    @property
    def support_size(self) -> int:
        return len(self.outcomes)

    def multisets(self) -> list[Counter]:
        return [Counter(dict(o)) for o in self.outcomes]

    def to_text(self) -> str:
        lines = []
        for o, p in zip(self.outcomes, self.probs):
            body = " ".join(f"{e}:{k}" for e, k in o)
            lines.append(f"{p!r}\t{body}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EdgeSetDistribution":
        pairs = []
        for ln in text.splitlines():
            if not ln.strip():
                continue
            prob_part, _, body = ln.partition("\t")
            ms = Counter()
            for tok in body.split():
                e, _, k = tok.partition(":")
                ms[int(e)] = int(k)
            pairs.append((ms, float(prob_part)))
        return cls.from_pairs(pairs)


def tv_empirical(p: EdgeSetDistribution, q: EdgeSetDistribution) -> float:
    """Total variation distance over the union support."""
    pm = dict(zip(p.outcomes, p.probs))
    qm = dict(zip(q.outcomes, q.probs))
    return 0.5 * sum(abs(pm.get(k, 0.0) - qm.get(k, 0.0)) for k in pm.keys() | qm.keys())


def emd_empirical(p: EdgeSetDistribution, q: EdgeSetDistribution, cost) -> float:
    """Exact minimum-coupling expected cost (transportation problem).

    ``cost(outcome_p, outcome_q)`` receives multisets (Counters).  Solved
    as a linear program; supports of up to MAX_SUPPORT outcomes each are
    accepted, though practical instances stay far smaller.
    """
    n1, n2 = p.support_size, q.support_size
    if n1 > MAX_SUPPORT or n2 > MAX_SUPPORT:
        raise SupportTooLarge(f"supports {n1} x {n2} exceed limit {MAX_SUPPORT}")
    if n1 == 0 or n2 == 0:
        raise BadParams("empty distribution")
    pm = p.multisets()
    qm = q.multisets()
    c = np.empty((n1, n2), dtype=float)
    for i, mi in enumerate(pm):
        for j, mj in enumerate(qm):
            c[i, j] = cost(mi, mj)
    return transportation_cost(np.asarray(p.probs), np.asarray(q.probs), c)


def transportation_cost(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray) -> float:
    """Optimal transport between two discrete distributions, exact LP."""
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    n1, n2 = cost.shape
    # trivial couplings avoid the LP
    if n1 == 1:
        return float(np.dot(demand, cost[0, :]))
    if n2 == 1:
        return float(np.dot(supply, cost[:, 0]))
    nvar = n1 * n2
    a = lil_matrix((n1 + n2, nvar))
    for i in range(n1):
        a[i, i * n2 : (i + 1) * n2] = 1.0
    for j in range(n2):
        a[n1 + j, j::n2] = 1.0
    b = np.concatenate([supply, demand])
    res = linprog(cost.ravel(), A_eq=a.tocsr(), b_eq=b, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    return float(res.fun)


def unweighted_cost(m1: Counter, m2: Counter) -> float:
    return d_u(m1, m2)


def weighted_cost(w1, w2):
    """Cost function closure pairing outcome multisets with weight vectors."""

    def cost(m1: Counter, m2: Counter) -> float:
        return d_w(m1, w1, m2, w2)

    return cost


def zero_one_cost(m1: Counter, m2: Counter) -> float:
    return 0.0 if canonical_outcome(m1) == canonical_outcome(m2) else 1.0
