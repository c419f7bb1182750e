"""Bipartite matching via an entropy-regularized LP and randomized rounding.

The fractional relaxation maximizes sum w x - B sum x log x subject to row
and column sums at most one.  Strict concavity gives a unique interior
optimum of the form x_ij = exp((w_ij - lambda_i - mu_j)/B - 1) with
nonnegative duals, and an l1 perturbation of one weight moves the optimum
by at most sqrt(nU) * delta / B.  Rounding picks a column candidate per row
from the row marginals, then resolves collisions uniformly per column.

Solver: dual block-coordinate ascent (exact row/column minimization with
clipping at zero) warm-starts a projected Newton phase on the duals; both
phases target the same unique fixed point, so the hybrid exists purely to
reach tight tolerances quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import couple_discrete, max_overlap_uniform_pair
from .errors import BadParams, DegenerateShape, NoConvergence, ZeroOptimum
from .exact import hungarian_bipartite
from .rng import RandomStream


@dataclass(frozen=True)
class EntMatchingLP:
    """Solved regularized relaxation with duals and diagnostics."""

    x: np.ndarray
    lam: np.ndarray  # row duals, >= 0
    mu: np.ndarray  # column duals, >= 0
    b_reg: float
    iterations: int
    max_violation: float  # max positive row/col sum excess
    comp_slack: float  # max |dual * (1 - sum)|

    def objective(self, w) -> float:
        x = self.x
        ent = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return float(np.sum(w * x) - self.b_reg * np.sum(ent))


def _x_from_duals(w, lam, mu, b_reg):
    return np.exp((w - lam[:, None] - mu[None, :]) / b_reg - 1.0)


def _residuals(x, lam, mu):
    rows = x.sum(axis=1)
    cols = x.sum(axis=0)
    viol = max(float(np.max(rows - 1.0, initial=0.0)), float(np.max(cols - 1.0, initial=0.0)))
    cs = max(
        float(np.max(np.abs(lam * (1.0 - rows)), initial=0.0)),
        float(np.max(np.abs(mu * (1.0 - cols)), initial=0.0)),
    )
    return max(viol, 0.0), cs


def _dual_value(w, lam, mu, b_reg):
    x = _x_from_duals(w, lam, mu, b_reg)
    return float(lam.sum() + mu.sum() + b_reg * x.sum())


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))).squeeze(axis)


def solve_lp_ent(
    nu: int,
    nv: int,
    w,
    b_reg: float,
    tol: float = 1e-9,
    max_sweeps: int = 100_000,
    warm_start=None,
    dual_history: list | None = None,
) -> EntMatchingLP:
    """Solve the entropy-regularized relaxation to KKT residual ``tol``.

    Residuals driven below tol: positive row/column sum excess and
    complementary slackness |dual * (1 - sum)|.  The stationarity identity
    x = exp((w - lam - mu)/B - 1) holds exactly by construction.
    ``dual_history`` collects the dual objective after each ascent sweep
    (it decreases monotonically).
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (nu, nv):
        raise BadParams(f"weight matrix shape {w.shape}, expected ({nu},{nv})")
    if b_reg <= 0:
        raise BadParams("regularization weight must be positive")
    if np.any(w < 0):
        raise BadParams("weights must be nonnegative")
    if warm_start is not None:
        lam = np.array(warm_start[0], dtype=float)
        mu = np.array(warm_start[1], dtype=float)
    else:
        lam = np.zeros(nu)
        mu = np.zeros(nv)
    wb = w / b_reg - 1.0
    sweeps = 0
    # phase 1: block ascent; exact minimization per block, monotone dual
    for sweeps in range(1, max_sweeps + 1):
        lam = b_reg * np.maximum(0.0, _logsumexp(wb - mu[None, :] / b_reg, axis=1))
        mu = b_reg * np.maximum(0.0, _logsumexp(wb - lam[:, None] / b_reg, axis=0))
        if dual_history is not None:
            dual_history.append(_dual_value(w, lam, mu, b_reg))
        if sweeps % 8 == 0 or sweeps <= 2:
            x = _x_from_duals(w, lam, mu, b_reg)
            viol, cs = _residuals(x, lam, mu)
            if max(viol, cs) < tol:
                return EntMatchingLP(x, lam, mu, b_reg, sweeps, viol, cs)
            if sweeps >= 40:
                break
    # phase 2: projected Newton on the duals
    n_tot = nu + nv
    for newton_iter in range(200):
        x = _x_from_duals(w, lam, mu, b_reg)
        viol, cs = _residuals(x, lam, mu)
        if max(viol, cs) < tol:
            return EntMatchingLP(x, lam, mu, b_reg, sweeps + newton_iter, viol, cs)
        rows = x.sum(axis=1)
        cols = x.sum(axis=0)
        grad = np.concatenate([1.0 - rows, 1.0 - cols])
        theta = np.concatenate([lam, mu])
        # active bound: at zero with ascent direction pointing outward
        active = (theta <= 0.0) & (grad >= 0.0)
        free = ~active
        if not np.any(free):
            return EntMatchingLP(x, lam, mu, b_reg, sweeps + newton_iter, viol, cs)
        hess = np.zeros((n_tot, n_tot))
        hess[:nu, :nu] = np.diag(rows)
        hess[nu:, nu:] = np.diag(cols)
        hess[:nu, nu:] = x
        hess[nu:, :nu] = x.T
        hess /= b_reg
        idx = np.flatnonzero(free)
        h_ff = hess[np.ix_(idx, idx)] + 1e-14 * np.eye(len(idx))
        try:
            step = np.linalg.solve(h_ff, -grad[idx])
        except np.linalg.LinAlgError:
            break
        base = _dual_value(w, lam, mu, b_reg)
        alpha_step = 1.0
        for _ in range(60):
            cand = theta.copy()
            cand[idx] += alpha_step * step
            cand = np.maximum(cand, 0.0)
            if _dual_value(w, cand[:nu], cand[nu:], b_reg) <= base + 1e-15 * abs(base):
                lam, mu = cand[:nu], cand[nu:]
                break
            alpha_step *= 0.5
        else:
            break
    # fall back to ascent until exhausted
    for extra in range(sweeps, max_sweeps + 1):
        lam = b_reg * np.maximum(0.0, _logsumexp(wb - mu[None, :] / b_reg, axis=1))
        mu = b_reg * np.maximum(0.0, _logsumexp(wb - lam[:, None] / b_reg, axis=0))
        x = _x_from_duals(w, lam, mu, b_reg)
        viol, cs = _residuals(x, lam, mu)
        if max(viol, cs) < tol:
            return EntMatchingLP(x, lam, mu, b_reg, extra, viol, cs)
    raise NoConvergence(
        f"no convergence after {max_sweeps} sweeps", residuals=(viol, cs)
    )


@dataclass(frozen=True)
class RoundingTranscript:
    """Outcome of the two-stage rounding."""

    p: tuple  # per row: chosen column or -1
    candidates: tuple  # per column: tuple of candidate rows
    q: tuple  # per column: chosen row or -1
    matching: tuple  # ((row, col), ...) sorted


def sample_row_choice(row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw over one row: column j w.p. row[j], else -1."""
    cdf = np.cumsum(row)
    if u >= cdf[-1]:
        return -1
    return int(np.searchsorted(cdf, u, side="right"))


def round_matching(x: np.ndarray, rng: RandomStream) -> RoundingTranscript:
    """Round a fractional matching: row candidates, then column choices.

    Pr[p(i) = j] equals x_ij exactly; q(j) is uniform over the candidate
    rows of column j.  One keyed uniform per row and per column.
    """
    x = np.asarray(x, dtype=float)
    nu, nv = x.shape
    if np.any(x.sum(axis=1) > 1.0 + 1e-9):
        raise BadParams("row sums must not exceed 1")
    p = []
    cands: list = [[] for _ in range(nv)]
    for i in range(nu):
        j = sample_row_choice(x[i], rng.random("round", "p", i))
        p.append(j)
        if j >= 0:
            cands[j].append(i)
    q = []
    matching = []
    for j in range(nv):
        if cands[j]:
            pick = cands[j][rng.randint(len(cands[j]), "round", "q", j)]
            q.append(pick)
            matching.append((pick, j))
        else:
            q.append(-1)
    return RoundingTranscript(
        p=tuple(p),
        candidates=tuple(tuple(c) for c in cands),
        q=tuple(q),
        matching=tuple(sorted(matching)),
    )


@dataclass(frozen=True)
class BipartiteMatchResult:
    matching: tuple
    transcript: RoundingTranscript | None
    lp: EntMatchingLP | None
    b_reg: float
    opt: float
    zero_optimum: bool = False

    def weight(self, w) -> float:
        return float(sum(w[i, j] for i, j in self.matching))


def plip_mwbm(
    nu: int, nv: int, w, epsilon: float, rng: RandomStream, tol: float = 1e-9
) -> BipartiteMatchResult:
    """Randomized bipartite matching with expected ratio >= 1/2 - epsilon.

    Samples the regularization weight B uniformly from
    [eps*opt/(nU log nV), 2 eps*opt/(nU log nV)], solves the relaxation
    (per-sample guarantee: sum w x >= (1 - 2 eps) opt), and rounds.
    """
    if not (0 < epsilon < 0.5):
        raise BadParams("epsilon must lie in (0, 1/2)")
    if nv < 2:
        raise DegenerateShape("need at least two right-side vertices")
    w = np.asarray(w, dtype=float)
    if w.shape != (nu, nv):
        raise BadParams(f"weight matrix shape {w.shape}, expected ({nu},{nv})")
    _, opt = hungarian_bipartite(w)
    if opt <= 0:
        return BipartiteMatchResult((), None, None, 0.0, 0.0, zero_optimum=True)
    scale = epsilon * opt / (nu * math.log(nv))
    b_reg = rng.uniform(scale, 2.0 * scale, "bmatch", "B")
    lp = solve_lp_ent(nu, nv, w, b_reg, tol=tol)
    transcript = round_matching(lp.x, rng)
    return BipartiteMatchResult(transcript.matching, transcript, lp, b_reg, opt)


def lp_stability_check(
    nu: int, nv: int, w, f: tuple, delta: float, b_reg: float, tol: float = 1e-9
) -> tuple[float, float]:
    """Solve both instances and return (|x - x'|_1, sqrt(nU) * delta / B)."""
    w = np.asarray(w, dtype=float)
    sol1 = solve_lp_ent(nu, nv, w, b_reg, tol=tol)
    w2 = w.copy()
    w2[f] += delta
    sol2 = solve_lp_ent(nu, nv, w2, b_reg, tol=tol)
    lhs = float(np.abs(sol1.x - sol2.x).sum())
    return lhs, math.sqrt(nu) * delta / b_reg


def poisson_binomial_pmf(y) -> np.ndarray:
    """Exact pmf of the number of successes among independent Bernoullis."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > 1):
        raise BadParams("probabilities must lie in [0, 1]")
    pmf = np.array([1.0])
    for p in y:
        pmf = np.convolve(pmf, [1.0 - p, p])
    return pmf


def collision_value(y) -> float:
    """E[1/(K+1)] for K Poisson-binomial over y; >= 1/2 when sum(y) <= 1.

    This is the expected survival weight of a candidate competing with
    collisions drawn from y.
    """
    pmf = poisson_binomial_pmf(y)
    return float(sum(p / (k + 1.0) for k, p in enumerate(pmf)))


def coupled_plip_mwbm(
    nu: int,
    nv: int,
    w,
    f: tuple,
    delta: float,
    epsilon: float,
    rng: RandomStream,
    tol: float = 1e-9,
):
    """Coupled runs on w and w + delta*1_f.

    B is coupled with maximal interval overlap; conditioned on equal B the
    row choices p(i) and the column choices q(j) are coupled maximally
    given the two fractional solutions.  Returns a dict with both
    matchings, transcript distances and the B agreement flag.
    """
    if not (0 < epsilon < 0.5):
        raise BadParams("epsilon must lie in (0, 1/2)")
    if nv < 2:
        raise DegenerateShape("need at least two right-side vertices")
    w = np.asarray(w, dtype=float)
    w2 = w.copy()
    w2[f] += delta
    _, opt1 = hungarian_bipartite(w)
    _, opt2 = hungarian_bipartite(w2)
    if opt1 <= 0 or opt2 <= 0:
        raise ZeroOptimum("coupled runs need positive optima")
    s1 = epsilon * opt1 / (nu * math.log(nv))
    s2 = epsilon * opt2 / (nu * math.log(nv))
    b1, b2 = max_overlap_uniform_pair(
        rng.random("bmatch", "B"), rng.random("bmatch", "B", "accept"), s1, 2 * s1, s2, 2 * s2
    )
    lp1 = solve_lp_ent(nu, nv, w, b1, tol=tol)
    lp2 = solve_lp_ent(nu, nv, w2, b2, tol=tol)

    def padded(row):
        slack = max(0.0, 1.0 - row.sum())
        return np.concatenate([row, [slack]])

    p1, p2 = [], []
    for i in range(nu):
        u = rng.random("round", "p", i)
        acc = rng.random("round", "p", i, "accept")
        j1, j2 = couple_discrete(u, acc, padded(lp1.x[i]), padded(lp2.x[i]))
        p1.append(j1 if j1 < nv else -1)
        p2.append(j2 if j2 < nv else -1)
    c1: list = [[] for _ in range(nv)]
    c2: list = [[] for _ in range(nv)]
    for i in range(nu):
        if p1[i] >= 0:
            c1[p1[i]].append(i)
        if p2[i] >= 0:
            c2[p2[i]].append(i)
    m1, m2 = [], []
    q_diff = 0
    for j in range(nv):
        if not c1[j] and not c2[j]:
            continue
        u = rng.random("round", "q", j)
        acc = rng.random("round", "q", j, "accept")
        if c1[j] and c2[j]:
            rows = sorted(set(c1[j]) | set(c2[j]))
            pmf1 = np.array([1.0 / len(c1[j]) if r in c1[j] else 0.0 for r in rows])
            pmf2 = np.array([1.0 / len(c2[j]) if r in c2[j] else 0.0 for r in rows])
            k1, k2 = couple_discrete(u, acc, pmf1, pmf2)
            m1.append((rows[k1], j))
            m2.append((rows[k2], j))
            if rows[k1] != rows[k2]:
                q_diff += 1
        elif c1[j]:
            m1.append((c1[j][int(u * len(c1[j])) % len(c1[j])], j))
            q_diff += 1
        else:
            m2.append((c2[j][int(u * len(c2[j])) % len(c2[j])], j))
            q_diff += 1
    p_diff = sum(1 for a, bb in zip(p1, p2) if a != bb)
    return {
        "matching1": tuple(sorted(m1)),
        "matching2": tuple(sorted(m2)),
        "b1": b1,
        "b2": b2,
        "b_equal": b1 == b2,
        "p1": tuple(p1),
        "p2": tuple(p2),
        "candidates1": tuple(tuple(c) for c in c1),
        "candidates2": tuple(tuple(c) for c in c2),
        "p_diff": p_diff,
        "q_diff": q_diff,
        "lp1": lp1,
        "lp2": lp2,
    }
