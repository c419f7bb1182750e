"""Weighted shortest path through an unweighted directed-gadget reduction.

Each weighted edge is rounded to an integer length (two or three plus the
floor of weight over a sampled discretization step b) and replaced by two
oppositely oriented directed paths of that many arcs.  The contraction-
stable directed walk routine then runs on the gadget, and its output maps
back to a weighted walk: a walk entering one end of a gadget path must
leave from the other end, so maximal runs of gadget arcs correspond to
whole edge traversals.

Rounding up by at least two keeps every interior gadget arc contractible,
which is what ties a small weight decrease to a single arc contraction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .contraction_sp import di_sp
from .coupling import max_overlap_uniform_pair, shift_wrap
from .errors import BadParams, MalformedWalk, Unreachable
from .exact import dijkstra
from .graphs import DirectedGraph, Walk, WeightedMultigraph, check_weights
from .rng import RandomStream


@dataclass(frozen=True)
class EdgeGadget:
    """Rounding record for one original edge."""

    edge: int
    l: int
    x: float
    hat_w: int
    included: bool
    forward_arcs: tuple  # (start, stop) arc id range, empty as (0, 0)
    backward_arcs: tuple


@dataclass(frozen=True)
class GadgetGraph:
    """Directed gadget built from a weighted graph at one random draw."""

    graph: DirectedGraph
    n_original: int
    b: float
    epsilon: float
    cap: float
    records: tuple
    arc_owner: np.ndarray  # original edge id per gadget arc
    arc_dir: np.ndarray  # +1 forward chain, -1 backward chain
    arc_pos: np.ndarray  # position within its chain


def rounded_lengths(w, b: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Integer lengths for the gadget: l = floor(w/b), hat in {l+2, l+3}.

    hat = l+2 exactly when x <= ((l+1) b - w) / b, which makes E[hat * b]
    track w + 2b and keeps the rounding monotone under weight shifts.
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if b <= 0:
        raise BadParams("discretization step b must be positive")
    l = np.floor(w / b)
    thr = ((l + 1.0) * b - w) / b
    hat = np.where(x <= thr, l + 2.0, l + 3.0)
    return l.astype(np.int64), hat.astype(np.int64)


def inclusion_cap(n: int, epsilon: float) -> float:
    return 12.0 * n / epsilon + 3.0


def build_gadget_from(
    g: WeightedMultigraph, w, epsilon: float, b: float, x
) -> GadgetGraph:
    """Deterministic gadget construction from explicit draws (b, x).

    Arc layout: included edges in ascending id order, forward chain then
    backward chain, each chain's arcs consecutive in walk order.
    """
    w = check_weights(g, w)
    l, hat = rounded_lengths(w, b, x)
    cap = inclusion_cap(g.n, epsilon)
    included = np.flatnonzero(~g.self_loop_mask & (hat <= cap))
    records = []

    if included.size:
        ks = hat[included]
        uv = g.edge_array[included]
        # chains interleave as [fwd_0, bwd_0, fwd_1, bwd_1, ...]
        chain_lens = np.repeat(ks, 2)
        chain_starts = np.concatenate(([0], np.cumsum(chain_lens)[:-1]))
        total_arcs = int(chain_lens.sum())
        # interior vertices: forward block then backward block per edge
        interiors = np.repeat(ks - 1, 2)
        chain_base = g.n + np.concatenate(([0], np.cumsum(interiors)[:-1]))
        n_vertices = g.n + int(interiors.sum())
        chain_first = np.empty(2 * included.size, dtype=np.int64)
        chain_last = np.empty(2 * included.size, dtype=np.int64)
        chain_first[0::2] = uv[:, 0]
        chain_first[1::2] = uv[:, 1]
        chain_last[0::2] = uv[:, 1]
        chain_last[1::2] = uv[:, 0]
        chain_edge = np.repeat(included, 2)
        chain_dir = np.empty(2 * included.size, dtype=np.int8)
        chain_dir[0::2] = 1
        chain_dir[1::2] = -1

        arc_chain = np.repeat(np.arange(2 * included.size), chain_lens)
        pos = np.arange(total_arcs, dtype=np.int64) - chain_starts[arc_chain]
        base = chain_base[arc_chain]
        last_pos = chain_lens[arc_chain] - 1
        tails = np.where(pos == 0, chain_first[arc_chain], base + pos - 1)
        heads = np.where(pos == last_pos, chain_last[arc_chain], base + pos)
        arcs = np.stack([tails, heads], axis=1)
        owner = chain_edge[arc_chain]
        direction = chain_dir[arc_chain]
    else:
        n_vertices = g.n
        arcs = np.zeros((0, 2), dtype=np.int64)
        owner = np.zeros(0, dtype=np.int64)
        direction = np.zeros(0, dtype=np.int8)
        pos = np.zeros(0, dtype=np.int64)
        chain_starts = np.zeros(0, dtype=np.int64)

    included_rank = {int(e): i for i, e in enumerate(included)}
    for e in range(g.m):
        i = included_rank.get(e)
        if i is None:
            records.append(EdgeGadget(e, int(l[e]), float(x[e]), int(hat[e]), False, (0, 0), (0, 0)))
        else:
            k = int(hat[e])
            fs = int(chain_starts[2 * i])
            bs = int(chain_starts[2 * i + 1])
            records.append(
                EdgeGadget(e, int(l[e]), float(x[e]), k, True, (fs, fs + k), (bs, bs + k))
            )
    return GadgetGraph(
        graph=DirectedGraph(n_vertices, arcs),
        n_original=g.n,
        b=b,
        epsilon=epsilon,
        cap=cap,
        records=tuple(records),
        arc_owner=owner,
        arc_dir=direction,
        arc_pos=pos,
    )


def build_gadget(
    g: WeightedMultigraph,
    w,
    s: int,
    t: int,
    epsilon: float,
    rng: RandomStream,
    opt: float | None = None,
) -> GadgetGraph:
    """Sample (b, x) and build the gadget; requires positive s-t optimum.

    ``opt`` may pass a precomputed s-t optimum to skip the oracle call.
    """
    w = check_weights(g, w)
    if opt is None:
        opt = dijkstra(g, w, s)[0][t]
    if opt == float("inf"):
        raise Unreachable(f"{t} unreachable from {s}")
    if opt <= 0:
        raise BadParams("gadget construction needs a positive s-t optimum")
    b = rng.uniform(epsilon * opt / (12.0 * g.n), epsilon * opt / (6.0 * g.n), "lipsp", "b")
    x = np.array([rng.random("lipsp", "x", e) for e in range(g.m)])
    return build_gadget_from(g, w, epsilon, b, x)


def map_walk_back(gadget: GadgetGraph, hat_walk: Walk) -> Walk:
    """Translate a gadget walk to the original graph.

    Maximal runs of arcs owned by one edge and one chain direction must
    traverse the whole chain; each run becomes a single edge traversal.
    """
    if not hat_walk.steps:
        return Walk(hat_walk.source, hat_walk.target, ())
    ids = np.fromiter((e for e, _ in hat_walk.steps), dtype=np.int64, count=len(hat_walk.steps))
    owner = gadget.arc_owner[ids]
    direction = gadget.arc_dir[ids]
    token = owner * 2 + (direction > 0)
    breaks = np.flatnonzero(np.diff(token) != 0) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [len(ids)]))
    steps = []
    for a, z in zip(starts.tolist(), ends.tolist()):
        e = int(owner[a])
        rec = gadget.records[e]
        k = rec.hat_w
        if z - a != k:
            raise MalformedWalk(
                f"run over edge {e} spans {z - a} arcs, chain length is {k}"
            )
        if int(gadget.arc_pos[ids[a]]) != 0 or np.any(np.diff(ids[a:z]) != 1):
            raise MalformedWalk(f"run over edge {e} is not a whole chain traversal")
        steps.append((e, 1 if direction[a] > 0 else -1))
    return Walk(hat_walk.source, hat_walk.target, tuple(steps))


def _zero_weight_walk(g: WeightedMultigraph, w, s: int, t: int) -> Walk:
    """Shortest s-t walk using only zero-weight edges (BFS)."""
    dist = [-1] * g.n
    pred: list = [None] * g.n
    dist[s] = 0
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            break
        for v, e in g.adjacency[u]:
            if w[e] == 0 and dist[v] < 0:
                dist[v] = dist[u] + 1
                pred[v] = (u, e)
                queue.append(v)
    if dist[t] < 0:
        raise Unreachable("no zero-weight s-t path despite zero optimum")
    steps = []
    v = t
    while v != s:
        u, e = pred[v]
        a, bb = g.edges[e]
        steps.append((e, 1 if (a, bb) == (u, v) else -1))
        v = u
    steps.reverse()
    return Walk(s, t, tuple(steps))


@dataclass(frozen=True)
class LipSpResult:
    walk: Walk
    gadget: GadgetGraph | None
    gadget_walk: Walk | None
    zero_optimum: bool = False


def lip_sp_run(
    g: WeightedMultigraph, w, s: int, t: int, epsilon: float, rng: RandomStream
) -> LipSpResult:
    """Full run keeping the gadget and intermediate walk for inspection."""
    if not (0 < epsilon < 1):
        raise BadParams("epsilon must lie in (0, 1)")
    w = check_weights(g, w)
    if s == t:
        return LipSpResult(Walk(s, t, ()), None, None)
    dist = dijkstra(g, w, s)[0]
    opt = dist[t]
    if opt == float("inf"):
        raise Unreachable(f"{t} unreachable from {s}")
    if opt == 0.0:
        return LipSpResult(_zero_weight_walk(g, w, s, t), None, None, zero_optimum=True)
    gadget = build_gadget(g, w, s, t, epsilon, rng, opt=opt)
    hat_walk = di_sp(gadget.graph, s, t, epsilon / 4.0, rng)
    return LipSpResult(map_walk_back(gadget, hat_walk), gadget, hat_walk)


def lip_sp(
    g: WeightedMultigraph, w, s: int, t: int, epsilon: float, rng: RandomStream
) -> Walk:
    """(1+epsilon)-approximate weighted s-t walk (per sample, every seed)."""
    return lip_sp_run(g, w, s, t, epsilon, rng).walk


@dataclass(frozen=True)
class CoupledRounding:
    """Joint rounding draws for a weight vector and its single-edge bump."""

    b1: float
    b2: float
    x1: np.ndarray
    x2: np.ndarray
    hat1: np.ndarray
    hat2: np.ndarray


def coupled_rounding_st(
    g: WeightedMultigraph,
    w,
    s: int,
    t: int,
    f: int,
    delta: float,
    epsilon: float,
    rng: RandomStream,
) -> CoupledRounding:
    """Couple the (b, x) draws of runs on w and w + delta*1_f.

    b uses the maximal-overlap coupling of the two sampling intervals.
    Conditioned on equal b, every x(e) with e != f is shared and x(f) is
    passed through the wrap map x - delta/b (mod 1), which makes the
    rounded lengths satisfy: hat2(f) - hat1(f) = 1 exactly when
    x(f) <= delta/b, and all other lengths coincide.  Requires
    delta <= eps*opt/(12 n) so delta never exceeds b.
    """
    w = check_weights(g, w)
    if delta <= 0:
        raise BadParams("delta must be positive")
    w2 = w.copy()
    w2[f] += delta
    opt1 = dijkstra(g, w, s)[0][t]
    opt2 = dijkstra(g, w2, s)[0][t]
    if not (0 < opt1 < float("inf")) or not (0 < opt2 < float("inf")):
        raise BadParams("coupled rounding needs positive finite optima")
    if delta > epsilon * opt1 / (12.0 * g.n):
        raise BadParams("delta too large: must not exceed eps*opt/(12 n)")
    lo1, hi1 = epsilon * opt1 / (12.0 * g.n), epsilon * opt1 / (6.0 * g.n)
    lo2, hi2 = epsilon * opt2 / (12.0 * g.n), epsilon * opt2 / (6.0 * g.n)
    b1, b2 = max_overlap_uniform_pair(
        rng.random("lipsp", "b"), rng.random("lipsp", "b", "accept"), lo1, hi1, lo2, hi2
    )
    x1 = np.array([rng.random("lipsp", "x", e) for e in range(g.m)])
    x2 = x1.copy()
    if b1 == b2:
        x2[f] = shift_wrap(x1[f], delta / b1)
    _, hat1 = rounded_lengths(w, b1, x1)
    _, hat2 = rounded_lengths(w2, b2, x2)
    return CoupledRounding(b1=b1, b2=b2, x1=x1, x2=x2, hat1=hat1, hat2=hat2)


def coupled_lip_sp(
    g: WeightedMultigraph,
    w,
    s: int,
    t: int,
    f: int,
    delta: float,
    epsilon: float,
    rng: RandomStream,
) -> tuple[Walk, Walk]:
    """One coupled pair of output walks for (w, w + delta*1_f).

    The directed walk routine consumes the same keyed stream in both runs,
    so all pivot and gamma draws are shared positionally.
    """
    cr = coupled_rounding_st(g, w, s, t, f, delta, epsilon, rng)
    w2 = check_weights(g, w).copy()
    w2[f] += delta
    walks = []
    for weights, b, x in ((w, cr.b1, cr.x1), (w2, cr.b2, cr.x2)):
        gadget = build_gadget_from(g, weights, epsilon, b, x)
        hat_walk = di_sp(gadget.graph, s, t, epsilon / 4.0, rng)
        walks.append(map_walk_back(gadget, hat_walk))
    return walks[0], walks[1]
