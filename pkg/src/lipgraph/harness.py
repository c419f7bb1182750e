"""Experiment orchestration: instances, stability estimators, CSV reports.

Two estimators are reported for every perturbation experiment:

* coupled upper bound: paired runs sharing a keyed stream, mean output
  distance over pairs divided by the perturbation size;
* empirical EMD: independent sampling into empirical distributions, exact
  transportation distance between them, divided by the perturbation size.

The coupled estimate can never fall below the EMD estimate beyond Monte
Carlo error (a coupling is feasible for the minimum).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .contraction_sp import sp
from .errors import BadParams, InvalidEdge
from .exact import dijkstra, exact_max_weight_matching, hungarian_bipartite, kruskal_mst
from .graphs import (
    ContractionResult,
    WeightedMultigraph,
    check_weights,
    contract_edge,
    read_bipartite,
    read_edge_list,
)
from .metrics import (
    EdgeSetDistribution,
    d_u,
    d_w,
    emd_empirical,
    unweighted_cost,
    weighted_cost,
)
from .mst import coupled_lip_mst, coupled_plip_mst, lip_mst, plip_mst
from .mwm import coupled_lip_mwm, lip_mwm
from .bmatch import coupled_plip_mwbm, plip_mwbm
from .lip_sp import coupled_lip_sp, lip_sp
from .rng import RandomStream

CSV_SCHEMA_VERSION = "lipgraph-csv v1"

CSV_COLUMNS = (
    "algorithm",
    "instance",
    "n",
    "m",
    "epsilon",
    "alpha",
    "gamma_override",
    "delta",
    "edge",
    "metric",
    "trials",
    "seed",
    "ratio_mean",
    "ratio_max",
    "guarantee",
    "violations",
    "coupled_estimate",
    "coupled_stderr",
    "coupled_ratio",
    "emd_estimate",
    "emd_stderr",
    "emd_ratio",
)


@dataclass(frozen=True)
class GraphInstance:
    graph: WeightedMultigraph
    weights: np.ndarray
    name: str


@dataclass(frozen=True)
class BipartiteInstance:
    weights: np.ndarray
    name: str


@dataclass(frozen=True)
class LipschitzEstimate:
    metric: str
    delta: float | None
    trials: int
    coupled_mean: float
    coupled_stderr: float
    emd: float
    emd_stderr: float

    @property
    def coupled_ratio(self) -> float:
        return self.coupled_mean / self.delta if self.delta else self.coupled_mean

    @property
    def emd_ratio(self) -> float:
        return self.emd / self.delta if self.delta else self.emd


def gen_instance(kind: str, params: dict | None, seed: int):
    """Deterministic instance generator; same (kind, params, seed) -> same instance."""
    params = dict(params or {})
    rng = RandomStream(seed, ("gen", kind))

    def take(name, default=None):
        if name in params:
            return params.pop(name)
        if default is None:
            raise BadParams(f"{kind} requires parameter {name!r}")
        return default

    if kind == "path":
        k = int(take("k"))
        if k < 1:
            raise BadParams("path needs k >= 1 edges")
        g = WeightedMultigraph(k + 1, tuple((i, i + 1) for i in range(k)))
        inst = GraphInstance(g, np.ones(k), f"path({k})")
    elif kind == "cycle":
        n = int(take("n"))
        if n < 3:
            raise BadParams("cycle needs n >= 3")
        g = WeightedMultigraph(n, tuple((i, (i + 1) % n) for i in range(n)))
        inst = GraphInstance(g, np.ones(n), f"cycle({n})")
    elif kind == "grid":
        rows, cols = int(take("rows")), int(take("cols"))
        if rows < 1 or cols < 1:
            raise BadParams("grid needs positive rows and cols")
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        g = WeightedMultigraph(rows * cols, tuple(edges))
        inst = GraphInstance(g, np.ones(len(edges)), f"grid({rows}x{cols})")
    elif kind == "random-gnm":
        n, m = int(take("n")), int(take("m"))
        w_min = float(take("w_min", 1.0))
        w_max = float(take("w_max", 9.0))
        integer = bool(take("integer", True))
        if n < 2 or m < n - 1:
            raise BadParams("random-gnm needs n >= 2 and m >= n-1")
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        if m > len(pairs):
            raise BadParams("random-gnm: m exceeds simple-graph capacity")
        for attempt in range(1000):
            sub = rng.sub("attempt", attempt)
            perm = sub.permutation(len(pairs), "edges")
            edges = tuple(pairs[i] for i in sorted(perm[:m]))
            g = WeightedMultigraph(n, edges)
            if g.is_connected():
                break
        else:
            raise BadParams("random-gnm: could not draw a connected graph")
        if integer:
            lo, hi = int(w_min), int(w_max)
            w = np.array([lo + sub.randint(hi - lo + 1, "w", e) for e in range(m)], dtype=float)
        else:
            w = np.array([sub.uniform(w_min, w_max, "w", e) for e in range(m)])
        inst = GraphInstance(g, w, f"random-gnm({n}x{m})")
    elif kind == "gadget-thm1":
        g = WeightedMultigraph(2, ((0, 1), (0, 1)))
        inst = GraphInstance(g, np.array([0.0, 1.0]), "gadget-thm1")
    elif kind == "gadget-thm6":
        eps = float(take("epsilon"))
        if not (0 < eps < 0.1):
            raise BadParams("gadget-thm6 needs epsilon in (0, 0.1)")
        g = WeightedMultigraph(2, ((0, 1), (0, 1)))
        inst = GraphInstance(g, np.array([1.0, 1.0 - 10.0 * eps]), f"gadget-thm6({eps})")
    elif kind == "gadget-thm8":
        g = WeightedMultigraph(2, ((0, 1), (0, 1)))
        inst = GraphInstance(g, np.array([1.0, 0.0]), "gadget-thm8")
    elif kind == "bipartite-random":
        nu, nv = int(take("nU")), int(take("nV"))
        w_min = float(take("w_min", 0.0))
        w_max = float(take("w_max", 1.0))
        if nu < 1 or nv < 1:
            raise BadParams("bipartite-random needs positive sides")
        w = np.array(
            [[rng.uniform(w_min, w_max, "w", i, j) for j in range(nv)] for i in range(nu)]
        )
        inst = BipartiteInstance(w, f"bipartite-random({nu}x{nv})")
    else:
        raise BadParams(f"unknown instance kind {kind!r}")
    if params:
        raise BadParams(f"unused parameters for {kind}: {sorted(params)}")
    return inst


# ---------------------------------------------------------------------------
# algorithm adapters: single run and coupled pair, both returning multisets


def _single_run(alg: str, g, w, point: dict, stream: RandomStream):
    if alg == "mst":
        return lip_mst(g, w, point["epsilon"], stream).tree.multiset
    if alg == "pmst":
        return plip_mst(g, w, point["epsilon"], stream).tree.multiset
    if alg == "sp":
        return lip_sp(g, w, point["source"], point["target"], point["epsilon"], stream).multiset
    if alg == "mwm":
        return lip_mwm(g, w, point["alpha"], stream).multiset
    raise BadParams(f"no single-run adapter for algorithm {alg!r}")


def _coupled_run(alg: str, g, w, f: int, delta: float, point: dict, stream: RandomStream):
    if alg == "mst":
        t1, t2 = coupled_lip_mst(g, w, f, delta, point["epsilon"], stream)
        return t1.multiset, t2.multiset
    if alg == "pmst":
        r1, r2 = coupled_plip_mst(g, w, f, delta, point["epsilon"], stream)
        return r1.tree.multiset, r2.tree.multiset
    if alg == "sp":
        w1, w2 = coupled_lip_sp(
            g, w, point["source"], point["target"], f, delta, point["epsilon"], stream
        )
        return w1.multiset, w2.multiset
    if alg == "mwm":
        m1, m2, _ = coupled_lip_mwm(g, w, f, delta, point["alpha"], stream)
        return m1.multiset, m2.multiset
    raise BadParams(f"no coupled adapter for algorithm {alg!r}")


def perturbation_direction(alg: str) -> int:
    """+1 bumps the weight up, -1 down (matching drops weights)."""
    return -1 if alg == "mwm" else 1


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return 0.0, 0.0
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def emd_between_samples(samples1, samples2, cost, batches: int = 4) -> tuple[float, float]:
    """EMD between two sample sets plus a batched standard error."""
    p = EdgeSetDistribution.from_samples(samples1)
    q = EdgeSetDistribution.from_samples(samples2)
    value = emd_empirical(p, q, cost)
    n = min(len(samples1), len(samples2))
    if n < 2 * batches:
        return value, 0.0
    per_batch = []
    size = n // batches
    for k in range(batches):
        pk = EdgeSetDistribution.from_samples(samples1[k * size : (k + 1) * size])
        qk = EdgeSetDistribution.from_samples(samples2[k * size : (k + 1) * size])
        per_batch.append(emd_empirical(pk, qk, cost))
    spread = float(np.std(per_batch, ddof=1) / math.sqrt(batches))
    return value, spread


def estimate_lipschitz(
    alg: str,
    g: WeightedMultigraph,
    w,
    f: int,
    delta: float,
    trials: int,
    seed: int,
    metric: str = "weighted",
    point: dict | None = None,
) -> LipschitzEstimate:
    """Coupled and empirical-EMD stability estimates for one perturbation."""
    if delta <= 0:
        raise BadParams("delta must be positive")
    if metric not in ("weighted", "unweighted"):
        raise BadParams("metric must be 'weighted' or 'unweighted'")
    w = check_weights(g, w)
    if not (0 <= f < g.m):
        raise InvalidEdge(f"edge {f} out of range")
    point = dict(point or {})
    direction = perturbation_direction(alg)
    w2 = w.copy()
    w2[f] += direction * delta
    if w2[f] < 0:
        raise BadParams("downward perturbation below zero")

    base = RandomStream(seed)
    pair_dists = []
    for k in range(trials):
        stream = base.sub("coupled", k)
        ms1, ms2 = _coupled_run(alg, g, w, f, delta, point, stream)
        if metric == "weighted":
            pair_dists.append(d_w(ms1, w, ms2, w2))
        else:
            pair_dists.append(d_u(ms1, ms2))
    coupled_mean, coupled_stderr = _mean_stderr(pair_dists)

    samples1 = [_single_run(alg, g, w, point, base.sub("ind", "p", k)) for k in range(trials)]
    samples2 = [_single_run(alg, g, w2, point, base.sub("ind", "q", k)) for k in range(trials)]
    cost = weighted_cost(w, w2) if metric == "weighted" else unweighted_cost
    emd, emd_stderr = emd_between_samples(samples1, samples2, cost)

    return LipschitzEstimate(
        metric=metric,
        delta=delta,
        trials=trials,
        coupled_mean=coupled_mean,
        coupled_stderr=coupled_stderr,
        emd=emd,
        emd_stderr=emd_stderr,
    )


def estimate_bipartite_pointwise(
    w,
    cell: tuple,
    delta: float,
    epsilon: float,
    trials: int,
    seed: int,
) -> LipschitzEstimate:
    """Pointwise stability of the bipartite matcher at one weight cell.

    Matchings are compared as sets of (row, col) cells under the plain
    symmetric-difference metric.  Coupled runs share (B, row, column)
    randomness; the EMD route samples both instances independently.
    """
    w = np.asarray(w, dtype=float)
    nu, nv = w.shape
    if delta <= 0:
        raise BadParams("delta must be positive")
    if not (0 <= cell[0] < nu and 0 <= cell[1] < nv):
        raise InvalidEdge(f"cell {cell} out of range")
    w2 = w.copy()
    w2[cell] += delta

    def ids(matching):
        from collections import Counter

        return Counter({i * nv + j: 1 for i, j in matching})

    base = RandomStream(seed)
    pair_dists = []
    for k in range(trials):
        out = coupled_plip_mwbm(nu, nv, w, cell, delta, epsilon, base.sub("coupled", k))
        pair_dists.append(d_u(ids(out["matching1"]), ids(out["matching2"])))
    coupled_mean, coupled_stderr = _mean_stderr(pair_dists)

    samples1 = [
        ids(plip_mwbm(nu, nv, w, epsilon, base.sub("ind", "p", k)).matching)
        for k in range(trials)
    ]
    samples2 = [
        ids(plip_mwbm(nu, nv, w2, epsilon, base.sub("ind", "q", k)).matching)
        for k in range(trials)
    ]
    emd, emd_stderr = emd_between_samples(samples1, samples2, unweighted_cost)
    return LipschitzEstimate(
        metric="unweighted",
        delta=delta,
        trials=trials,
        coupled_mean=coupled_mean,
        coupled_stderr=coupled_stderr,
        emd=emd,
        emd_stderr=emd_stderr,
    )


def estimate_contraction_sensitivity(
    g: WeightedMultigraph,
    s: int,
    t: int,
    epsilon: float,
    e: int,
    gamma_override: float | None,
    trials: int,
    seed: int,
) -> LipschitzEstimate:
    """EMD between unweighted walk distributions on G and G/e.

    The contracted edge must not touch s or t.  Coupled pairs share the
    full keyed stream, so pivot draws align positionally across the two
    graphs; walks from G/e are translated back to original edge ids.
    """
    if not (0 <= e < g.m):
        raise InvalidEdge(f"edge {e} out of range")
    u, v = g.edges[e]
    if u in (s, t) or v in (s, t):
        raise InvalidEdge("contracted edge must not touch the endpoints")
    cres: ContractionResult = contract_edge(g, e)
    s2, t2 = cres.vertex_map[s], cres.vertex_map[t]
    base = RandomStream(seed)

    def run_pair(stream):
        w1 = sp(g, s, t, epsilon, stream, gamma_override=gamma_override)
        w2 = sp(cres.graph, s2, t2, epsilon, stream, gamma_override=gamma_override)
        return w1.multiset, cres.multiset_to_original(w2.multiset)

    pair_dists = []
    for k in range(trials):
        ms1, ms2 = run_pair(base.sub("coupled", k))
        pair_dists.append(d_u(ms1, ms2))
    coupled_mean, coupled_stderr = _mean_stderr(pair_dists)

    samples1 = []
    samples2 = []
    for k in range(trials):
        samples1.append(sp(g, s, t, epsilon, base.sub("ind", "p", k), gamma_override=gamma_override).multiset)
        walk2 = sp(cres.graph, s2, t2, epsilon, base.sub("ind", "q", k), gamma_override=gamma_override)
        samples2.append(cres.multiset_to_original(walk2.multiset))
    emd, emd_stderr = emd_between_samples(samples1, samples2, unweighted_cost)

    return LipschitzEstimate(
        metric="unweighted",
        delta=None,
        trials=trials,
        coupled_mean=coupled_mean,
        coupled_stderr=coupled_stderr,
        emd=emd,
        emd_stderr=emd_stderr,
    )


# ---------------------------------------------------------------------------
# experiment runner


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    instance: object  # GraphInstance | BipartiteInstance
    grid: tuple  # tuple of dicts (param points)
    trials: int
    seed: int
    check: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise BadParams("trials must be >= 1")
        for point in self.grid:
            if point.get("delta") is not None and not point["delta"] > 0:
                raise BadParams("delta must be positive")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or '"' in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


class CheckFailure(Exception):
    """An invariant assertion failed under --check."""


def _graph_point_rows(config: ExperimentConfig, point: dict) -> dict:
    inst = config.instance
    g, w = inst.graph, inst.weights
    alg = config.algorithm
    base = RandomStream(config.seed)
    ratios = []
    violations = 0
    guarantee = None

    if alg in ("mst", "pmst"):
        eps = point["epsilon"]
        opt = kruskal_mst(g, w).weight(w)
        guarantee = 1.0 + eps
        for k in range(config.trials):
            stream = base.sub("trial", k)
            res = lip_mst(g, w, eps, stream) if alg == "mst" else plip_mst(g, w, eps, stream)
            value = res.tree.weight(w)
            ratio = value / opt if opt > 0 else 1.0
            ratios.append(ratio)
            if value > guarantee * opt + 1e-9:
                violations += 1
            if config.check:
                res.tree.validate(g)
    elif alg == "sp":
        eps = point["epsilon"]
        s, t = point["source"], point["target"]
        opt = dijkstra(g, w, s)[0][t]
        guarantee = 1.0 + eps
        for k in range(config.trials):
            walk = lip_sp(g, w, s, t, eps, base.sub("trial", k))
            value = walk.weighted_length(w)
            ratio = value / opt if opt > 0 else (1.0 if value == 0 else float("inf"))
            ratios.append(ratio)
            if value > guarantee * opt + 1e-9:
                violations += 1
            if config.check:
                walk.validate(g)
    elif alg == "sp-unweighted":
        eps = point["epsilon"]
        s, t = point["source"], point["target"]
        override = point.get("gamma_override")
        opt = g.hop_dist(s)[t]
        if override is not None:
            guarantee = float(opt) ** (1.0 + 14.0 * override) / opt if opt > 0 else 1.0
        else:
            guarantee = 1.0 + eps
        for k in range(config.trials):
            walk = sp(g, s, t, eps, base.sub("trial", k), gamma_override=override)
            ratio = len(walk) / opt if opt > 0 else 1.0
            ratios.append(ratio)
            if ratio > guarantee + 1e-9:
                violations += 1
            if config.check:
                walk.validate(g)
    elif alg == "mwm":
        alpha = point.get("alpha") or 2.0 + point["epsilon"]
        point = dict(point, alpha=alpha)
        _, opt = exact_max_weight_matching(g, w)
        guarantee = 1.0 / (4.0 * alpha)
        for k in range(config.trials):
            matching = lip_mwm(g, w, alpha, base.sub("trial", k))
            ratios.append(matching.weight(w) / opt if opt > 0 else 1.0)
            if config.check:
                matching.validate(g)
        violations = None
    else:
        raise BadParams(f"unknown algorithm {config.algorithm!r}")

    row = {
        "algorithm": alg,
        "instance": inst.name,
        "n": g.n,
        "m": g.m,
        "epsilon": point.get("epsilon"),
        "alpha": point.get("alpha"),
        "gamma_override": point.get("gamma_override"),
        "delta": point.get("delta"),
        "edge": point.get("edge"),
        "metric": point.get("metric"),
        "trials": config.trials,
        "seed": config.seed,
        "ratio_mean": float(np.mean(ratios)),
        "ratio_max": float(np.max(ratios)),
        "guarantee": guarantee,
        "violations": violations,
    }

    if point.get("delta") is not None and point.get("edge") is not None and alg != "sp-unweighted":
        est = estimate_lipschitz(
            alg,
            g,
            w,
            point["edge"],
            point["delta"],
            config.trials,
            config.seed,
            metric=point.get("metric", "weighted"),
            point=point,
        )
        row.update(
            coupled_estimate=est.coupled_mean,
            coupled_stderr=est.coupled_stderr,
            coupled_ratio=est.coupled_ratio,
            emd_estimate=est.emd,
            emd_stderr=est.emd_stderr,
            emd_ratio=est.emd_ratio,
        )
        if config.check and est.coupled_mean < est.emd - 3.0 * (est.coupled_stderr + est.emd_stderr) - 1e-9:
            raise CheckFailure("coupled estimate fell below the EMD estimate")
    if alg == "sp-unweighted" and point.get("contract_edge") is not None:
        est = estimate_contraction_sensitivity(
            g,
            point["source"],
            point["target"],
            point["epsilon"],
            point["contract_edge"],
            point.get("gamma_override"),
            config.trials,
            config.seed,
        )
        row.update(
            coupled_estimate=est.coupled_mean,
            coupled_stderr=est.coupled_stderr,
            coupled_ratio=est.coupled_ratio,
            emd_estimate=est.emd,
            emd_stderr=est.emd_stderr,
            emd_ratio=est.emd_ratio,
        )
    if config.check and violations:
        raise CheckFailure(f"{violations} per-sample guarantee violations")
    return row


def _bipartite_point_row(config: ExperimentConfig, point: dict) -> dict:
    inst = config.instance
    w = inst.weights
    nu, nv = w.shape
    eps = point["epsilon"]
    base = RandomStream(config.seed)
    _, opt = hungarian_bipartite(w)
    ratios = []
    for k in range(config.trials):
        res = plip_mwbm(nu, nv, w, eps, base.sub("trial", k))
        ratios.append(res.weight(w) / opt if opt > 0 else 1.0)
    row = {
        "algorithm": "bmatch",
        "instance": inst.name,
        "n": nu,
        "m": nv,
        "epsilon": eps,
        "delta": point.get("delta"),
        "edge": point.get("cell"),
        "metric": "unweighted" if point.get("cell") is not None else None,
        "trials": config.trials,
        "seed": config.seed,
        "ratio_mean": float(np.mean(ratios)),
        "ratio_max": float(np.max(ratios)),
        "guarantee": 0.5 - eps,
        "violations": None,
    }
    if point.get("cell") is not None and point.get("delta") is not None:
        est = estimate_bipartite_pointwise(
            w, tuple(point["cell"]), point["delta"], eps, config.trials, config.seed
        )
        row.update(
            coupled_estimate=est.coupled_mean,
            coupled_stderr=est.coupled_stderr,
            coupled_ratio=est.coupled_ratio,
            emd_estimate=est.emd,
            emd_stderr=est.emd_stderr,
            emd_ratio=est.emd_ratio,
        )
        if config.check and est.coupled_mean < est.emd - 3.0 * (est.coupled_stderr + est.emd_stderr) - 1e-9:
            raise CheckFailure("coupled estimate fell below the EMD estimate")
    return row


def run_experiment(config: ExperimentConfig) -> str:
    """Execute the grid and return the CSV text.

    Byte-identical for identical (config, seed).  Wall time is only
    emitted when ``timing`` is set, since it would break reproducibility.
    """
    columns = CSV_COLUMNS + ("wall_time_s",) if config.timing else CSV_COLUMNS
    lines = [f"# {CSV_SCHEMA_VERSION}", ",".join(columns)]
    for point in config.grid:
        started = time.perf_counter()
        if isinstance(config.instance, BipartiteInstance):
            row = _bipartite_point_row(config, point)
        else:
            row = _graph_point_rows(config, point)
        if config.timing:
            row["wall_time_s"] = time.perf_counter() - started
        lines.append(",".join(_fmt(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def load_instance_file(path: str, bipartite: bool = False):
    """Read an instance file in the edge-list or bipartite matrix format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if bipartite:
        return BipartiteInstance(read_bipartite(text), name=path)
    g, w = read_edge_list(text)
    return GraphInstance(g, w, name=path)
