"""Comparison perturbation strategies: random, degree-based, betweenness and DICE."""
from __future__ import annotations

import logging
import math

import networkx as nx
import numpy as np

from .graph import FlipDelta, Graph, PrivatePairSet, apply_flips
from .optimizer import ENUMERATION_CAP, AppliedFlip, PerturbationPlan, pair_codes, sample_candidates

log = logging.getLogger(__name__)


def _plan(graph: Graph, flips: list[FlipDelta], warnings: list[str]) -> PerturbationPlan:
    nan = float("nan")
    applied = [AppliedFlip(t + 1, f.i, f.j, f.delta, nan, nan, nan) for t, f in enumerate(flips)]
    return PerturbationPlan(applied, apply_flips(graph, flips), [], False, warnings)


def _warn(warnings: list[str], msg: str) -> None:
    log.warning(msg)
    warnings.append(msg)


def _split(budget: int, n_del_avail: int, n_add_avail: int, deletion_share: float) -> tuple[int, int]:
    """Deletion/addition counts; rounding favors deletion and shortfalls move to the other side."""
    n_del = min(math.ceil(budget * deletion_share), n_del_avail)
    n_add = min(budget - n_del, n_add_avail)
    n_del = min(budget - n_add, n_del_avail)
    return n_del, n_add


def _interleave(deletions: list[FlipDelta], additions: list[FlipDelta]) -> list[FlipDelta]:
    out = []
    for k in range(max(len(deletions), len(additions))):
        if k < len(deletions):
            out.append(deletions[k])
        if k < len(additions):
            out.append(additions[k])
    return out


def _absent_pairs(graph: Graph, nodes: np.ndarray, excluded: np.ndarray) -> np.ndarray:
    """Every unlinked pair among ``nodes`` whose code is not in ``excluded``."""
    n = graph.node_count
    nodes = np.sort(nodes)
    a, b = np.triu_indices(len(nodes), k=1)
    i, j = nodes[a], nodes[b]
    keep = ~graph.has_edges(i, j) & ~np.isin(i * n + j, excluded)
    return np.column_stack([i[keep], j[keep]])


def _draw_absent(graph: Graph, nodes: np.ndarray, excluded: np.ndarray, count: int,
                 rng: np.random.Generator, weighted: bool) -> np.ndarray:
    """``count`` distinct absent pairs among ``nodes``, uniformly or with weight ``d_i + d_j``."""
    if count == 0:
        return np.zeros((0, 2), np.int64)
    deg = graph.degrees.astype(float)
    n = graph.node_count
    if len(nodes) <= ENUMERATION_CAP:
        cand = _absent_pairs(graph, nodes, excluded)
        if weighted:
            w = deg[cand[:, 0]] + deg[cand[:, 1]]
            count = min(count, int((w > 0).sum()))
            pick = rng.choice(len(cand), size=count, replace=False, p=w / w.sum())
        else:
            pick = rng.choice(len(cand), size=min(count, len(cand)), replace=False)
        return cand[pick]
    # first endpoint by degree, second uniform: P(pair) is proportional to d_i + d_j
    p_first = deg[nodes] / deg[nodes].sum() if weighted else None
    chosen: dict[int, None] = {}
    while len(chosen) < count:
        size = 2 * (count - len(chosen)) + 16
        u = rng.choice(nodes, size=size, p=p_first)
        v = rng.choice(nodes, size=size)
        keep = u != v
        lo, hi = np.minimum(u[keep], v[keep]), np.maximum(u[keep], v[keep])
        ok = ~graph.has_edges(lo, hi) & ~np.isin(lo * n + hi, excluded)
        for c in (lo[ok] * n + hi[ok]).tolist():
            chosen.setdefault(c, None)
            if len(chosen) == count:
                break
    codes = np.array(list(chosen), dtype=np.int64)
    return np.column_stack([codes // n, codes % n])


def random_perturb(graph: Graph, budget: int, seed: int, pairs: PrivatePairSet | None = None) -> PerturbationPlan:
    """``budget`` flips on pairs drawn uniformly from the optimizer's candidate universe."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    pairs = pairs or PrivatePairSet.empty()
    warnings: list[str] = []
    if budget == 0:
        return _plan(graph, [], warnings)
    cand = sample_candidates(graph, pairs, [], budget, seed, 0, warnings)
    rng = np.random.default_rng([seed, 1])
    cand = cand[rng.permutation(len(cand))]
    return _plan(graph, [FlipDelta(int(i), int(j), int(d)) for i, j, d in cand], warnings)


def degree_perturb(graph: Graph, budget: int, seed: int, pairs: PrivatePairSet | None = None,
                   deletion_share: float = 0.5) -> PerturbationPlan:
    """Delete links with probability ~ 1/(d_i + d_j); add absent pairs with probability ~ d_i + d_j."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    pairs = pairs or PrivatePairSet.empty()
    warnings: list[str] = []
    rng = np.random.default_rng(seed)
    n = graph.node_count
    edges = graph.edges()
    excluded = np.sort(pair_codes(pairs.all_pairs(), n))
    absent_total = n * (n - 1) // 2 - len(edges) - len(excluded)
    n_del, n_add = _split(budget, len(edges), absent_total, deletion_share)
    deg = graph.degrees.astype(float)
    w = 1.0 / (deg[edges[:, 0]] + deg[edges[:, 1]])
    dels = edges[rng.choice(len(edges), size=n_del, replace=False, p=w / w.sum())] if n_del else edges[:0]
    adds = _draw_absent(graph, np.arange(n), excluded, n_add, rng, weighted=True)
    if len(dels) + len(adds) < budget:
        _warn(warnings, f"degree baseline: only {len(dels) + len(adds)} of {budget} flips available")
    flips = _interleave([FlipDelta(int(a), int(b), -1) for a, b in dels],
                        [FlipDelta(int(a), int(b), 1) for a, b in adds])
    return _plan(graph, flips, warnings)


def edge_betweenness(graph: Graph) -> dict[tuple[int, int], float]:
    """Unnormalised shortest-path edge betweenness, keyed by canonical pair."""
    G = nx.Graph()
    G.add_nodes_from(range(graph.node_count))
    G.add_edges_from(map(tuple, graph.edges().tolist()))
    bc = nx.edge_betweenness_centrality(G, normalized=False)
    return {(min(u, v), max(u, v)): float(val) for (u, v), val in bc.items()}


def betweenness_perturb(graph: Graph, budget: int) -> PerturbationPlan:
    """Delete the ``budget`` links of highest betweenness; ties go to the lowest pair."""
    if budget > graph.edge_count:
        raise ValueError(f"budget {budget} exceeds the {graph.edge_count} links of the graph")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    bc = edge_betweenness(graph)
    ranked = sorted(bc, key=lambda e: (-round(bc[e], 9), e))
    return _plan(graph, [FlipDelta(i, j, -1) for i, j in ranked[:budget]], [])


def dice_perturb(graph: Graph, pairs: PrivatePairSet, budget: int, seed: int,
                 deletion_share: float = 0.5) -> PerturbationPlan:
    """Delete links touching private-link nodes; add links among the other nodes."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    warnings: list[str] = []
    rng = np.random.default_rng(seed)
    n = graph.node_count
    touched = np.zeros(n, bool)
    touched[pairs.pos.ravel()] = True
    edges = graph.edges()
    eligible = edges[touched[edges[:, 0]] | touched[edges[:, 1]]]
    others = np.flatnonzero(~touched)
    excluded = np.sort(pair_codes(pairs.all_pairs(), n))
    if len(others) <= ENUMERATION_CAP:
        absent = _absent_pairs(graph, others, excluded)
        n_absent = len(absent)
    else:
        absent = None
        n_absent = len(others) * (len(others) - 1) // 2
    if budget and (len(eligible) == 0 or n_absent == 0):
        side = "deletion" if len(eligible) == 0 else "addition"
        _warn(warnings, f"DICE baseline: empty {side} set; the budget goes to the other side")
    n_del, n_add = _split(budget, len(eligible), n_absent, deletion_share)
    dels = eligible[rng.choice(len(eligible), size=n_del, replace=False)] if n_del else eligible[:0]
    if absent is not None:
        adds = absent[rng.choice(n_absent, size=n_add, replace=False)] if n_add else absent[:0]
    else:
        adds = _draw_absent(graph, others, excluded, n_add, rng, weighted=False)
    if len(dels) + len(adds) < budget:
        _warn(warnings, f"DICE baseline: only {len(dels) + len(adds)} of {budget} flips available")
    flips = _interleave([FlipDelta(int(a), int(b), -1) for a, b in dels],
                        [FlipDelta(int(a), int(b), 1) for a, b in adds])
    return _plan(graph, flips, warnings)
