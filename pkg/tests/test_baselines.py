from collections import Counter, deque

import numpy as np
import pytest

from ppne.baselines import (betweenness_perturb, degree_perturb, dice_perturb, edge_betweenness,
                            random_perturb)
from ppne.graph import Graph, PrivatePairSet
from ppne.optimizer import replay

from conftest import er


def flipped_pairs(plan):
    return [(f.i, f.j, f.delta) for f in plan.flips]


def check_valid(graph, plan):
    pairs = [(f.i, f.j) for f in plan.flips]
    assert len(set(pairs)) == len(pairs)
    assert replay(graph, plan.flips).same_as(plan.graph)


def bfs_counts(adj, s):
    n = len(adj)
    dist = [-1] * n
    sigma = [0] * n
    dist[s], sigma[s] = 0, 1
    q = deque([s])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
            if dist[v] == dist[u] + 1:
                sigma[v] += sigma[u]
    return dist, sigma


def naive_edge_betweenness(graph):
    """For every unordered pair (s, t) and edge (u, v): the share of s-t shortest paths through the edge."""
    n = graph.node_count
    adj = [graph.neighbors(i).tolist() for i in range(n)]
    info = [bfs_counts(adj, s) for s in range(n)]
    out = {}
    for u, v in graph.edges().tolist():
        total = 0.0
        for s in range(n):
            ds, ss = info[s]
            for t in range(s + 1, n):
                dt, st = info[t]
                if ds[t] < 0:
                    continue
                for a, b in ((u, v), (v, u)):
                    if ds[a] >= 0 and dt[b] >= 0 and ds[a] + 1 + dt[b] == ds[t]:
                        total += ss[a] * st[b] / ss[t]
        out[(u, v)] = total
    return out


# random

def test_random_budget_zero():
    g = er(10, 0.3, 0)
    plan = random_perturb(g, 0, seed=0)
    assert plan.flips == [] and plan.graph.same_as(g)


def test_random_cardinality_and_determinism():
    g = er(20, 0.2, 1)
    a = random_perturb(g, 5, seed=3)
    b = random_perturb(g, 5, seed=3)
    assert flipped_pairs(a) == flipped_pairs(b)
    assert len({(i, j) for i, j, _ in flipped_pairs(a)}) == 5
    assert all(d == (-1 if g.has_edge(i, j) else 1) for i, j, d in flipped_pairs(a))
    check_valid(g, a)
    assert flipped_pairs(random_perturb(g, 5, seed=4)) != flipped_pairs(a)


def test_random_avoids_private_pairs_and_warns_when_exhausted():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    pairs = PrivatePairSet(np.array([[2, 3]]), np.array([[0, 3]]))
    plan = random_perturb(g, 10, seed=0, pairs=pairs)
    assert len(plan.flips) == 4
    assert plan.warnings
    assert not {(f.i, f.j) for f in plan.flips} & {(2, 3), (0, 3)}


# degree

def test_degree_star_deletions_uniform():
    star = Graph.from_edges(5, [(0, k) for k in range(1, 5)])
    counts = Counter()
    for seed in range(2000):
        plan = degree_perturb(star, 1, seed, deletion_share=1.0)
        assert plan.flips[0].delta == -1
        counts[(plan.flips[0].i, plan.flips[0].j)] += 1
    assert set(counts) == {(0, k) for k in range(1, 5)}
    # four equally likely edges: each near 500 of 2000
    assert all(abs(c - 500) < 90 for c in counts.values())


def test_degree_low_sum_edges_deleted_more_often_than_hub_edges():
    # path 0-1-2-3-4 plus hub 5 attached to every path node
    edges = [(k, k + 1) for k in range(4)] + [(k, 5) for k in range(5)]
    g = Graph.from_edges(6, edges)
    counts = Counter()
    for seed in range(1000):
        f = degree_perturb(g, 1, seed, deletion_share=1.0).flips[0]
        counts["hub" if f.j == 5 else "path"] += 1
    # per edge: path edges have degree sum 5-6, hub edges 7-8
    assert counts["path"] / 4 > counts["hub"] / 5


def test_degree_additions_favor_high_degree_pairs():
    edges = [(0, k) for k in range(1, 6)] + [(6, k) for k in range(7, 12)]
    g = Graph.from_edges(12, edges)
    counts = Counter()
    for seed in range(500):
        f = degree_perturb(g, 1, seed, deletion_share=0.0).flips[0]
        assert f.delta == 1
        counts[(f.i, f.j)] += 1
    # (0, 6) has degree sum 10, the largest of any absent pair
    assert counts.most_common(1)[0][0] == (0, 6)


@pytest.mark.parametrize("budget", [1, 4, 7])
def test_degree_budget_and_interleaving(budget):
    g = er(20, 0.25, 2)
    plan = degree_perturb(g, budget, seed=1)
    assert len(plan.flips) == budget
    deltas = [f.delta for f in plan.flips]
    assert deltas.count(-1) == -(-budget // 2)
    assert deltas[::2] == [-1] * len(deltas[::2])
    check_valid(g, plan)


# betweenness

def test_betweenness_bridge_deleted_first():
    g = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
    plan = betweenness_perturb(g, 1)
    assert flipped_pairs(plan) == [(2, 3, -1)]
    assert edge_betweenness(g)[(2, 3)] == 9.0


def test_betweenness_cycle_ties_in_canonical_order():
    c4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    plan = betweenness_perturb(c4, 4)
    assert [(f.i, f.j) for f in plan.flips] == [(0, 1), (0, 3), (1, 2), (2, 3)]


def test_betweenness_budget_checked():
    with pytest.raises(ValueError):
        betweenness_perturb(Graph.from_edges(3, [(0, 1)]), 2)


@pytest.mark.parametrize("seed", [0, 1])
def test_betweenness_matches_path_counting_oracle(seed):
    g = er(30, 0.12, seed)
    got = edge_betweenness(g)
    want = naive_edge_betweenness(g)
    assert set(got) == set(want)
    for e in want:
        assert got[e] == pytest.approx(want[e], abs=1e-9)


# DICE

def test_dice_additions_only_when_no_pos_pairs():
    g = er(12, 0.3, 3)
    neg = PrivatePairSet(np.zeros((0, 2), np.int64), np.zeros((0, 2), np.int64))
    plan = dice_perturb(g, neg, 6, seed=0)
    assert len(plan.flips) == 6
    assert all(f.delta == 1 for f in plan.flips)
    assert plan.warnings


def test_dice_deletions_only_when_every_node_touches_pos():
    g = Graph.from_edges(4, [(0, 2), (1, 3), (0, 3)])
    pairs = PrivatePairSet(np.array([[0, 1], [2, 3]]), np.zeros((0, 2), np.int64))
    plan = dice_perturb(g, pairs, 2, seed=0)
    assert [f.delta for f in plan.flips] == [-1, -1]
    assert plan.warnings


def test_dice_mixed_membership_audit():
    g = er(20, 0.25, 4)
    missing = [(i, j) for i in range(20) for j in range(i + 1, 20) if not g.has_edge(i, j)]
    pos = np.array([missing[0], missing[5]])
    pairs = PrivatePairSet(pos, np.array([missing[-1]]))
    touched = set(pos.ravel().tolist())
    plan = dice_perturb(g, pairs, 10, seed=2)
    dels = [f for f in plan.flips if f.delta < 0]
    adds = [f for f in plan.flips if f.delta > 0]
    assert len(dels) == 5 and len(adds) == 5
    assert all(f.i in touched or f.j in touched for f in dels)
    assert all(f.i not in touched and f.j not in touched for f in adds)
    check_valid(g, plan)


def test_dice_odd_budget_favors_deletion_and_is_deterministic():
    g = er(20, 0.25, 5)
    pairs = PrivatePairSet(np.array([[0, 1]]) if not g.has_edge(0, 1) else np.array([[0, 2]]),
                           np.zeros((0, 2), np.int64))
    a = dice_perturb(g, pairs, 5, seed=9)
    assert [f.delta for f in a.flips].count(-1) == 3
    assert flipped_pairs(a) == flipped_pairs(dice_perturb(g, pairs, 5, seed=9))
