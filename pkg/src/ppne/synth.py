"""Synthetic graphs: Erdos-Renyi G(n, p) and a planted-partition model with labels."""
from __future__ import annotations

import numpy as np

from .graph import Graph


def triangle_pair(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode row-major indices of the strict upper triangle of an n x n matrix."""
    k = np.asarray(k, dtype=np.int64)
    total = n * (n - 1) // 2
    i = n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7.0) / 2.0 - 0.5).astype(np.int64)
    j = k + i + 1 - total + (n - i) * (n - i - 1) // 2
    return i, j


def _bernoulli_subset(population: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices of a Bernoulli(p) subset of range(population), sorted."""
    count = rng.binomial(population, p)
    return np.sort(rng.choice(population, size=count, replace=False)) if count else np.zeros(0, np.int64)


def synth_er_graph(nodes: int, avg_degree: float, seed: int) -> Graph:
    """G(n, p) with ``p = avg_degree / (nodes - 1)``."""
    if nodes < 2:
        raise ValueError("nodes must be >= 2")
    p = avg_degree / (nodes - 1)
    if not 0 <= p <= 1:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    i, j = triangle_pair(_bernoulli_subset(nodes * (nodes - 1) // 2, p, rng), nodes)
    return Graph.from_edges(nodes, np.column_stack([i, j]))


def synth_planted_partition(nodes: int, blocks: int, avg_degree: float, mixing: float,
                            seed: int) -> tuple[Graph, np.ndarray]:
    """Equal-size blocks; a fraction ``mixing`` of expected degree falls between blocks.

    Returns the graph and the block label of every node.
    """
    if blocks < 1 or nodes < 2 * blocks:
        raise ValueError("need at least two nodes per block")
    if not 0 <= mixing <= 1:
        raise ValueError("mixing must lie in [0, 1]")
    labels = np.repeat(np.arange(blocks), -(-nodes // blocks))[:nodes]
    sizes = np.bincount(labels, minlength=blocks)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    size = nodes / blocks
    p_in = avg_degree * (1 - mixing) / max(size - 1, 1)
    p_out = avg_degree * mixing / max(nodes - size, 1) if blocks > 1 else 0.0
    if p_in > 1 or p_out > 1:
        raise ValueError("requested degree is too high for the block sizes")
    rng = np.random.default_rng(seed)
    parts = []
    for a in range(blocks):
        for b in range(a, blocks):
            if a == b:
                i, j = triangle_pair(_bernoulli_subset(sizes[a] * (sizes[a] - 1) // 2, p_in, rng), sizes[a])
                parts.append(np.column_stack([i + starts[a], j + starts[a]]))
            else:
                k = _bernoulli_subset(sizes[a] * sizes[b], p_out, rng)
                parts.append(np.column_stack([k // sizes[b] + starts[a], k % sizes[b] + starts[b]]))
    return Graph.from_edges(nodes, np.vstack(parts)), labels


def format_edge_list(graph: Graph) -> str:
    return "".join(f"{i} {j}\n" for i, j in graph.edges().tolist())


def format_labels(labels: np.ndarray, tokens: list[str] | None = None) -> str:
    return "".join(f"{tokens[i] if tokens else i}\t{int(l)}\n" for i, l in enumerate(labels))
