"""Undirected simple graphs, single-link flips and private target pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp


class EdgeListError(ValueError):
    """Raised for a malformed edge-list line."""

    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected two node tokens, got {line!r}")
        self.lineno = lineno


class NodePair(NamedTuple):
    i: int
    j: int

    @classmethod
    def of(cls, u: int, v: int) -> "NodePair":
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-pair ({u}, {v})")
        return cls(u, v) if u < v else cls(v, u)


class FlipDelta(NamedTuple):
    """Flip of the link status of ``pair``: +1 adds the link, -1 removes it."""

    i: int
    j: int
    delta: int

    @property
    def pair(self) -> NodePair:
        return NodePair(self.i, self.j)

    def inverse(self) -> "FlipDelta":
        return FlipDelta(self.i, self.j, -self.delta)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable snapshot of an undirected 0/1 adjacency matrix.

    Flips never mutate a graph; :func:`apply_flip` returns a new one.
    """

    adjacency: sp.csr_matrix
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=np.float64)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "degrees", np.diff(A.indptr).astype(np.int64))

    @classmethod
    def from_edges(cls, node_count: int, edges) -> "Graph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= node_count):
            raise ValueError("edge endpoint out of range")
        edges = edges[edges[:, 0] != edges[:, 1]]
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        codes = np.unique(lo * node_count + hi)
        lo, hi = codes // node_count, codes % node_count
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(node_count, node_count))
        return cls(A)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def volume(self) -> int:
        return int(self.degrees.sum())

    @property
    def edge_count(self) -> int:
        return self.volume // 2

    def has_edge(self, i: int, j: int) -> bool:
        A = self.adjacency
        row = A.indices[A.indptr[i]:A.indptr[i + 1]]
        k = np.searchsorted(row, j)
        return bool(k < len(row) and row[k] == j)

    def has_edges(self, i, j) -> np.ndarray:
        """Vectorised link lookup for index arrays ``i``, ``j``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if i.size == 0:
            return np.zeros(0, dtype=bool)
        return np.asarray(self.adjacency[i, j]).ravel() > 0

    def neighbors(self, i: int) -> np.ndarray:
        A = self.adjacency
        return A.indices[A.indptr[i]:A.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array with ``i < j``, lexicographically sorted."""
        upper = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def same_as(self, other: "Graph") -> bool:
        if other is self:
            return True
        if other.node_count != self.node_count or other.adjacency.nnz != self.adjacency.nnz:
            return False
        return (self.adjacency != other.adjacency).nnz == 0


def load_edge_list(text: str) -> tuple[Graph, dict[str, int]]:
    """Parse a whitespace edge list into a graph and a token -> index map.

    Tokens are numbered in order of first appearance. Self-loops are dropped
    and duplicate edges collapse, but the nodes they mention are kept.
    """
    index: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise EdgeListError(lineno, raw)
        u, v = (index.setdefault(t, len(index)) for t in tokens)
        if u != v:
            edges.append((u, v))
    if not edges:
        raise ValueError("edge list contains no edges")
    return Graph.from_edges(len(index), edges), index


def format_node_map(index: dict[str, int]) -> str:
    return "".join(f"{tok}\t{i}\n" for tok, i in sorted(index.items(), key=lambda kv: kv[1]))


def apply_flip(graph: Graph, flip: FlipDelta) -> Graph:
    return apply_flips(graph, [flip])


def apply_flips(graph: Graph, flips: Iterable[FlipDelta]) -> Graph:
    """Apply several flips at once; each must agree with the current link status."""
    flips = list(flips)
    if not flips:
        return graph
    seen = set()
    for f in flips:
        if f.i == f.j:
            raise ValueError(f"self-pair flip {f}")
        if f.delta not in (1, -1):
            raise ValueError(f"flip delta must be +-1, got {f.delta}")
        key = (min(f.i, f.j), max(f.i, f.j))
        if key in seen:
            raise ValueError(f"pair {key} flipped twice in one batch")
        seen.add(key)
    i = np.array([f.i for f in flips], dtype=np.int64)
    j = np.array([f.j for f in flips], dtype=np.int64)
    delta = np.array([f.delta for f in flips], dtype=np.float64)
    present = graph.has_edges(i, j)
    bad = present != (delta < 0)
    if bad.any():
        f = flips[int(np.argmax(bad))]
        state = "present" if present[int(np.argmax(bad))] else "absent"
        raise ValueError(f"flip {tuple(f)} inconsistent with link status ({state})")
    n = graph.node_count
    change = sp.csr_matrix(
        (np.concatenate([delta, delta]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    )
    return Graph(graph.adjacency + change)


@dataclass(frozen=True, eq=False)
class PrivatePairSet:
    """Hidden links ``pos`` and sampled true non-links ``neg``, each ``(m, 2)`` with i < j."""

    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        for name in ("pos", "neg"):
            arr = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1, 2)
            if len(arr) and (arr[:, 0] == arr[:, 1]).any():
                raise ValueError(f"{name} contains a self-pair")
            arr = np.sort(arr, axis=1)
            object.__setattr__(self, name, arr)
        if set(map(tuple, self.pos)) & set(map(tuple, self.neg)):
            raise ValueError("pos and neg pair sets overlap")

    @classmethod
    def empty(cls) -> "PrivatePairSet":
        return cls(np.zeros((0, 2), np.int64), np.zeros((0, 2), np.int64))

    def swapped(self) -> "PrivatePairSet":
        return PrivatePairSet(self.neg, self.pos)

    def all_pairs(self) -> np.ndarray:
        return np.vstack([self.pos, self.neg])

    def labels(self) -> np.ndarray:
        return np.concatenate([np.ones(len(self.pos), np.int64), np.zeros(len(self.neg), np.int64)])

    def nodes(self) -> np.ndarray:
        return np.unique(self.all_pairs())

    def check(self, graph: Graph) -> None:
        """Validate indices and that no target pair is linked in ``graph``."""
        pairs = self.all_pairs()
        if len(pairs) and pairs.max() >= graph.node_count:
            raise IndexError("private pair index out of range")
        if graph.has_edges(pairs[:, 0], pairs[:, 1]).any():
            raise ValueError("a private target pair is linked in the observed graph")


def sample_private_pairs(complete: Graph, fraction: float, seed: int) -> tuple[Graph, PrivatePairSet]:
    """Hide ``ceil(fraction * |E|)`` random links and draw as many never-linked pairs."""
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    edges = complete.edges()
    n_pos = max(1, math.ceil(fraction * len(edges)))
    if n_pos >= len(edges):
        raise ValueError("hiding that many links leaves the observed graph empty")
    pick = np.sort(rng.choice(len(edges), size=n_pos, replace=False))
    pos = edges[pick]
    observed = apply_flips(complete, [FlipDelta(int(a), int(b), -1) for a, b in pos])
    neg = _sample_non_links(complete, n_pos, rng)
    return observed, PrivatePairSet(pos, neg)


def _sample_non_links(graph: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    n = graph.node_count
    available = n * (n - 1) // 2 - graph.edge_count
    if count > available:
        raise ValueError(f"only {available} non-linked pairs available, need {count}")
    if available <= 4 * count or n <= 300:
        iu, ju = np.triu_indices(n, k=1)
        free = ~graph.has_edges(iu, ju)
        cand = np.column_stack([iu[free], ju[free]])
        return cand[np.sort(rng.choice(len(cand), size=count, replace=False))]
    chosen: dict[tuple[int, int], None] = {}
    while len(chosen) < count:
        u = rng.integers(0, n, size=2 * (count - len(chosen)) + 8)
        v = rng.integers(0, n, size=len(u))
        keep = u != v
        u, v = np.minimum(u[keep], v[keep]), np.maximum(u[keep], v[keep])
        linked = graph.has_edges(u, v)
        for a, b, l in zip(u.tolist(), v.tolist(), linked.tolist()):
            if not l and (a, b) not in chosen:
                chosen[(a, b)] = None
                if len(chosen) == count:
                    break
    return np.array(list(chosen), dtype=np.int64)


def format_pairs(pairs: PrivatePairSet, tokens: list[str] | None = None) -> str:
    name = (lambda i: tokens[i]) if tokens is not None else str
    lines = [f"{name(a)} {name(b)} 1\n" for a, b in pairs.pos]
    lines += [f"{name(a)} {name(b)} 0\n" for a, b in pairs.neg]
    return "".join(lines)


def parse_pairs(text: str, index: dict[str, int] | None = None) -> PrivatePairSet:
    """Read ``u v label`` lines; tokens are resolved through ``index`` when given."""
    pos, neg = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3 or tokens[2] not in ("0", "1"):
            raise ValueError(f"line {lineno}: expected 'u v label' with label 0/1, got {raw!r}")
        try:
            u, v = ((index[t] if index is not None else int(t)) for t in tokens[:2])
        except KeyError as e:
            raise ValueError(f"line {lineno}: unknown node token {e.args[0]!r}") from None
        (pos if tokens[2] == "1" else neg).append(sorted((u, v)))
    return PrivatePairSet(np.array(pos, np.int64).reshape(-1, 2), np.array(neg, np.int64).reshape(-1, 2))
