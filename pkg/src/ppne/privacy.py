"""Privacy leakage of an embedding and the privacy-oriented gradient (POG) estimator.

The estimator chains three linear maps: PL -> embedding rows, embedding ->
target matrix (holding the context factor Y at its least-squares optimum,
``X = Z Y (Y^T Y)^-1``) and target matrix -> one adjacency entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import FlipDelta, Graph, PrivatePairSet
from .netmf import Embedding, EmbeddingParams, TargetMatrix, embed, inverse_degrees, proximity_scale


class StaleStateError(RuntimeError):
    """The cached gradients belong to a different graph than the one queried."""


def _check_pairs(X: np.ndarray, pairs: PrivatePairSet) -> None:
    allp = pairs.all_pairs()
    if len(allp) and (allp.min() < 0 or allp.max() >= X.shape[0]):
        raise IndexError("pair index out of range for embedding")


def privacy_leakage(X: np.ndarray, pairs: PrivatePairSet) -> float:
    _check_pairs(X, pairs)
    pos = np.einsum("ij,ij->i", X[pairs.pos[:, 0]], X[pairs.pos[:, 1]]).sum()
    neg = np.einsum("ij,ij->i", X[pairs.neg[:, 0]], X[pairs.neg[:, 1]]).sum()
    return float(pos - neg)


def privacy_gain(pl_before: float, pl_after: float) -> float:
    return pl_before - pl_after


def grad_pl_wrt_embedding(X: np.ndarray, pairs: PrivatePairSet) -> np.ndarray:
    _check_pairs(X, pairs)
    G = np.zeros_like(X)
    for arr, sign in ((pairs.pos, 1.0), (pairs.neg, -1.0)):
        if len(arr):
            np.add.at(G, arr[:, 0], sign * X[arr[:, 1]])
            np.add.at(G, arr[:, 1], sign * X[arr[:, 0]])
    return G


def context_projector(emb: Embedding, rcond: float = 1e-10) -> np.ndarray:
    """``W = Y (Y^T Y)^-1`` so that the stationary node factor is ``X = Z W``.

    Raises when ``Y^T Y`` is singular to within ``rcond`` (relative), which
    happens when K exceeds the numerical rank of the target.
    """
    Y = emb.Y
    s = np.linalg.svd(Y, compute_uv=False)
    if s.size == 0 or s[-1] ** 2 <= rcond * max(s[0] ** 2, 1e-300):
        raise ValueError("context embedding Y is rank deficient")
    gram = Y.T @ Y
    return np.linalg.solve(gram, Y.T).T


def grad_pl_wrt_target(emb: Embedding, grad_X: np.ndarray) -> np.ndarray:
    """Dense ``dPL/dZ = grad_X W^T``; only sensible for small graphs."""
    W = context_projector(emb)
    return grad_X @ W.T


class AdjacencyGradient:
    """Evaluates ``<dPL/dZ, dZ/da_ij>`` for candidate pairs.

    ``dPL/dZ`` is kept in factored form ``G W^T`` (G non-zero only on rows of
    private-pair nodes), so nothing of size |V|^2 is formed on the sparse path.
    D and vol(A) are held fixed; the clamp region of the log contributes 0.
    """

    def __init__(self, graph: Graph, params: EmbeddingParams, target: TargetMatrix,
                 G: np.ndarray, W: np.ndarray, grad_window: int | None = None):
        self.graph = graph
        self.params = params
        self.target = target
        self.G = np.ascontiguousarray(G)
        self.W = np.ascontiguousarray(W)
        self.grad_window = min(params.window, 2) if grad_window is None else grad_window
        if not 1 <= self.grad_window <= params.window:
            raise ValueError(f"grad_window must lie in [1, {params.window}]")
        self.dinv = inverse_degrees(graph.degrees)
        self.scale = proximity_scale(graph.volume, params)
        self.active = np.abs(self.G).sum(axis=1) > 0
        self._dense_h = None

    def _h_sym(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """(H + H^T)[p, q] with ``H = (dPL/dZ) / P_raw`` on the target support."""
        out = np.zeros(len(p))
        live = self.active[p] | self.active[q]
        if not live.any():
            return out
        p, q = p[live], q[live]
        raw = self.target.raw_at(p, q)
        on = raw > 0
        if not on.any():
            return out
        p, q, raw = p[on], q[on], raw[on]
        g = np.einsum("ij,ij->i", self.G[p], self.W[q]) + np.einsum("ij,ij->i", self.G[q], self.W[p])
        vals = np.zeros(live.sum())
        vals[on] = g / raw
        out[live] = vals
        return out

    def __call__(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.grad_window > 2:
            return self._full_window(i, j)
        base = self.dinv[i] * self.dinv[j]
        total = self._h_sym(i, j)
        if self.grad_window == 2:
            total = total + self._two_step(i, j) + self._two_step(j, i)
        return self.scale * base * total

    def _two_step(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """sum_{q in N(j)} (H + H^T)[i, q] / d_q for every candidate."""
        A = self.graph.adjacency
        starts, ends = A.indptr[j], A.indptr[j + 1]
        counts = ends - starts
        if counts.sum() == 0:
            return np.zeros(len(i))
        owner = np.repeat(np.arange(len(i)), counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        q = A.indices[np.repeat(starts, counts) + offsets]
        p = i[owner]
        h = self._h_sym(p, q) * self.dinv[q]
        return np.bincount(owner, weights=h, minlength=len(i))

    def _full_window(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Product rule through every power r <= grad_window (dense targets only)."""
        if self._dense_h is None:
            if not self.target.is_dense:
                raise ValueError("full-window gradients need a dense target matrix")
            raw = self.target.raw
            gz = self.G @ self.W.T
            H = np.zeros_like(raw)
            np.divide(gz, raw, out=H, where=raw > 0)
            A = self.graph.dense()
            M = self.dinv[:, None] * A
            P = [np.diag(self.dinv)]  # P[t] = M^t D^-1
            for _ in range(self.grad_window - 1):
                P.append(M @ P[-1])
            total = np.zeros_like(H)
            for r in range(1, self.grad_window + 1):
                for s in range(r):
                    total += P[s].T @ H @ P[r - 1 - s].T
            self._dense_h = total
        T = self._dense_h
        return self.scale * (T[i, j] + T[j, i])


@dataclass
class PrivacyState:
    """Embedding and cached POG factors for one graph snapshot."""

    graph: Graph
    params: EmbeddingParams
    pairs: PrivatePairSet
    target: TargetMatrix
    embedding: Embedding
    pl: float
    gradient: AdjacencyGradient

    @classmethod
    def build(cls, graph: Graph, params: EmbeddingParams, pairs: PrivatePairSet,
              grad_window: int | None = None, seed: int = 0, target=None, embedding=None,
              tol: float = 1e-10) -> "PrivacyState":
        if target is None or embedding is None:
            target, embedding = embed(graph, params, seed=seed, tol=tol)
        G = grad_pl_wrt_embedding(embedding.X, pairs)
        W = context_projector(embedding)
        grad = AdjacencyGradient(graph, params, target, G, W, grad_window)
        return cls(graph, params, pairs, target, embedding, privacy_leakage(embedding.X, pairs), grad)


def grad_target_wrt_adjacency(graph: Graph, params: EmbeddingParams, grad_Z: np.ndarray,
                              candidates: list[FlipDelta], target: TargetMatrix | None = None,
                              grad_window: int | None = None) -> np.ndarray:
    """``<grad_Z, dZ/da_ij>`` for each candidate, from a dense ``grad_Z``."""
    from .netmf import build_target_matrix

    if target is None:
        target = build_target_matrix(graph, params)
    n = graph.node_count
    # grad_Z = grad_Z @ I^T
    grad = AdjacencyGradient(graph, params, target, np.asarray(grad_Z, float), np.eye(n), grad_window)
    i = np.array([c.i for c in candidates], dtype=np.int64)
    j = np.array([c.j for c in candidates], dtype=np.int64)
    return grad(i, j)


def estimate_privacy_gain(state: PrivacyState, candidates, graph: Graph | None = None,
                          workers: int = 1, chunk: int = 2048) -> np.ndarray:
    """First-order PG estimate ``-dPL/da_ij * delta_ij`` for each candidate flip.

    ``candidates`` is a list of :class:`FlipDelta` or an ``(c, 3)`` int array.
    """
    if graph is not None and not graph.same_as(state.graph):
        raise StaleStateError("graph changed since the privacy gradients were computed")
    cand = np.asarray(candidates, dtype=np.int64).reshape(-1, 3)
    if len(cand) == 0:
        return np.zeros(0)
    present = state.graph.has_edges(cand[:, 0], cand[:, 1])
    if (present != (cand[:, 2] < 0)).any():
        raise StaleStateError("candidate directions do not match the cached graph")
    grads = map_chunks(lambda c: state.gradient(c[:, 0], c[:, 1]), cand, workers, chunk)
    return -grads * cand[:, 2]


def map_chunks(fn, rows: np.ndarray, workers: int, chunk: int) -> np.ndarray:
    """Apply ``fn`` to consecutive row blocks, in order, optionally on a thread pool."""
    blocks = [rows[k:k + chunk] for k in range(0, len(rows), chunk)]
    if workers > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return np.concatenate(parts) if parts else np.zeros(0)
