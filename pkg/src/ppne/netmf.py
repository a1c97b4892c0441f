"""Closed-form skip-gram targets (DeepWalk / LINE) and their rank-K factorisation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .graph import Graph

DENSE_CAP = 5000
FULL_DECOMPOSITION_CAP = 2000


@dataclass
class EmbeddingParams:
    method: str = "deepwalk"
    window: int = 10
    negatives: float = 1.0
    dim: int = 128

    def __post_init__(self):
        if self.method not in ("deepwalk", "line"):
            raise ValueError(f"unknown embedding method {self.method!r}")
        if self.method == "line":
            self.window = 1
        if self.window < 1 or self.negatives < 1 or self.dim < 1:
            raise ValueError("window, negatives and dim must all be >= 1")


@dataclass
class TargetMatrix:
    """Clamped log-proximity ``values`` plus the raw proximity on their support.

    ``raw`` equals the unclamped proximity where ``values > 0`` and 0 elsewhere.
    Both are dense arrays for small graphs and CSR matrices above the dense cap.
    """

    values: np.ndarray | sp.csr_matrix
    raw: np.ndarray | sp.csr_matrix
    window_used: int

    @property
    def is_dense(self) -> bool:
        return isinstance(self.values, np.ndarray)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def dense(self) -> np.ndarray:
        return self.values if self.is_dense else self.values.toarray()

    def raw_at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if rows.size == 0:
            return np.zeros(0)
        if self.is_dense:
            return self.raw[rows, cols]
        return np.asarray(self.raw[rows, cols]).ravel()


@dataclass
class Embedding:
    X: np.ndarray
    Y: np.ndarray
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def inverse_degrees(degrees: np.ndarray) -> np.ndarray:
    d = np.asarray(degrees, dtype=np.float64)
    out = np.zeros_like(d)
    np.divide(1.0, d, out=out, where=d > 0)
    return out


def proximity_scale(volume: float, params: EmbeddingParams) -> float:
    return volume / (params.window * params.negatives)


def build_target_matrix(graph: Graph, params: EmbeddingParams, dense_cap: int = DENSE_CAP,
                        sparse_window: int = 2) -> TargetMatrix:
    """log(max(P, 1)) for P = vol/(T b) * sum_{r<=T} (D^-1 A)^r D^-1.

    Above ``dense_cap`` nodes the window sum is truncated to ``sparse_window``
    terms (still scaled by 1/T) so the result stays sparse.
    """
    if graph.volume == 0:
        raise ValueError("graph has zero volume")
    dinv = inverse_degrees(graph.degrees)
    scale = proximity_scale(graph.volume, params)
    n = graph.node_count
    if n <= dense_cap:
        A = graph.dense()
        M = dinv[:, None] * A
        power = M.copy()
        acc = M.copy()
        for _ in range(params.window - 1):
            power = power @ M
            acc += power
        raw = acc * dinv[None, :] * scale
        raw = 0.5 * (raw + raw.T)
        support = raw > 1.0
        values = np.where(support, np.log(np.where(support, raw, 1.0)), 0.0)
        return TargetMatrix(values, np.where(support, raw, 0.0), params.window)

    window = min(params.window, sparse_window)
    M = sp.diags(dinv) @ graph.adjacency
    power = M
    acc = M.copy()
    for _ in range(window - 1):
        power = power @ M
        acc = acc + power
    raw = (acc @ sp.diags(dinv * scale)).tocsr()
    raw = ((raw + raw.T) * 0.5).tocsr()
    raw.data[raw.data <= 1.0] = 0.0
    raw.eliminate_zeros()
    raw.sort_indices()
    values = raw.copy()
    values.data = np.log(values.data)
    return TargetMatrix(values, raw, window)


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def symmetric_top_eigs(matrix, k: int, tol: float = 1e-10, seed: int = 0,
                       full_cap: int = FULL_DECOMPOSITION_CAP):
    """Eigenpairs of a symmetric matrix ordered by decreasing |eigenvalue|.

    Returns ``(values, vectors, complete)`` where ``complete`` says whether the
    whole spectrum was computed (so ``values`` holds all of it).
    """
    n = matrix.shape[0]
    if n <= full_cap or k >= n - 1:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        w, V = np.linalg.eigh(dense)
        complete = True
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        w, V = eigsh(matrix, k=k, which="LM", tol=tol, v0=v0, maxiter=max(1000, 20 * n))
        complete = False
    order = np.lexsort((-w, -np.abs(w)))
    return w[order], _sign_fix(V[:, order]), complete


def factorize(target: TargetMatrix | np.ndarray, K: int, seed: int = 0, tol: float = 1e-10) -> Embedding:
    """Best rank-K factors ``X = U_K S^1/2``, ``Y = V_K S^1/2`` of a symmetric target."""
    values = target.values if isinstance(target, TargetMatrix) else target
    n = values.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    w, U, complete = symmetric_top_eigs(values, K, tol=tol, seed=seed)
    sigma = np.abs(w)
    signs = np.where(w < 0, -1.0, 1.0)
    root = np.sqrt(sigma[:K])
    X = U[:, :K] * root
    Y = U[:, :K] * (signs[:K] * root)
    return Embedding(np.ascontiguousarray(X), np.ascontiguousarray(Y), sigma if complete else sigma[:K])


def optimal_loss(singular_values, K: int) -> float:
    """Frobenius residual of the best rank-K approximation: sqrt(sum_{p>K} sigma_p^2)."""
    s = np.asarray(singular_values, dtype=np.float64)
    if (s < 0).any():
        raise ValueError("singular values must be non-negative")
    if K < 0:
        raise ValueError("K must be non-negative")
    return float(np.sqrt(np.sum(s[K:] ** 2)))


def residual_norm(target: TargetMatrix | np.ndarray, emb: Embedding) -> float:
    Z = target.dense() if isinstance(target, TargetMatrix) else np.asarray(target)
    return float(np.linalg.norm(Z - emb.X @ emb.Y.T))


def embed(graph: Graph, params: EmbeddingParams, seed: int = 0, tol: float = 1e-10) -> tuple[TargetMatrix, Embedding]:
    target = build_target_matrix(graph, params)
    return target, factorize(target, min(params.dim, graph.node_count), seed=seed, tol=tol)


def format_embedding(X: np.ndarray, tokens: list[str] | None = None) -> str:
    """word2vec text format: header ``|V| K`` then one row per node, 6 decimals."""
    n, k = X.shape
    lines = [f"{n} {k}\n"]
    for i in range(n):
        name = tokens[i] if tokens is not None else str(i)
        lines.append(name + " " + " ".join(f"{v:.6f}" for v in X[i]) + "\n")
    return "".join(lines).replace("-0.000000", "0.000000")


def parse_embedding(text: str, index: dict[str, int] | None = None) -> np.ndarray:
    lines = [l for l in text.splitlines() if l.strip()]
    n, k = map(int, lines[0].split())
    X = np.zeros((n, k))
    for line in lines[1:]:
        parts = line.split()
        row = index[parts[0]] if index is not None else int(parts[0])
        X[row] = [float(v) for v in parts[1:]]
    return X
