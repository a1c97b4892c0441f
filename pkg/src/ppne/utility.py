"""Training-free embedding-loss estimates for single flips, and exact oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .netmf import EmbeddingParams, build_target_matrix, inverse_degrees, optimal_loss, symmetric_top_eigs

EXACT_LOSS_CAP = 2000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass
class EigenBasis:
    """Leading generalized eigenpairs of ``A u = lambda D u`` with ``u^T D u = 1``."""

    values: np.ndarray
    vectors: np.ndarray
    d_min: int
    degrees: np.ndarray
    volume: int

    @property
    def m(self) -> int:
        return len(self.values)


def generalized_eigs(graph: Graph, m: int, tol: float = 1e-10, seed: int = 0,
                     check_tol: float | None = None) -> EigenBasis:
    """The ``m`` pairs of largest |lambda|, solved through ``D^-1/2 A D^-1/2``.

    Isolated nodes are left out of the solve and get zero eigenvector entries.
    """
    if graph.volume == 0:
        raise ValueError("graph has zero volume")
    n = graph.node_count
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    deg = graph.degrees
    live = np.flatnonzero(deg > 0)
    m_live = min(m, len(live))
    root = np.sqrt(inverse_degrees(deg[live]))
    A = graph.adjacency[live][:, live]
    N = sp.diags(root) @ A @ sp.diags(root)
    d_max = float(deg.max())
    w, V, _ = symmetric_top_eigs(N.tocsr(), m_live, tol=tol / d_max, seed=seed)
    w, V = w[:m_live], V[:, :m_live]
    U = np.zeros((n, m_live))
    U[live] = V * root[:, None]
    residual = _residual(graph, w, U)
    limit = max(tol, 1e-9) if check_tol is None else check_tol
    if residual > limit:
        raise ConvergenceError("generalized eigensolver did not reach tolerance", residual)
    return EigenBasis(w, U, int(deg[live].min()), deg.copy(), graph.volume)


def _residual(graph: Graph, w: np.ndarray, U: np.ndarray) -> float:
    """max_p ||A u_p - lambda_p D u_p|| / ||u_p||."""
    R = graph.adjacency @ U - graph.degrees[:, None] * U * w[None, :]
    norms = np.linalg.norm(U, axis=0)
    return float(np.max(np.linalg.norm(R, axis=0) / np.where(norms > 0, norms, 1.0))) if U.size else 0.0


def _as_flip_arrays(flips):
    """``(i, j, dw)`` columns; ``dw`` may be fractional (weighted flips)."""
    arr = np.asarray(flips, dtype=np.float64).reshape(-1, 3)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]


def approx_flip_eigenvalues(basis: EigenBasis, flips) -> np.ndarray:
    """First-order eigenvalue updates for each flip; shape ``(len(flips), m)``.

    ``lambda_p + dw (2 u_i u_j - lambda_p (u_i^2 + u_j^2))`` for simple
    eigenvalues, with the D-normalisation of ``u`` held fixed.

    Within a cluster of repeated eigenvalues the update is taken from the
    eigenvalues of the perturbation restricted to that eigenspace (rank <= 2),
    assigned in decreasing order, so the result does not depend on which basis
    the solver returned for the cluster.
    """
    i, j, dw = _as_flip_arrays(flips)
    ui, uj = basis.vectors[i], basis.vectors[j]
    lam = basis.values[None, :]
    out = lam + dw[:, None] * (2.0 * ui * uj - lam * (ui * ui + uj * uj))
    for cluster in _clusters(basis.values):
        mu = basis.values[cluster[0]]
        a, b = ui[:, cluster], uj[:, cluster]
        aa = np.einsum("ij,ij->i", a, a)
        bb = np.einsum("ij,ij->i", b, b)
        ab = np.einsum("ij,ij->i", a, b)
        # a b^T + b a^T - mu (a a^T + b b^T) acts on span{a, b} as a 2x2 matrix
        half_trace = ab - 0.5 * mu * (aa + bb)
        det = (ab - mu * aa) * (ab - mu * bb) - (bb - mu * ab) * (aa - mu * ab)
        disc = np.sqrt(np.maximum(half_trace ** 2 - det, 0.0))
        shifts = np.zeros((len(i), len(cluster)))
        shifts[:, 0] = half_trace + disc
        shifts[:, -1] = half_trace - disc
        shifts = -np.sort(-(dw[:, None] * shifts), axis=1)
        out[:, cluster] = mu + shifts
    return out


def _clusters(values: np.ndarray, rtol: float = 1e-9) -> list[np.ndarray]:
    """Index groups (size >= 2) of numerically equal eigenvalues."""
    order = np.argsort(values, kind="stable")
    groups, current = [], [order[0]] if len(order) else []
    for k in order[1:]:
        if abs(values[k] - values[current[-1]]) <= rtol * max(1.0, abs(values[k])):
            current.append(k)
        else:
            if len(current) > 1:
                groups.append(np.sort(np.array(current)))
            current = [k]
    if len(current) > 1:
        groups.append(np.sort(np.array(current)))
    return groups


def flipped_min_degree(basis: EigenBasis, flips) -> tuple[np.ndarray, np.ndarray]:
    """Smallest positive degree after each flip (1 for isolating flips), and the isolation flags."""
    i, j, dw = _as_flip_arrays(flips)
    deg = basis.degrees
    positive = np.sort(deg[deg > 0])
    d1 = positive[0]
    count1 = int(np.searchsorted(positive, d1, side="right"))
    d2 = positive[count1] if count1 < len(positive) else np.inf
    di, dj = deg[i], deg[j]
    lost = (di == d1).astype(np.int64) + (dj == d1).astype(np.int64)
    rest = np.where(count1 - lost > 0, d1, d2)
    new_i = di + dw
    new_j = dj + dw
    big = np.inf
    out = np.minimum(rest, np.minimum(np.where(new_i > 0, new_i, big), np.where(new_j > 0, new_j, big)))
    isolates = (new_i == 0) | (new_j == 0)
    # a flip that isolates a node has d_min clamped to 1 (and is flagged)
    out = np.where(isolates | (out == big), 1, out)
    return np.maximum(out, 1), isolates


def approx_embedding_loss(basis: EigenBasis, flips, params: EmbeddingParams,
                          return_flags: bool = False):
    """Estimated optimal rank-K embedding loss of the graph after each single flip."""
    i, j, dw = _as_flip_arrays(flips)
    K = params.dim
    T = params.window
    if K >= basis.m:
        out = np.zeros(len(i))
        return (out, np.zeros(len(i), bool)) if return_flags else out
    lam = approx_flip_eigenvalues(basis, flips)
    acc = np.zeros_like(lam)
    power = np.ones_like(lam)
    for _ in range(T):
        power = power * lam
        acc += power
    d_min, isolates = flipped_min_degree(basis, flips)
    sigma = np.abs(acc) / d_min[:, None]
    sigma = -np.sort(-sigma, axis=1)
    tail = np.sqrt(np.sum(sigma[:, K:] ** 2, axis=1))
    coef = (basis.volume + 2.0 * dw) / (T * params.negatives)
    out = coef * tail
    return (out, isolates) if return_flags else out


def exact_embedding_loss(graph: Graph, params: EmbeddingParams, cap: int = EXACT_LOSS_CAP) -> float:
    """Optimal rank-K residual of the full target matrix (dense oracle)."""
    if graph.node_count > cap:
        raise ValueError(f"exact embedding loss limited to {cap} nodes, graph has {graph.node_count}")
    Z = build_target_matrix(graph, params, dense_cap=max(cap, graph.node_count)).dense()
    sigma = np.sort(np.abs(np.linalg.eigvalsh(Z)))[::-1]
    return optimal_loss(sigma, params.dim)


def procrustes_distance(X: np.ndarray, X_prime: np.ndarray) -> float:
    """RMS entrywise error of ``X'`` against the best right-rotation of ``X``."""
    X = np.asarray(X, float)
    X_prime = np.asarray(X_prime, float)
    if X.shape != X_prime.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_prime.shape}")
    U, _, Vt = np.linalg.svd(X.T @ X_prime)
    Q = U @ Vt
    return float(np.linalg.norm(X_prime - X @ Q) / np.sqrt(X.size))
