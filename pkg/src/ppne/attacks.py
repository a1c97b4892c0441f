"""Link-inference attackers and privacy / utility metrics."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.cluster import KMeans
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score, normalized_mutual_info_score


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X, dtype=float), where=norms > 0)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _pair_array(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return arr


def cosine_scores(X: np.ndarray, pairs) -> np.ndarray:
    p = _pair_array(pairs)
    if len(p) and (p.min() < 0 or p.max() >= X.shape[0]):
        raise IndexError("pair index out of range")
    Xn = _normalize_rows(np.asarray(X, float))
    return np.einsum("ij,ij->i", Xn[p[:, 0]], Xn[p[:, 1]])


def similarity_attack(X: np.ndarray, pairs) -> np.ndarray:
    """Link probability sigmoid(cos(x_i, x_j)); zero-norm rows score 0.5."""
    return sigmoid(cosine_scores(X, pairs))


def average_precision(scores, labels) -> float:
    """Step-wise AP over the descending ranking; ties keep input order."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    tp = np.cumsum(hits)
    # exact rational sum, rounded once: the result does not depend on summation order
    total = sum(Fraction(int(tp[k]), k + 1) for k in np.flatnonzero(hits).tolist())
    return float(total / n_pos)


def hadamard_features(X: np.ndarray, pairs) -> np.ndarray:
    p = _pair_array(pairs)
    Xn = _normalize_rows(np.asarray(X, float))
    return Xn[p[:, 0]] * Xn[p[:, 1]]


class LogisticAttack:
    """Logistic regression on Hadamard pair features, fit by full-batch gradient descent.

    With ``weights = 1`` and ``bias = 0`` this is exactly :func:`similarity_attack`.
    """

    def __init__(self, iterations: int = 500, learning_rate: float = 0.5, l2: float = 1e-4,
                 seed: int = 0, weights=None, bias: float = 0.0):
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.l2 = l2
        self.seed = seed
        self.weights = None if weights is None else np.asarray(weights, float)
        self.bias = float(bias)

    def fit(self, F: np.ndarray, y: np.ndarray) -> "LogisticAttack":
        y = np.asarray(y, float)
        if len(np.unique(y)) < 2:
            raise ValueError("supervised attack needs both linked and unlinked known pairs")
        rng = np.random.default_rng(self.seed)
        w = rng.normal(scale=0.01, size=F.shape[1])
        b = 0.0
        n = len(y)
        for _ in range(self.iterations):
            r = sigmoid(F @ w + b) - y
            w -= self.learning_rate * (F.T @ r / n + self.l2 * w)
            b -= self.learning_rate * r.mean()
        self.weights, self.bias = w, b
        return self

    def predict_proba(self, F: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise RuntimeError("model is not fitted")
        return sigmoid(F @ self.weights + self.bias)


def supervised_attack(X: np.ndarray, known_pairs, known_labels, unknown_pairs, seed: int = 0,
                      model: LogisticAttack | None = None) -> np.ndarray:
    """Attacker that knows the link status of some pairs (Hadamard-feature classifier)."""
    model = model or LogisticAttack(seed=seed)
    if model.weights is None:
        model.fit(hadamard_features(X, known_pairs), np.asarray(known_labels))
    return model.predict_proba(hadamard_features(X, unknown_pairs))


def node_classification_f1(X: np.ndarray, labels, train_fraction: float = 0.7, seed: int = 0) -> float:
    """Macro-F1 of multinomial logistic regression on a random node split."""
    labels = np.asarray(labels)
    n = len(labels)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    train, test = perm[:n_train], perm[n_train:]
    if len(test) == 0 or len(np.unique(labels[train])) < 2:
        raise ValueError("degenerate split: training set needs at least two classes")
    if len(np.unique(labels[test])) < 2:
        raise ValueError("degenerate split: test set holds a single class")
    clf = LogisticRegression(max_iter=1000)
    clf.fit(X[train], labels[train])
    return float(f1_score(labels[test], clf.predict(X[test]), average="macro"))


def farthest_point_init(X: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = [int(rng.integers(len(X)))]
    dist = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        centers.append(nxt)
        dist = np.minimum(dist, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[centers].copy()


def kmeans_labels(X: np.ndarray, k: int, seed: int = 0, max_iter: int = 300) -> np.ndarray:
    X = np.asarray(X, float)
    if not 2 <= k <= len(X):
        raise ValueError(f"num_clusters must lie in [2, {len(X)}], got {k}")
    km = KMeans(n_clusters=k, init=farthest_point_init(X, k, seed), n_init=1, max_iter=max_iter)
    return km.fit_predict(X)


def clustering_nmi(X: np.ndarray, X_prime: np.ndarray, num_clusters: int, seed: int = 0) -> float:
    """NMI between seeded k-means clusterings of two embeddings of the same nodes."""
    a = kmeans_labels(X, num_clusters, seed)
    b = kmeans_labels(X_prime, num_clusters, seed)
    return float(normalized_mutual_info_score(a, b))
