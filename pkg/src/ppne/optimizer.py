"""Greedy perturbation loop: exact (retrain every candidate) and fast (sampled, estimated) modes."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .attacks import average_precision, similarity_attack
from .graph import FlipDelta, Graph, PrivatePairSet, apply_flip, apply_flips
from .netmf import EmbeddingParams, embed
from .privacy import PrivacyState, estimate_privacy_gain, map_chunks, privacy_leakage
from .records import TradeoffRecord
from .utility import approx_embedding_loss, exact_embedding_loss, generalized_eigs, procrustes_distance

log = logging.getLogger(__name__)

EXACT_NODE_CAP = 200
ENUMERATION_CAP = 3000


class GuardError(ValueError):
    """An input exceeds a size guard of the requested mode."""


@dataclass
class OptimizerConfig:
    """Settings of the greedy loop.

    ``sample_size`` None means every candidate pair. ``eigen_m`` None means
    ``min(|V|, 4 K)``. ``eigen_tol`` is the Lanczos tolerance of both the
    embedding factorisation and the generalized eigensolver (dense solves on
    small graphs ignore it). The eigenbasis is recomputed once
    ``refresh_every`` flips have been applied since the last solve; the
    embedding and POG factors are refreshed every iteration.
    """

    mode: str = "fast"
    iterations: int = 100
    sample_size: int | None = 10_000
    batch_size: int = 1
    k_exponent: float = 1.0
    stop_privacy_gain: float | None = None
    seed: int = 0
    eigen_m: int | None = None
    grad_window: int | None = None
    refresh_every: int = 1
    eigen_tol: float = 1e-10
    eigen_check_tol: float | None = None
    workers: int = 1
    wall_clock: bool = True

    def __post_init__(self):
        if self.mode not in ("fast", "exact"):
            raise ValueError(f"unknown optimizer mode {self.mode!r}")
        if self.mode == "exact":
            self.sample_size = None
            self.batch_size = 1
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.sample_size is not None and self.sample_size < self.batch_size:
            raise ValueError("sample_size must be >= batch_size")
        if self.k_exponent < 0:
            raise ValueError("k_exponent must be >= 0")
        if self.refresh_every < 1 or self.workers < 1:
            raise ValueError("refresh_every and workers must be >= 1")


@dataclass
class AppliedFlip:
    iteration: int
    i: int
    j: int
    delta: int
    est_pg: float
    est_ul: float
    score: float

    @property
    def flip(self) -> FlipDelta:
        return FlipDelta(self.i, self.j, self.delta)


@dataclass
class PerturbationPlan:
    flips: list[AppliedFlip]
    graph: Graph
    records: list[TradeoffRecord] = field(default_factory=list)
    terminated_early: bool = False
    warnings: list[str] = field(default_factory=list)

    def flip_deltas(self) -> list[FlipDelta]:
        return [f.flip for f in self.flips]


def score_candidates(pg_estimates, ul_estimates, k: float) -> np.ndarray:
    """``pg / ul**k``; candidates with ``ul <= 0`` (or non-finite inputs) score ``-inf``."""
    pg = np.asarray(pg_estimates, dtype=float)
    ul = np.asarray(ul_estimates, dtype=float)
    if pg.shape != ul.shape:
        raise ValueError("pg and ul estimates differ in length")
    ok = (ul > 0) & np.isfinite(pg) & np.isfinite(ul)
    out = np.full(pg.shape, -np.inf)
    out[ok] = pg[ok] / ul[ok] ** k
    return out


def pair_codes(pairs: np.ndarray, n: int) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    lo, hi = pairs.min(axis=1), pairs.max(axis=1)
    return lo * n + hi


def _all_codes(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, k=1)
    return iu.astype(np.int64) * n + ju


def sample_candidates(graph: Graph, pairs: PrivatePairSet, flipped, s: int | None, seed: int,
                      iteration: int, warnings: list | None = None) -> np.ndarray:
    """Up to ``s`` distinct candidate flips as an ``(c, 3)`` array of ``(i, j, delta)``.

    Drawn uniformly without replacement from all pairs except self-pairs,
    ``flipped`` (an iterable of pair codes ``i * n + j``) and the private pairs.
    Rows come back in canonical pair order. ``s`` None returns the whole universe.
    """
    if s is not None and s < 1:
        raise ValueError("sample size must be >= 1")
    n = graph.node_count
    excluded = np.union1d(pair_codes(pairs.all_pairs(), n), np.fromiter(flipped, dtype=np.int64))
    universe = n * (n - 1) // 2 - len(excluded)
    rng = np.random.default_rng([seed, iteration])
    if s is None or s >= universe:
        if s is not None and s > universe:
            msg = f"iteration {iteration}: sample size {s} exceeds candidate universe {universe}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        codes = np.setdiff1d(_all_codes(n), excluded, assume_unique=True)
    elif n <= ENUMERATION_CAP:
        free = np.setdiff1d(_all_codes(n), excluded, assume_unique=True)
        codes = np.sort(rng.choice(free, size=s, replace=False))
    else:
        codes = _rejection_sample(n, excluded, s, rng)
    i, j = codes // n, codes % n
    delta = np.where(graph.has_edges(i, j), -1, 1)
    return np.column_stack([i, j, delta]).astype(np.int64)


def _rejection_sample(n: int, excluded: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    chosen = np.zeros(0, dtype=np.int64)
    while len(chosen) < s:
        size = 2 * (s - len(chosen)) + 16
        u = rng.integers(0, n, size=size)
        v = rng.integers(0, n, size=size)
        keep = u != v
        codes = np.minimum(u[keep], v[keep]) * n + np.maximum(u[keep], v[keep])
        codes = codes[~np.isin(codes, excluded)]
        merged = np.concatenate([chosen, codes])
        _, first = np.unique(merged, return_index=True)
        chosen = merged[np.sort(first)][:s]
    return np.sort(chosen)


def isolating(graph: Graph, cand: np.ndarray) -> np.ndarray:
    """Removals that would leave an endpoint with degree 0."""
    deg = graph.degrees
    return (cand[:, 2] < 0) & ((deg[cand[:, 0]] <= 1) | (deg[cand[:, 1]] <= 1))


class FastEstimator:
    """POG privacy-gain estimates and eigen-perturbation utility-loss estimates."""

    def __init__(self, params: EmbeddingParams, pairs: PrivatePairSet, config: OptimizerConfig):
        self.params = params
        self.pairs = pairs
        self.config = config
        self.state: PrivacyState | None = None
        self.basis = None
        self._since_basis = 0

    def refresh(self, graph: Graph, flips_applied: int) -> np.ndarray:
        cfg = self.config
        self.state = PrivacyState.build(graph, self.params, self.pairs, cfg.grad_window, seed=cfg.seed,
                                        tol=cfg.eigen_tol)
        self._since_basis += flips_applied
        if self.basis is None or self._since_basis >= cfg.refresh_every:
            # solved lazily: a refresh after the last iteration never needs a basis
            self.basis = None
            self._since_basis = 0
        return self.state.embedding.X

    def _ensure_basis(self, graph: Graph) -> None:
        if self.basis is None:
            cfg = self.config
            K = self.state.embedding.dim
            m = cfg.eigen_m if cfg.eigen_m is not None else min(graph.node_count, 4 * K)
            self.basis = generalized_eigs(graph, min(m, graph.node_count), tol=cfg.eigen_tol,
                                          seed=cfg.seed, check_tol=cfg.eigen_check_tol)

    def estimate(self, graph: Graph, cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        self._ensure_basis(graph)
        pg = estimate_privacy_gain(self.state, cand, graph=graph, workers=cfg.workers)
        ul = map_chunks(lambda c: approx_embedding_loss(self.basis, c, self.params), cand, cfg.workers, 2048)
        return pg, ul


class RetrainEstimator:
    """True PG / UL by refactorising the target for every candidate.

    ``reference`` picks the embedding that PG and the Procrustes UL are
    measured against: the input graph's (``"original"``) or the current one's.
    ``ul`` is ``"procrustes"`` (distance to the reference) or
    ``"embedding_loss"`` (optimal rank-K residual of the flipped graph).
    """

    def __init__(self, params: EmbeddingParams, pairs: PrivatePairSet, seed: int = 0,
                 reference: str = "original", ul: str = "procrustes"):
        if reference not in ("original", "current") or ul not in ("procrustes", "embedding_loss"):
            raise ValueError("unknown retrain estimator option")
        self.params = params
        self.pairs = pairs
        self.seed = seed
        self.reference = reference
        self.ul = ul
        self.X_ref = None
        self.pl_ref = None

    def refresh(self, graph: Graph, flips_applied: int) -> np.ndarray:
        _, emb = embed(graph, self.params, seed=self.seed)
        if self.X_ref is None or self.reference == "current":
            self.X_ref = emb.X
            self.pl_ref = privacy_leakage(emb.X, self.pairs)
        return emb.X

    def estimate(self, graph: Graph, cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pg = np.zeros(len(cand))
        ul = np.zeros(len(cand))
        for r, (i, j, d) in enumerate(cand.tolist()):
            flipped = apply_flip(graph, FlipDelta(i, j, d))
            if flipped.volume == 0:
                pg[r], ul[r] = np.nan, 0.0
                continue
            _, emb = embed(flipped, self.params, seed=self.seed)
            pg[r] = self.pl_ref - privacy_leakage(emb.X, self.pairs)
            if self.ul == "procrustes":
                ul[r] = procrustes_distance(emb.X, self.X_ref)
            else:
                ul[r] = exact_embedding_loss(flipped, self.params)
        return pg, ul


def _record(iteration: int, flips: int, X: np.ndarray, pairs: PrivatePairSet, elapsed: float) -> TradeoffRecord:
    pl = privacy_leakage(X, pairs)
    if len(pairs.pos):
        ap = average_precision(similarity_attack(X, pairs.all_pairs()), pairs.labels())
        one_minus_ap = 1.0 - ap
    else:
        one_minus_ap = float("nan")
    return TradeoffRecord(iteration, flips, pl, one_minus_ap, wall_seconds=elapsed)


def greedy_perturb(graph: Graph, pairs: PrivatePairSet, params: EmbeddingParams,
                   config: OptimizerConfig, estimator) -> PerturbationPlan:
    """Shared loop: sample, estimate, score, apply the top-``f`` flips, refresh."""
    pairs.check(graph)
    n = graph.node_count
    start = time.perf_counter()

    def elapsed() -> float:
        return time.perf_counter() - start if config.wall_clock else 0.0

    current = graph
    flipped: list[int] = []
    applied: list[AppliedFlip] = []
    warnings: list[str] = []
    X = estimator.refresh(current, 0)
    records = [_record(0, 0, X, pairs, elapsed())]
    cumulative_pg = 0.0
    terminated = False
    for it in range(1, config.iterations + 1):
        cand = sample_candidates(current, pairs, flipped, config.sample_size, config.seed, it, warnings)
        if len(cand) == 0:
            terminated = True
            warnings.append(f"iteration {it}: no candidates left")
            break
        pg, ul = estimator.estimate(current, cand)
        scores = score_candidates(pg, ul, config.k_exponent)
        scores[isolating(current, cand)] = -np.inf
        finite = np.isfinite(scores)
        if not finite.any() or not (scores[finite] != 0).any():
            terminated = True
            warnings.append(f"iteration {it}: every candidate scored -inf or 0")
            break
        codes = cand[:, 0] * n + cand[:, 1]
        order = np.lexsort((codes, -scores))
        chosen = [r for r in order[:config.batch_size] if finite[r]]
        batch = [FlipDelta(int(cand[r, 0]), int(cand[r, 1]), int(cand[r, 2])) for r in chosen]
        current = apply_flips(current, batch)
        for r in chosen:
            applied.append(AppliedFlip(it, int(cand[r, 0]), int(cand[r, 1]), int(cand[r, 2]),
                                       float(pg[r]), float(ul[r]), float(scores[r])))
            flipped.append(int(codes[r]))
            cumulative_pg += float(pg[r])
        X = estimator.refresh(current, len(chosen))
        records.append(_record(it, len(applied), X, pairs, elapsed()))
        if config.stop_privacy_gain is not None and cumulative_pg >= config.stop_privacy_gain:
            break
    return PerturbationPlan(applied, current, records, terminated, warnings)


def run_fast(graph: Graph, pairs: PrivatePairSet, params: EmbeddingParams, config: OptimizerConfig,
             estimator=None) -> PerturbationPlan:
    if config.mode != "fast":
        raise ValueError("run_fast needs mode='fast'")
    return greedy_perturb(graph, pairs, params, config, estimator or FastEstimator(params, pairs, config))


def run_exact(graph: Graph, pairs: PrivatePairSet, params: EmbeddingParams, config: OptimizerConfig,
              estimator=None) -> PerturbationPlan:
    if config.mode != "exact":
        raise ValueError("run_exact needs mode='exact'")
    if graph.node_count > EXACT_NODE_CAP:
        raise GuardError(f"exact mode is limited to {EXACT_NODE_CAP} nodes "
                         f"(graph has {graph.node_count}); use fast mode")
    est = estimator or RetrainEstimator(params, pairs, seed=config.seed)
    return greedy_perturb(graph, pairs, params, config, est)


def run(graph: Graph, pairs: PrivatePairSet, params: EmbeddingParams, config: OptimizerConfig) -> PerturbationPlan:
    return (run_exact if config.mode == "exact" else run_fast)(graph, pairs, params, config)


def format_plan(plan_flips: list[AppliedFlip], tokens: list[str] | None = None) -> str:
    name = (lambda i: tokens[i]) if tokens is not None else str
    return "".join(
        f"{f.iteration} {name(f.i)} {name(f.j)} {f.delta} {f.est_pg:.6e} {f.est_ul:.6e} {f.score:.6e}\n"
        for f in plan_flips
    )


def parse_plan(text: str, index: dict[str, int] | None = None) -> list[AppliedFlip]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ValueError(f"plan line {lineno}: expected 7 fields, got {raw!r}")
        try:
            i, j = ((index[t] if index is not None else int(t)) for t in parts[1:3])
        except KeyError as e:
            raise ValueError(f"plan line {lineno}: unknown node token {e.args[0]!r}") from None
        out.append(AppliedFlip(int(parts[0]), i, j, int(parts[3]), float(parts[4]), float(parts[5]), float(parts[6])))
    return out


def replay(graph: Graph, flips: list[AppliedFlip]) -> Graph:
    """Apply a plan's flips one by one (each must be valid in sequence)."""
    for f in flips:
        graph = apply_flip(graph, f.flip)
    return graph
