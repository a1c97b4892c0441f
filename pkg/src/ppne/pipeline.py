"""End-to-end run: load inputs, perturb, evaluate at checkpoints, write artifacts."""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines
from .attacks import average_precision, clustering_nmi, node_classification_f1, similarity_attack
from .config import PipelineConfig
from .graph import (FlipDelta, Graph, PrivatePairSet, apply_flips, format_node_map, format_pairs, load_edge_list,
                    parse_pairs, sample_private_pairs)
from .netmf import EmbeddingParams, embed, format_embedding
from .optimizer import OptimizerConfig, PerturbationPlan, format_plan, run_exact, run_fast
from .privacy import privacy_leakage
from .records import TradeoffRecord, emit_tradeoff_csv


class InputParseError(ValueError):
    """An input file could not be parsed."""


@dataclass
class Inputs:
    graph: Graph
    pairs: PrivatePairSet
    tokens: list[str]
    index: dict[str, int]
    labels: np.ndarray | None
    pairs_sampled: bool


def _read(path: str | None, what: str) -> str:
    if path is None:
        raise FileNotFoundError(f"no {what} path configured")
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} file not found: {path}")
    return p.read_text()


def parse_labels(text: str, index: dict[str, int]) -> np.ndarray:
    """``node_token<TAB>label`` lines to an integer label array in node-index order."""
    raw: dict[int, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputParseError(f"labels line {lineno}: expected 'node<TAB>label', got {line!r}")
        if parts[0] in index:
            raw[index[parts[0]]] = parts[1]
    missing = [tok for tok, i in index.items() if i not in raw]
    if missing:
        raise InputParseError(f"labels missing for {len(missing)} node(s), e.g. {missing[0]!r}")
    classes = {c: k for k, c in enumerate(sorted(set(raw.values())))}
    return np.array([classes[raw[i]] for i in range(len(index))], dtype=np.int64)


def load_inputs(config: PipelineConfig) -> Inputs:
    edge_text = _read(config.edges_path, "edge list")
    try:
        complete, index = load_edge_list(edge_text)
    except ValueError as e:
        raise InputParseError(str(e)) from e
    tokens = sorted(index, key=index.get)
    labels = parse_labels(_read(config.labels_path, "labels"), index) if config.labels_path else None
    if config.pairs_path:
        try:
            pairs = parse_pairs(_read(config.pairs_path, "pairs"), index)
        except ValueError as e:
            raise InputParseError(str(e)) from e
        # hidden links listed in the pair file are taken out of the published graph
        linked = complete.has_edges(pairs.pos[:, 0], pairs.pos[:, 1])
        graph = apply_flips(complete, [FlipDelta(int(a), int(b), -1) for a, b in pairs.pos[linked]])
        try:
            pairs.check(graph)
        except ValueError as e:
            raise InputParseError(str(e)) from e
        sampled = False
    else:
        graph, pairs = sample_private_pairs(complete, config.ppos_fraction, config.seed)
        sampled = True
    return Inputs(graph, pairs, tokens, index, labels, sampled)


def embedding_params(config: PipelineConfig) -> EmbeddingParams:
    return EmbeddingParams(config.embedding, config.window, config.negatives, config.dim)


def optimizer_config(config: PipelineConfig) -> OptimizerConfig:
    return OptimizerConfig(
        mode="exact" if config.method == "ppne-exact" else "fast",
        iterations=config.iterations, sample_size=config.sample_size, batch_size=config.batch_size,
        k_exponent=config.k_exponent, stop_privacy_gain=config.stop_privacy_gain, seed=config.seed,
        eigen_m=config.eigen_m, grad_window=config.grad_window, refresh_every=config.refresh_every,
        eigen_tol=config.eigen_tol, workers=config.workers, wall_clock=config.wall_clock,
    )


def make_plan(inputs: Inputs, config: PipelineConfig) -> PerturbationPlan:
    params = embedding_params(config)
    g, pairs = inputs.graph, inputs.pairs
    budget = config.budget if config.budget is not None else config.iterations * config.batch_size
    if config.method == "ppne-fast":
        return run_fast(g, pairs, params, optimizer_config(config))
    if config.method == "ppne-exact":
        return run_exact(g, pairs, params, optimizer_config(config))
    if config.method == "random":
        return baselines.random_perturb(g, budget, config.seed, pairs)
    if config.method == "degree":
        return baselines.degree_perturb(g, budget, config.seed, pairs, config.deletion_share)
    if config.method == "betweenness":
        return baselines.betweenness_perturb(g, budget)
    return baselines.dice_perturb(g, pairs, budget, config.seed, config.deletion_share)


def evaluate_embedding(X: np.ndarray, X_ref: np.ndarray, pairs: PrivatePairSet, labels, num_clusters,
                       seed: int) -> tuple[float, float, float | None, float | None]:
    """(PL, 1 - AP, 1 - F1, 1 - NMI) of embedding ``X`` against the unperturbed ``X_ref``."""
    pl = privacy_leakage(X, pairs)
    ap = average_precision(similarity_attack(X, pairs.all_pairs()), pairs.labels()) if len(pairs.pos) else np.nan
    f1 = node_classification_f1(X, labels, 0.7, seed) if labels is not None else None
    nmi = clustering_nmi(X_ref, X, num_clusters, seed) if num_clusters else None
    return pl, 1.0 - ap, (None if f1 is None else 1.0 - f1), (None if nmi is None else 1.0 - nmi)


def checkpoints(plan: PerturbationPlan, every: int) -> list[int]:
    last = plan.flips[-1].iteration if plan.flips else 0
    if plan.records:
        last = max(last, plan.records[-1].iteration)
    points = list(range(0, last + 1, every))
    if points[-1] != last:
        points.append(last)
    return points


def evaluate_plan(inputs: Inputs, plan: PerturbationPlan, config: PipelineConfig,
                  plan_seconds: float) -> tuple[list[TradeoffRecord], np.ndarray]:
    """Records at every checkpoint, rebuilt by replaying the plan; returns the final embedding too."""
    params = embedding_params(config)
    num_clusters = config.num_clusters
    if num_clusters is None and inputs.labels is not None:
        num_clusters = len(np.unique(inputs.labels))
    _, ref = embed(inputs.graph, params, seed=config.seed)
    wall = {r.iteration: r.wall_seconds for r in plan.records}
    records, X = [], ref.X
    for t in checkpoints(plan, config.eval_every):
        flips = [f.flip for f in plan.flips if f.iteration <= t]
        graph = apply_flips(inputs.graph, flips)
        X = ref.X if not flips else embed(graph, params, seed=config.seed)[1].X
        pl, ap, f1, nmi = evaluate_embedding(X, ref.X, inputs.pairs, inputs.labels, num_clusters, config.seed)
        seconds = wall.get(t, plan_seconds if config.wall_clock else 0.0)
        records.append(TradeoffRecord(t, len(flips), pl, ap, f1, nmi, seconds))
    return records, X


def run_pipeline(config: PipelineConfig, write: bool = True) -> tuple[list[TradeoffRecord], dict[str, str]]:
    inputs = load_inputs(config)
    start = time.perf_counter()
    plan = make_plan(inputs, config)
    plan_seconds = time.perf_counter() - start
    records, X = evaluate_plan(inputs, plan, config, plan_seconds)
    artifacts = {
        "embedding.txt": format_embedding(X, inputs.tokens),
        "plan.txt": format_plan(plan.flips, inputs.tokens),
        "tradeoff.csv": emit_tradeoff_csv(records),
        "nodemap.tsv": format_node_map(inputs.index),
    }
    if inputs.pairs_sampled:
        artifacts["pairs.txt"] = format_pairs(inputs.pairs, inputs.tokens)
    if write:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in artifacts.items():
            (out / name).write_text(text)
    return records, artifacts
