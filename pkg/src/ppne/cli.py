"""Command-line entry point.

Exit codes: 0 success, 1 unexpected failure, 2 bad configuration,
3 missing input file, 4 size guard exceeded, 5 unparsable input.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import synth
from .attacks import (LogisticAttack, average_precision, clustering_nmi, node_classification_f1,
                      similarity_attack, supervised_attack)
from .config import ConfigError, build_config, convert, field_types, parse_config_text
from .graph import format_node_map, format_pairs, load_edge_list, parse_pairs
from .netmf import EmbeddingParams, embed, format_embedding, parse_embedding
from .optimizer import GuardError, format_plan
from .pipeline import InputParseError, load_inputs, make_plan, parse_labels, run_pipeline

EXIT_GENERIC, EXIT_CONFIG, EXIT_MISSING, EXIT_GUARD, EXIT_PARSE = 1, 2, 3, 4, 5


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file")
    for key in field_types():
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="VALUE")


def _config(args):
    file_values = parse_config_text(_read(args.config)) if args.config else {}
    overrides = {k: convert(k, getattr(args, k)) for k in field_types() if getattr(args, k) is not None}
    return build_config(file_values, overrides)


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    return p.read_text()


def _tokens(index: dict[str, int]) -> list[str]:
    return sorted(index, key=index.get)


def cmd_synth(args) -> None:
    if args.model == "er":
        graph = synth.synth_er_graph(args.nodes, args.avg_degree, args.seed)
        labels = None
    else:
        graph, labels = synth.synth_planted_partition(args.nodes, args.blocks, args.avg_degree, args.mixing, args.seed)
    Path(args.out).write_text(synth.format_edge_list(graph))
    if args.labels_out and labels is not None:
        Path(args.labels_out).write_text(synth.format_labels(labels))
    print(f"{graph.node_count} nodes, {graph.edge_count} edges -> {args.out}")


def _parsed(fn, *a):
    try:
        return fn(*a)
    except ValueError as e:
        raise InputParseError(str(e)) from e


def cmd_embed(args) -> None:
    graph, index = _parsed(load_edge_list, _read(args.edges))
    params = EmbeddingParams(args.method, args.window, args.negatives, args.dim)
    _, emb = embed(graph, params, seed=args.seed)
    Path(args.out).write_text(format_embedding(emb.X, _tokens(index)))


def _write_outputs(out_dir: str, files: dict[str, str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def cmd_perturb(args, method: str | None = None) -> None:
    config = _config(args)
    if method is not None:
        config = dataclasses.replace(config, method=method)
    inputs = load_inputs(config)
    plan = make_plan(inputs, config)
    tokens = inputs.tokens
    files = {
        "plan.txt": format_plan(plan.flips, tokens),
        "perturbed_edges.txt": "".join(f"{tokens[i]} {tokens[j]}\n" for i, j in plan.graph.edges().tolist()),
        "nodemap.tsv": format_node_map(inputs.index),
    }
    if inputs.pairs_sampled:
        files["pairs.txt"] = format_pairs(inputs.pairs, tokens)
    _write_outputs(config.out_dir, files)
    for w in plan.warnings:
        print("warning:", w, file=sys.stderr)
    print(f"{len(plan.flips)} flips -> {Path(config.out_dir) / 'plan.txt'}")


def _embedding_with_index(path: str) -> tuple[np.ndarray, dict[str, int]]:
    text = _read(path)
    lines = [l for l in text.splitlines() if l.strip()]
    index = {line.split()[0]: k for k, line in enumerate(lines[1:])}
    try:
        return parse_embedding(text, index), index
    except (ValueError, IndexError) as e:
        raise InputParseError(f"{path}: {e}") from e


def cmd_attack(args) -> None:
    X, index = _embedding_with_index(args.embedding)
    pairs = _parsed(parse_pairs, _read(args.pairs), index)
    targets, labels = pairs.all_pairs(), pairs.labels()
    if args.known:
        known = _parsed(parse_pairs, _read(args.known), index)
        if args.frozen:
            model = LogisticAttack(weights=np.ones(X.shape[1]), bias=0.0)
        else:
            model = LogisticAttack(seed=args.seed)
        probs = supervised_attack(X, known.all_pairs(), known.labels(), targets, seed=args.seed, model=model)
    else:
        probs = similarity_attack(X, targets)
    ap = average_precision(probs, labels)
    print(f"ap={ap:.6f} one_minus_ap={1 - ap:.6f}")


def cmd_evaluate(args) -> None:
    X, index = _embedding_with_index(args.embedding)
    if args.labels:
        labels = parse_labels(_read(args.labels), index)
        f1 = node_classification_f1(X, labels, args.train_fraction, args.seed)
        print(f"f1={f1:.6f} one_minus_f1={1 - f1:.6f}")
    if args.reference:
        X_ref, ref_index = _embedding_with_index(args.reference)
        X_ref = X_ref[[ref_index[t] for t in _tokens(index)]]
        k = args.num_clusters
        if k is None:
            if not args.labels:
                raise ConfigError("--num-clusters is required without --labels")
            k = len(np.unique(labels))
        nmi = clustering_nmi(X_ref, X, k, args.seed)
        print(f"nmi={nmi:.6f} one_minus_nmi={1 - nmi:.6f}")


def cmd_pipeline(args) -> None:
    config = _config(args)
    records, _ = run_pipeline(config)
    print(f"{len(records)} records -> {Path(config.out_dir) / 'tradeoff.csv'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppne", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic edge list")
    p.add_argument("model", choices=["er", "sbm"])
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--blocks", type=int, default=7)
    p.add_argument("--mixing", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed", help="embed an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--method", choices=["deepwalk", "line"], default="deepwalk")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("perturb", help="run the perturbation optimizer and write the plan")
    _add_config_flags(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("baseline", help="run a baseline perturbation and write the plan")
    p.add_argument("strategy", choices=["random", "degree", "betweenness", "dice"])
    _add_config_flags(p)
    p.set_defaults(func=lambda a: cmd_perturb(a, method=a.strategy))

    p = sub.add_parser("attack", help="link-inference attack on an embedding")
    p.add_argument("--embedding", required=True)
    p.add_argument("--pairs", required=True, help="'u v label' target pairs")
    p.add_argument("--known", help="labelled pairs for the supervised attacker")
    p.add_argument("--frozen", action="store_true", help="supervised attacker with unit weights, zero bias")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="node classification F1 and clustering NMI")
    p.add_argument("--embedding", required=True)
    p.add_argument("--labels")
    p.add_argument("--reference", help="unperturbed embedding for NMI")
    p.add_argument("--num-clusters", type=int)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="perturb, evaluate at checkpoints and write all artifacts")
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return EXIT_MISSING
    except GuardError as e:
        print(f"guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except InputParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as e:  # noqa: BLE001
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GENERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
