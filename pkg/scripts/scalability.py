"""Wall time of one fast perturbation iteration on Erdos-Renyi graphs of growing size.

Each size is timed ``--repeats`` times and the minimum is reported, as timeit does.

Example:
    python3 scripts/scalability.py --nodes 10000 100000 --dim 16
"""
from __future__ import annotations

import argparse
import time

from ppne.graph import sample_private_pairs
from ppne.netmf import EmbeddingParams
from ppne.optimizer import OptimizerConfig, run_fast
from ppne.synth import synth_er_graph


def time_one_iteration(nodes: int, args) -> dict:
    graph = synth_er_graph(nodes, args.avg_degree, args.seed)
    observed, pairs = sample_private_pairs(graph, args.ppos_fraction, args.seed)
    params = EmbeddingParams(args.method, args.window, 1.0, args.dim)
    config = OptimizerConfig(iterations=1, sample_size=args.sample_size, batch_size=1, seed=args.seed,
                             eigen_m=args.eigen_m, eigen_tol=args.eigen_tol, eigen_check_tol=args.check_tol)
    seconds = float("inf")
    for _ in range(args.repeats):
        start = time.perf_counter()
        plan = run_fast(observed, pairs, params, config)
        seconds = min(seconds, time.perf_counter() - start)
    return {"nodes": nodes, "edges": observed.edge_count, "seconds": seconds, "flips": len(plan.flips)}


def main(argv=None) -> list[dict]:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, nargs="+", default=[10_000, 100_000])
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--sample-size", type=int, default=10_000)
    p.add_argument("--method", default="deepwalk")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--eigen-m", type=int, default=32)
    p.add_argument("--eigen-tol", type=float, default=1e-2)
    p.add_argument("--check-tol", type=float, default=1.0)
    p.add_argument("--ppos-fraction", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3, help="runs per size; the fastest is reported")
    args = p.parse_args(argv)
    rows = []
    for n in args.nodes:
        row = time_one_iteration(n, args)
        rows.append(row)
        print(f"nodes={row['nodes']} edges={row['edges']} seconds={row['seconds']:.2f} flips={row['flips']}", flush=True)
    if len(rows) > 1:
        print(f"ratio last/first = {rows[-1]['seconds'] / rows[0]['seconds']:.2f}")
    return rows


if __name__ == "__main__":
    main()
