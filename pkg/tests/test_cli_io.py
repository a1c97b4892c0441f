import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppne.cli import main
from ppne.config import ConfigError, PipelineConfig, build_config, convert, parse_config_text
from ppne.graph import Graph, load_edge_list
from ppne.netmf import EmbeddingParams, build_target_matrix
from ppne.pipeline import checkpoints, parse_labels, run_pipeline
from ppne.records import TradeoffRecord, emit_tradeoff_csv, parse_tradeoff_csv
from ppne.synth import format_edge_list, format_labels, synth_er_graph, synth_planted_partition, triangle_pair

HEADER = "iteration,flips,pl,one_minus_ap,one_minus_f1,one_minus_nmi,wall_seconds"


# records

def test_csv_empty_is_header_only():
    assert emit_tradeoff_csv([]) == HEADER + "\n"


def test_csv_single_record_two_lines():
    text = emit_tradeoff_csv([TradeoffRecord(0, 0, 1.5, 0.25, None, 0.125, 0.0)])
    assert text.splitlines() == [HEADER, "0,0,1.500000,0.250000,,0.125000,0.000000"]


def test_csv_negative_zero_and_nan():
    text = emit_tradeoff_csv([TradeoffRecord(1, 1, -1e-9, float("nan"))])
    assert text.splitlines()[1] == "1,1,0.000000,nan,,,0.000000"


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 1000), finite, finite,
                          st.none() | finite, st.none() | finite, st.floats(0, 1e4)), max_size=10))
def test_csv_round_trip_at_stated_precision(rows):
    records = [TradeoffRecord(*r) for r in rows]
    back = parse_tradeoff_csv(emit_tradeoff_csv(records))
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert (a.iteration, a.cumulative_flips) == (b.iteration, b.cumulative_flips)
        for x, y in [(a.pl, b.pl), (a.one_minus_ap, b.one_minus_ap), (a.wall_seconds, b.wall_seconds)]:
            assert abs(x - y) <= 5e-7
        for x, y in [(a.one_minus_f1, b.one_minus_f1), (a.one_minus_nmi, b.one_minus_nmi)]:
            assert (x is None) == (y is None)
            if x is not None:
                assert abs(x - y) <= 5e-7
    # a second emit of the parsed records is byte-identical
    assert emit_tradeoff_csv(back) == emit_tradeoff_csv(records)


def test_csv_rejects_foreign_header():
    with pytest.raises(ValueError):
        parse_tradeoff_csv("a,b\n1,2\n")


# synth

@pytest.mark.parametrize("n", [2, 5, 37])
def test_triangle_pair_decoding(n):
    i, j = triangle_pair(np.arange(n * (n - 1) // 2), n)
    iu, ju = np.triu_indices(n, k=1)
    assert np.array_equal(i, iu) and np.array_equal(j, ju)


@pytest.mark.parametrize("seed", range(10))
def test_er_edge_count_within_binomial_bound(seed):
    g = synth_er_graph(100, 10, seed)
    N, p = 4950, 10 / 99
    sd = math.sqrt(N * p * (1 - p))
    assert abs(g.edge_count - N * p) <= 4 * sd


def test_er_deterministic_and_validated():
    assert np.array_equal(synth_er_graph(50, 4, 7).edges(), synth_er_graph(50, 4, 7).edges())
    with pytest.raises(ValueError):
        synth_er_graph(5, 10, 0)
    with pytest.raises(ValueError):
        synth_er_graph(1, 0, 0)


def test_er_zero_degree_rejected_downstream():
    g = synth_er_graph(10, 0, 0)
    assert g.edge_count == 0
    with pytest.raises(ValueError):
        build_target_matrix(g, EmbeddingParams())


def test_planted_partition_blocks_and_mixing():
    g, labels = synth_planted_partition(700, 7, 6, 0.2, seed=0)
    assert np.bincount(labels).tolist() == [100] * 7
    e = g.edges()
    between = np.mean(labels[e[:, 0]] != labels[e[:, 1]])
    assert abs(between - 0.2) < 0.05
    assert abs(2 * g.edge_count / 700 - 6) < 0.5


def test_edge_list_and_labels_text():
    g = Graph.from_edges(3, [(1, 2), (0, 1)])
    assert format_edge_list(g) == "0 1\n1 2\n"
    assert format_labels(np.array([2, 0]), ["a", "b"]) == "a\t2\nb\t0\n"
    back, _ = load_edge_list(format_edge_list(g))
    assert back.same_as(g)


def test_parse_labels_maps_classes_in_sorted_order():
    index = {"x": 0, "y": 1, "z": 2}
    assert parse_labels("x\tB\ny\tA\nz\tB\n", index).tolist() == [1, 0, 1]
    with pytest.raises(ValueError):
        parse_labels("x\tA\n", index)


# config

def test_table_one_values_accepted_verbatim():
    text = "method = ppne-fast\nk_exponent = 1\nsample_size = 10,000\nbatch_size = 1\nppos_fraction = 10%\n"
    cfg = build_config(parse_config_text(text))
    assert (cfg.k_exponent, cfg.sample_size, cfg.batch_size, cfg.ppos_fraction) == (1.0, 10_000, 1, 0.1)
    assert cfg.eval_every == 100


def test_overrides_win_over_file_values():
    cfg = build_config({"seed": 3, "dim": 16}, {"seed": 5, "dim": None})
    assert cfg.seed == 5 and cfg.dim == 16


@pytest.mark.parametrize("text", ["bogus = 1\n", "dim = 2.5\n", "method\n", "wall_clock = maybe\n"])
def test_bad_config_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        PipelineConfig(method="magic")
    with pytest.raises(ConfigError):
        PipelineConfig(sample_size=1, batch_size=2)
    assert convert("labels_path", "none") is None


# pipeline

def write_inputs(tmp_path, nodes=40, blocks=2, seed=0):
    g, labels = synth_planted_partition(nodes, blocks, 6, 0.1, seed)
    edges = tmp_path / "edges.txt"
    edges.write_text(format_edge_list(g))
    lab = tmp_path / "labels.tsv"
    lab.write_text(format_labels(labels))
    return edges, lab


def small_config(tmp_path, **kw):
    edges, labels = write_inputs(tmp_path)
    base = dict(edges_path=str(edges), labels_path=str(labels), out_dir=str(tmp_path / "out"), dim=4,
                window=3, sample_size=100, iterations=3, eval_every=2)
    base.update(kw)
    return build_config(base)


def test_pipeline_zero_iterations_gives_single_baseline_record(tmp_path):
    records, files = run_pipeline(small_config(tmp_path, iterations=0))
    assert len(records) == 1 and records[0].cumulative_flips == 0
    assert files["tradeoff.csv"].count("\n") == 2
    assert files["plan.txt"] == ""
    for name in ("embedding.txt", "plan.txt", "tradeoff.csv", "nodemap.tsv", "pairs.txt"):
        assert (tmp_path / "out" / name).is_file()


def test_pipeline_checkpoints_and_repeatability(tmp_path):
    cfg = small_config(tmp_path)
    records, files = run_pipeline(cfg, write=False)
    assert [r.iteration for r in records] == [0, 2, 3]
    assert [r.cumulative_flips for r in records] == [0, 2, 3]
    assert all(r.one_minus_f1 is not None and r.one_minus_nmi is not None for r in records)
    again = run_pipeline(cfg, write=False)[1]
    assert again == files


@pytest.mark.parametrize("method", ["ppne-exact", "random", "degree", "betweenness", "dice"])
def test_pipeline_runs_every_method(tmp_path, method):
    records, files = run_pipeline(small_config(tmp_path, method=method, iterations=2, eval_every=1),
                                  write=False)
    assert records[-1].cumulative_flips == 2
    assert len(files["plan.txt"].splitlines()) == 2


def test_pipeline_with_pair_file_hides_listed_links(tmp_path):
    cfg = small_config(tmp_path, iterations=1)
    g, index = load_edge_list((tmp_path / "edges.txt").read_text())
    u, v = g.edges()[0].tolist()
    a, b = next((i, j) for i in range(40) for j in range(i + 1, 40) if not g.has_edge(i, j))
    tok = {k: t for t, k in index.items()}
    pairs = tmp_path / "pairs.txt"
    pairs.write_text(f"{tok[u]} {tok[v]} 1\n{tok[a]} {tok[b]} 0\n")
    records, files = run_pipeline(build_config({**cfg.__dict__, "pairs_path": str(pairs)}), write=False)
    assert "pairs.txt" not in files
    assert len(records) == 2


def test_checkpoint_schedule():
    from ppne.optimizer import PerturbationPlan

    plan = PerturbationPlan([], Graph.from_edges(2, [(0, 1)]), [TradeoffRecord(t, t, 0, 0) for t in range(8)])
    assert checkpoints(plan, 3) == [0, 3, 6, 7]
    assert checkpoints(plan, 100) == [0, 7]


# CLI

def test_cli_synth_embed_pipeline(tmp_path, capsys):
    edges = tmp_path / "g.txt"
    labels = tmp_path / "l.tsv"
    assert main(["synth", "sbm", "--nodes", "40", "--blocks", "2", "--avg-degree", "6", "--out", str(edges),
                 "--labels-out", str(labels)]) == 0
    assert main(["embed", "--edges", str(edges), "--dim", "4", "--window", "2",
                 "--out", str(tmp_path / "e.txt")]) == 0
    conf = tmp_path / "run.conf"
    conf.write_text(f"edges_path = {edges}\nlabels_path = {labels}\ndim = 4\nwindow = 2\n"
                    f"iterations = 2\nsample_size = 50\nout_dir = {tmp_path / 'out'}\n")
    assert main(["pipeline", "--config", str(conf), "--eval-every", "1"]) == 0
    csv = (tmp_path / "out" / "tradeoff.csv").read_text().splitlines()
    assert csv[0] == HEADER and len(csv) == 4
    out = tmp_path / "out"
    assert main(["attack", "--embedding", str(out / "embedding.txt"), "--pairs", str(out / "pairs.txt")]) == 0
    assert "one_minus_ap=" in capsys.readouterr().out
    assert main(["evaluate", "--embedding", str(out / "embedding.txt"), "--labels", str(labels),
                 "--reference", str(tmp_path / "e.txt")]) == 0
    assert "one_minus_nmi=" in capsys.readouterr().out
    assert main(["baseline", "random", "--config", str(conf), "--out-dir", str(tmp_path / "b")]) == 0
    assert len((tmp_path / "b" / "plan.txt").read_text().splitlines()) == 2


def test_cli_exit_codes(tmp_path):
    edges = tmp_path / "g.txt"
    edges.write_text(format_edge_list(synth_er_graph(250, 4, 0)))
    bad = tmp_path / "bad.txt"
    bad.write_text("a b c\n")
    assert main(["pipeline", "--edges-path", str(tmp_path / "nope.txt")]) == 3
    assert main(["pipeline", "--edges-path", str(edges), "--dim", "abc"]) == 2
    assert main(["pipeline", "--edges-path", str(edges), "--method", "ppne-exact", "--dim", "2",
                 "--out-dir", str(tmp_path / "o")]) == 4
    assert main(["pipeline", "--edges-path", str(bad), "--out-dir", str(tmp_path / "o")]) == 5
