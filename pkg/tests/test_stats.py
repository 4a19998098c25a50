import math

import pytest

from closedkg.graph import KnowledgeGraph, Triple
from closedkg.stats import (
    IndicatorReport,
    articulation_points,
    biconnected_components,
    coverage_ratio,
    graph_density,
    indicator_report,
    max_pbc_ratio,
    subgraph_density,
)
from closedkg.text import tokenize

from conftest import make_graph, oracle_articulations, oracle_blocks, random_graph


def _edge_pairs(g):
    return sorted(g.undirected_pairs())


def test_blocks_triangle_is_one_block():
    g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
    blocks = biconnected_components(g)
    assert blocks == [frozenset({(0, 1), (1, 2), (0, 2)})]
    assert articulation_points(g) == set()
    assert max_pbc_ratio(g) == 1.0


def test_blocks_path_of_four_each_edge_own_block():
    g = make_graph(4, [(0, 1), (1, 2), (2, 3)])
    blocks = set(biconnected_components(g))
    assert blocks == {frozenset({(0, 1)}), frozenset({(1, 2)}), frozenset({(2, 3)})}
    assert articulation_points(g) == {1, 2}
    assert max_pbc_ratio(g) == 0.5


def test_blocks_butterfly_shares_cut_vertex():
    # Two triangles glued at node 2.
    g = make_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    blocks = set(biconnected_components(g))
    assert blocks == {
        frozenset({(0, 1), (1, 2), (0, 2)}),
        frozenset({(2, 3), (3, 4), (2, 4)}),
    }
    assert articulation_points(g) == {2}
    assert max_pbc_ratio(g) == 3 / 5


def test_blocks_empty_and_edgeless():
    assert biconnected_components(make_graph(3, [])) == []
    assert max_pbc_ratio(make_graph(3, [])) == 0.0
    with pytest.raises(ValueError):
        max_pbc_ratio(make_graph(0, []))


def test_blocks_match_delete_and_test_oracle():
    for seed in range(60):
        g = random_graph(10, 0.3, seed)
        edges = _edge_pairs(g)
        got = set(biconnected_components(g))
        want = oracle_blocks(g.n_entities, edges)
        assert got == want, "seed %d" % seed
        assert articulation_points(g) == oracle_articulations(g.n_entities, edges)


def test_every_edge_in_exactly_one_block():
    for seed in range(20):
        g = random_graph(12, 0.25, seed)
        blocks = biconnected_components(g)
        combined = [e for b in blocks for e in b]
        assert sorted(combined) == _edge_pairs(g)


def test_graph_density_convention():
    assert graph_density(3, 3) == 0.5           # triangle: complete graph hits 0.5
    assert graph_density(0, 4) == 0.0
    assert graph_density(1, 2) == 0.5
    with pytest.raises(ValueError):
        graph_density(0, 1)


def test_subgraph_density_deterministic_and_bounded():
    g = random_graph(30, 0.2, 7)
    a = subgraph_density(g, samples=50, node_fraction=0.2, seed=3)
    b = subgraph_density(g, samples=50, node_fraction=0.2, seed=3)
    c = subgraph_density(g, samples=50, node_fraction=0.2, seed=4)
    assert a == b
    assert a != c  # different seed draws different subsets on this graph
    assert 0.0 <= a <= 0.5


def test_subgraph_density_complete_graph_is_half():
    n = 10
    g = make_graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
    assert subgraph_density(g, samples=20, node_fraction=0.5, seed=0) == 0.5


def test_subgraph_density_rejects_tiny_samples():
    g = make_graph(5, [(0, 1)])
    with pytest.raises(ValueError):
        subgraph_density(g, samples=10, node_fraction=0.1, seed=0)
    with pytest.raises(ValueError):
        subgraph_density(g, samples=0, node_fraction=0.5, seed=0)


def test_coverage_longest_match_greedy():
    g = KnowledgeGraph.from_labelled_triples([
        ("chest pain", "r", "fever"),
    ])
    tokens = tokenize("chest pain and fever")
    # "chest pain" covers 2 tokens, "fever" 1 => 3 of 4.
    assert coverage_ratio(tokens, g) == 3 / 4
    # Threshold 2 drops the single-token entity.
    assert coverage_ratio(tokens, g, match_threshold=2) == 2 / 4


def test_coverage_prefers_longest_span():
    g = KnowledgeGraph.from_labelled_triples([
        ("acute chest pain", "r", "acute"),
    ])
    tokens = tokenize("acute chest pain")
    assert coverage_ratio(tokens, g) == 1.0


def test_coverage_no_matches_and_errors():
    g = KnowledgeGraph.from_labelled_triples([("x", "r", "y")])
    assert coverage_ratio(["a", "b"], g) == 0.0
    with pytest.raises(ValueError):
        coverage_ratio([], g)
    with pytest.raises(ValueError):
        coverage_ratio(["a"], g, match_threshold=0)


def test_indicator_report_fields_and_dict():
    g = make_graph(6, [(0, 1), (1, 2), (0, 2), (2, 3)])
    rep = indicator_report(g, samples=10, node_fraction=0.5, seed=1)
    assert isinstance(rep, IndicatorReport)
    assert rep.node_count == 6
    assert rep.edge_count == 4
    assert rep.coverage_ratio is None
    assert rep.max_pbc_ratio == 3 / 6
    assert 0.0 <= rep.subgraph_density <= 0.5
    d = rep.as_dict()
    assert set(d) == {"node_count", "edge_count", "coverage_ratio",
                      "max_pbc_ratio", "subgraph_density"}
    text = rep.as_key_values()
    assert "node_count=6" in text.splitlines()
    assert "coverage_ratio=" in text  # empty value when no corpus


def test_indicator_report_edge_count_counts_parallel_triples():
    g = KnowledgeGraph(
        ["a", "b", "c", "d"],
        [Triple(0, "r", 1), Triple(1, "s", 0), Triple(2, "r", 3)],
    )
    rep = indicator_report(g, samples=5, node_fraction=0.5, seed=0)
    assert rep.edge_count == 3
    assert rep.node_count == 4


def test_indicator_report_with_corpus():
    g = KnowledgeGraph.from_labelled_triples([("fever", "r", "cough")])
    rep = indicator_report(g, corpus_tokens=["fever", "and", "cough", "today"],
                           samples=5, node_fraction=1.0, seed=0)
    assert rep.coverage_ratio == 0.5
    assert not math.isnan(rep.subgraph_density)
