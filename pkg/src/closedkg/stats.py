"""Structural indicators for closed-domain knowledge graphs.

Five indicators: node count, edge count, corpus coverage ratio, largest
point-biconnected-component share, and mean random-subgraph density. Density
counts each undirected edge once, so a complete graph scores 0.5 under the
|E| / (|V|(|V|-1)) convention; the convention is pinned here for
reproducibility.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "biconnected_components",
    "articulation_points",
    "max_pbc_ratio",
    "coverage_ratio",
    "subgraph_density",
    "graph_density",
    "IndicatorReport",
    "indicator_report",
]


def _biconnected_dfs(adjacency):
    """Single-pass iterative Hopcroft-Tarjan over an adjacency-list graph.

    Returns (blocks, articulation_points) where each block is a set of
    undirected edges (u, v) with u < v. The explicit stack keeps deep graphs
    from hitting the recursion limit.
    """
    n = len(adjacency)
    visited = [False] * n
    blocks = []
    arts = set()
    for start in range(n):
        if visited[start]:
            continue
        discovery = {start: 0}
        low = {start: 0}
        root_children = 0
        visited[start] = True
        edge_stack = []
        edge_index = {}
        stack = [(start, start, iter(adjacency[start]))]
        while stack:
            grandparent, parent, children = stack[-1]
            advanced = False
            for child in children:
                if child == grandparent:
                    continue
                if visited[child]:
                    if discovery.get(child, n) <= discovery[parent]:  # back edge
                        low[parent] = min(low[parent], discovery[child])
                        edge_index[(parent, child)] = len(edge_stack)
                        edge_stack.append((parent, child))
                else:
                    low[child] = discovery[child] = len(discovery)
                    visited[child] = True
                    stack.append((parent, child, iter(adjacency[child])))
                    edge_index[(parent, child)] = len(edge_stack)
                    edge_stack.append((parent, child))
                advanced = True
                break
            if advanced:
                continue
            stack.pop()
            if len(stack) > 1:
                if low[parent] >= discovery[grandparent]:
                    arts.add(grandparent)
                    ind = edge_index[(grandparent, parent)]
                    blocks.append(edge_stack[ind:])
                    del edge_stack[ind:]
                low[grandparent] = min(low[parent], low[grandparent])
            elif stack:  # parent was a direct child of the root
                root_children += 1
                ind = edge_index[(start, parent)]
                blocks.append(edge_stack[ind:])
                del edge_stack[ind:]
        if root_children > 1:
            arts.add(start)
    canonical = [frozenset((min(u, v), max(u, v)) for u, v in block) for block in blocks]
    return canonical, arts


def biconnected_components(g):
    """Blocks of the undirected graph, each a frozenset of (u, v) edges with u < v.

    Every edge belongs to exactly one block; blocks overlap only at
    articulation vertices. Isolated vertices belong to no block.
    """
    return _biconnected_dfs(g.adjacency)[0]


def articulation_points(g):
    """Vertices whose removal disconnects their component."""
    return _biconnected_dfs(g.adjacency)[1]


def max_pbc_ratio(g):
    """Node share of the largest point-biconnected component, in [0, 1]."""
    if g.n_entities == 0:
        raise ValueError("graph is empty")
    blocks = biconnected_components(g)
    if not blocks:
        return 0.0
    largest = max(len({v for edge in block for v in edge}) for block in blocks)
    return largest / g.n_entities


def coverage_ratio(tokens, g, match_threshold=1):
    """Fraction of corpus tokens covered by matched entity label spans.

    Matching is longest-match greedy: at each position the longest entity
    label (as a token sequence) that equals the upcoming span is taken, the
    scan jumps past it, and its length counts toward the covered total. Only
    entities whose matched-token count reaches `match_threshold` are eligible,
    so a threshold of 2 ignores single-token entities.
    """
    from .text import tokenize

    tokens = list(tokens)
    if not tokens:
        raise ValueError("corpus is empty")
    if match_threshold < 1:
        raise ValueError("match_threshold must be a positive integer")
    spans = set()
    for label in g.labels:
        seq = tuple(tokenize(label))
        if len(seq) >= match_threshold and seq:
            spans.add(seq)
    if not spans:
        return 0.0
    max_len = max(len(s) for s in spans)
    covered = 0
    i = 0
    n = len(tokens)
    while i < n:
        matched = 0
        for length in range(min(max_len, n - i), max(match_threshold, 1) - 1, -1):
            if tuple(tokens[i:i + length]) in spans:
                matched = length
                break
        if matched:
            covered += matched
            i += matched
        else:
            i += 1
    return covered / n


def graph_density(n_edges, n_nodes):
    """|E| / (|V| (|V| - 1)) with each undirected edge counted once."""
    if n_nodes < 2:
        raise ValueError("density needs at least 2 nodes")
    return n_edges / (n_nodes * (n_nodes - 1))


def subgraph_density(g, samples=100, node_fraction=0.10, seed=0):
    """Mean density of random induced subgraphs holding a fraction of the nodes.

    Each sample draws ceil(node_fraction * |V|) nodes uniformly without
    replacement using a per-sample derived seed, so the result is identical
    whether samples run serially or in parallel.
    """
    n = g.n_entities
    size = math.ceil(node_fraction * n)
    if size < 2:
        raise ValueError(
            "graph too small: node_fraction %.3f of %d nodes gives subgraphs of size %d < 2"
            % (node_fraction, n, size))
    if samples < 1:
        raise ValueError("samples must be positive")
    child_seeds = np.random.SeedSequence(seed).spawn(samples)
    total = 0.0
    for child in child_seeds:
        rng = np.random.default_rng(child)
        subset = set(rng.choice(n, size=size, replace=False).tolist())
        edges = 0
        for u in subset:
            for v in g.adjacency[u]:
                if v > u and v in subset:
                    edges += 1
        total += graph_density(edges, size)
    return total / samples


@dataclass
class IndicatorReport:
    """The five indicators for one graph/corpus pair."""

    node_count: int
    edge_count: int
    coverage_ratio: Optional[float]
    max_pbc_ratio: float
    subgraph_density: float

    def as_key_values(self):
        cov = "" if self.coverage_ratio is None else repr(self.coverage_ratio)
        return "\n".join([
            "node_count=%d" % self.node_count,
            "edge_count=%d" % self.edge_count,
            "coverage_ratio=%s" % cov,
            "max_pbc_ratio=%s" % repr(self.max_pbc_ratio),
            "subgraph_density=%s" % repr(self.subgraph_density),
        ])

    def as_dict(self):
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "coverage_ratio": self.coverage_ratio,
            "max_pbc_ratio": self.max_pbc_ratio,
            "subgraph_density": self.subgraph_density,
        }


def indicator_report(g, corpus_tokens=None, match_threshold=1, samples=100,
                     node_fraction=0.10, seed=0):
    """Aggregate all five indicators; coverage is None without a corpus.

    Edge count follows the triple-count convention (one edge per loaded
    triple); density and biconnectivity use the undirected simple view.
    """
    coverage = None
    if corpus_tokens is not None:
        coverage = coverage_ratio(corpus_tokens, g, match_threshold)
    return IndicatorReport(
        node_count=g.n_entities,
        edge_count=g.n_triples,
        coverage_ratio=coverage,
        max_pbc_ratio=max_pbc_ratio(g),
        subgraph_density=subgraph_density(g, samples=samples,
                                          node_fraction=node_fraction, seed=seed),
    )
