"""Shared fixtures and brute-force oracles.

The oracles re-derive graph facts from first principles (delete-and-test
articulation splitting, plain BFS) so the library algorithms are checked
against independent implementations rather than themselves.
"""

import numpy as np
import pytest

from closedkg.graph import KnowledgeGraph, Triple


def make_graph(n, edges, relation="r"):
    """Graph with entities e0..e{n-1} and the given undirected id pairs."""
    labels = ["e%d" % i for i in range(n)]
    triples = [Triple(u, relation, v) for u, v in edges]
    return KnowledgeGraph(labels, triples)


def random_graph(n, p, seed):
    """Seeded random graph on n nodes; each pair is an edge with prob p."""
    rng = np.random.RandomState(seed)
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random_sample() < p
    ]
    return make_graph(n, edges)


def adjacency_from_triples(g):
    """Undirected adjacency dict rebuilt from the raw triple list."""
    adj = {u: set() for u in range(g.n_entities)}
    for t in g.triples:
        adj[t.head].add(t.tail)
        adj[t.tail].add(t.head)
    return adj


def bfs_hops(g, start):
    """Plain BFS hop distances from start; -1 where unreachable."""
    adj = adjacency_from_triples(g)
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return [dist.get(u, -1) for u in range(g.n_entities)]


def _components(nodes, adj):
    """Connected components of the subgraph induced on `nodes`."""
    seen = set()
    comps = []
    for s in sorted(nodes):
        if s in seen:
            continue
        comp = {s}
        seen.add(s)
        stack = [s]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def _induced_adj(nodes, edges):
    adj = {u: set() for u in nodes}
    for u, v in edges:
        if u in nodes and v in nodes:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _find_articulation(comp, edges):
    """Any vertex whose removal disconnects `comp`, else None."""
    if len(comp) <= 2:
        return None
    for v in sorted(comp):
        rest = comp - {v}
        adj = _induced_adj(rest, edges)
        if len(_components(rest, adj)) > 1:
            return v
    return None


def oracle_blocks(n, edges):
    """Biconnected components by recursive articulation splitting.

    Returns a set of frozensets of (u, v) edges with u < v. A component with
    no articulation vertex is one block; otherwise the graph splits at the
    articulation vertex and each piece (plus the vertex) recurses.
    """
    edges = {(min(u, v), max(u, v)) for u, v in edges}

    def solve(nodes, sub_edges):
        out = []
        adj = _induced_adj(nodes, sub_edges)
        for comp in _components(nodes, adj):
            comp_edges = {(u, v) for u, v in sub_edges if u in comp and v in comp}
            if not comp_edges:
                continue
            art = _find_articulation(comp, comp_edges)
            if art is None:
                out.append(frozenset(comp_edges))
                continue
            rest = comp - {art}
            rest_adj = _induced_adj(rest, comp_edges)
            for piece in _components(rest, rest_adj):
                piece_nodes = piece | {art}
                piece_edges = {
                    (u, v) for u, v in comp_edges
                    if u in piece_nodes and v in piece_nodes
                }
                out.extend(solve(piece_nodes, piece_edges))
        return out

    return set(solve(set(range(n)), edges))


def oracle_articulations(n, edges):
    """Vertices whose removal disconnects their component."""
    edges = {(min(u, v), max(u, v)) for u, v in edges}
    nodes = set(range(n))
    adj = _induced_adj(nodes, edges)
    arts = set()
    for comp in _components(nodes, adj):
        if len(comp) < 3:
            continue
        for v in comp:
            rest = comp - {v}
            rest_adj = _induced_adj(rest, edges)
            if len(_components(rest, rest_adj)) > 1:
                arts.add(v)
    return arts


@pytest.fixture(scope="session")
def toy_kg():
    from closedkg.datasets import load_toy_kg

    g, hierarchy, report = load_toy_kg()
    return g, hierarchy, report
