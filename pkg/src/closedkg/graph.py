"""In-memory knowledge graph, file ingestion, and hop/path primitives.

The graph is immutable after construction and treated as undirected for all
hop, path and biconnectivity computations. Entity ids are dense integers
``0..N-1`` assigned in first-seen order during ingestion.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .text import normalize_label

__all__ = [
    "Triple",
    "KnowledgeGraph",
    "ClassHierarchy",
    "IngestReport",
    "IngestError",
    "UnreachableError",
    "UNREACHABLE",
    "load_graph",
    "load_triples",
    "load_hierarchy",
    "hop_distance",
    "shortest_path",
    "nodes_at_hop",
]

#: Sentinel returned by :func:`hop_distance` when no path exists.
UNREACHABLE = math.inf


class IngestError(ValueError):
    """Raised for unrecoverable ingestion problems (e.g. cyclic hyponymy)."""


class UnreachableError(ValueError):
    """Raised when a path is requested between disconnected entities."""


class Triple(NamedTuple):
    head: int
    relation: str
    tail: int


class KnowledgeGraph:
    """Entities, typed triples, and directed/undirected adjacency views.

    Parameters
    ----------
    labels : list of str
        Entity surface forms; position is the entity id.
    triples : list of Triple
        Deduplicated triples over entity ids. Self-loops are not allowed.
    """

    def __init__(self, labels, triples):
        self.labels = list(labels)
        self.triples = list(triples)
        self._id_of = {label: i for i, label in enumerate(self.labels)}
        if len(self._id_of) != len(self.labels):
            raise IngestError("entity labels are not unique after normalization")

        n = len(self.labels)
        out_adj = [[] for _ in range(n)]
        und = [set() for _ in range(n)]
        pair_triples = {}
        for t in self.triples:
            if t.head == t.tail:
                raise IngestError("self-loop triple %r" % (t,))
            out_adj[t.head].append((t.relation, t.tail))
            und[t.head].add(t.tail)
            und[t.tail].add(t.head)
            key = (min(t.head, t.tail), max(t.head, t.tail))
            pair_triples.setdefault(key, []).append(t)

        self.out_adjacency = [sorted(nbrs) for nbrs in out_adj]
        #: Undirected neighbor lists, sorted ascending for deterministic walks.
        self.adjacency = [sorted(nbrs) for nbrs in und]
        self._pair_triples = {k: sorted(v) for k, v in pair_triples.items()}

    @classmethod
    def from_labelled_triples(cls, rows):
        """Build a graph from (head, relation, tail) label rows, in row order."""
        labels = []
        ids = {}
        triples = []
        seen = set()
        for head, rel, tail in rows:
            for label in (head, tail):
                if label not in ids:
                    ids[label] = len(labels)
                    labels.append(label)
            t = Triple(ids[head], rel, ids[tail])
            if t.head != t.tail and t not in seen:
                seen.add(t)
                triples.append(t)
        return cls(labels, triples)

    @property
    def n_entities(self):
        return len(self.labels)

    @property
    def n_triples(self):
        return len(self.triples)

    def id_of(self, label):
        try:
            return self._id_of[label]
        except KeyError:
            raise KeyError("unknown entity label %r" % label) from None

    def undirected_pairs(self):
        """Set of (u, v) with u < v; one entry per connected entity pair."""
        return set(self._pair_triples)

    def triples_between(self, u, v):
        """Triples connecting u and v (either direction), sorted."""
        return self._pair_triples.get((min(u, v), max(u, v)), [])

    def check_entity(self, e):
        if not 0 <= e < len(self.labels):
            raise KeyError("unknown entity id %d (graph has %d entities)" % (e, len(self.labels)))

    def incident_triples(self, e):
        """Triples touching entity e, sorted by (other endpoint, relation)."""
        self.check_entity(e)
        out = []
        for v in self.adjacency[e]:
            out.extend(self.triples_between(e, v))
        return out


class ClassHierarchy:
    """Entity-to-class assignments plus the class-over-class hyponymy forest.

    ``hyponymy`` holds (child, parent) label pairs for both entity->class and
    class->class edges, so entities and classes live in one tree. The pairs
    must form a forest: one parent per child, no cycles.
    """

    def __init__(self, class_of, hyponymy):
        self.class_of = dict(class_of)
        self.hyponymy = list(hyponymy)
        self.parent = {}
        for child, par in self.hyponymy:
            if child in self.parent:
                raise IngestError("node %r has two parents (%r, %r)" % (child, self.parent[child], par))
            self.parent[child] = par
        self._check_acyclic()
        self.classes = {par for _, par in self.hyponymy} | set(self.class_of.values())

    def _check_acyclic(self):
        state = {}  # 0 visiting, 1 done
        for start in self.parent:
            node = start
            chain = []
            while node in self.parent and state.get(node) is None:
                state[node] = 0
                chain.append(node)
                node = self.parent[node]
                if state.get(node) == 0:
                    raise IngestError(
                        "cyclic hyponymy: edge (%r, %r) closes a cycle" % (chain[-1], node))
            for seen in chain:
                state[seen] = 1

    def nodes(self):
        """All labels in the forest (entities and classes), sorted."""
        out = set(self.parent)
        out.update(self.parent.values())
        return sorted(out)

    def roots(self):
        return sorted({p for p in self.parent.values() if p not in self.parent})

    def class_of_entity(self, label):
        """Class label for an entity, or None when unclassed."""
        return self.class_of.get(label)


@dataclass
class IngestReport:
    """Counts collected during file ingestion; errors carry line numbers."""

    triples_read: int = 0
    triples_loaded: int = 0
    triples_rejected: int = 0
    triples_duplicate: int = 0
    hierarchy_read: int = 0
    hierarchy_loaded: int = 0
    hierarchy_rejected: int = 0
    hierarchy_duplicate: int = 0
    errors: list = field(default_factory=list)

    def add_error(self, path, line_no, message):
        self.errors.append("%s:%d: %s" % (path, line_no, message))

    def as_key_values(self):
        pairs = [
            ("triples_read", self.triples_read),
            ("triples_loaded", self.triples_loaded),
            ("triples_rejected", self.triples_rejected),
            ("triples_duplicate", self.triples_duplicate),
            ("hierarchy_read", self.hierarchy_read),
            ("hierarchy_loaded", self.hierarchy_loaded),
            ("hierarchy_rejected", self.hierarchy_rejected),
            ("hierarchy_duplicate", self.hierarchy_duplicate),
        ]
        return "\n".join("%s=%d" % kv for kv in pairs)

    def summary(self):
        lines = ["ingest: %d triples loaded (%d rejected, %d duplicates), "
                 "%d hierarchy rows loaded (%d rejected, %d duplicates)"
                 % (self.triples_loaded, self.triples_rejected, self.triples_duplicate,
                    self.hierarchy_loaded, self.hierarchy_rejected, self.hierarchy_duplicate)]
        lines.extend(self.errors)
        return "\n".join(lines)


def load_triples(triples_path, report=None):
    """Load a UTF-8 ``head<TAB>relation<TAB>tail`` file into a KnowledgeGraph.

    Malformed rows, self-loops and duplicates are collected in the report
    rather than aborting the load.
    """
    report = report if report is not None else IngestReport()
    labels = []
    ids = {}
    triples = []
    seen = set()
    with open(triples_path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            report.triples_read += 1
            parts = line.split("\t")
            if len(parts) != 3:
                report.triples_rejected += 1
                report.add_error(triples_path, line_no, "expected 3 tab-separated fields, got %d" % len(parts))
                continue
            head, rel, tail = (normalize_label(p) for p in parts)
            if not head or not rel or not tail:
                report.triples_rejected += 1
                report.add_error(triples_path, line_no, "empty field")
                continue
            if head == tail:
                report.triples_rejected += 1
                report.add_error(triples_path, line_no, "self-loop triple on %r" % head)
                continue
            for label in (head, tail):
                if label not in ids:
                    ids[label] = len(labels)
                    labels.append(label)
            t = Triple(ids[head], rel, ids[tail])
            if t in seen:
                report.triples_duplicate += 1
                continue
            seen.add(t)
            triples.append(t)
    report.triples_loaded = len(triples)
    return KnowledgeGraph(labels, triples), report


def load_hierarchy(classes_path, report=None):
    """Load a ``child<TAB>parent<TAB>kind`` file (kind: ec or cc) into a ClassHierarchy.

    Raises IngestError on cyclic hyponymy, naming one edge of the cycle.
    """
    report = report if report is not None else IngestReport()
    class_of = {}
    hyponymy = []
    parent_seen = {}
    with open(classes_path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            report.hierarchy_read += 1
            parts = line.split("\t")
            if len(parts) != 3:
                report.hierarchy_rejected += 1
                report.add_error(classes_path, line_no, "expected 3 tab-separated fields, got %d" % len(parts))
                continue
            child, par, kind = (normalize_label(p) for p in parts)
            if kind not in ("ec", "cc"):
                report.hierarchy_rejected += 1
                report.add_error(classes_path, line_no, "unknown row kind %r (expected ec or cc)" % kind)
                continue
            if not child or not par or child == par:
                report.hierarchy_rejected += 1
                report.add_error(classes_path, line_no, "bad child/parent pair")
                continue
            if child in parent_seen:
                if parent_seen[child] == par:
                    report.hierarchy_duplicate += 1
                else:
                    report.hierarchy_rejected += 1
                    report.add_error(classes_path, line_no,
                                     "node %r already has parent %r" % (child, parent_seen[child]))
                continue
            parent_seen[child] = par
            hyponymy.append((child, par))
            if kind == "ec":
                class_of[child] = par
    report.hierarchy_loaded = len(hyponymy)
    return ClassHierarchy(class_of, hyponymy), report


def load_graph(triples_path, classes_path):
    """Load both files; returns (graph, hierarchy, report)."""
    report = IngestReport()
    graph, report = load_triples(triples_path, report)
    hierarchy, report = load_hierarchy(classes_path, report)
    return graph, hierarchy, report


def _bfs_distances(g, start, banned_nodes=(), banned_edges=()):
    """Hop distances from start over the undirected view; -1 where unreachable.

    banned_nodes are never entered (start itself is allowed); banned_edges are
    (u, v) pairs with u < v that are skipped in both directions.
    """
    dist = [-1] * g.n_entities
    dist[start] = 0
    queue = deque([start])
    banned_nodes = set(banned_nodes)
    banned_edges = set(banned_edges)
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] != -1 or v in banned_nodes:
                continue
            if banned_edges and (min(u, v), max(u, v)) in banned_edges:
                continue
            dist[v] = dist[u] + 1
            queue.append(v)
    return dist


def hop_distance(g, start, end):
    """Length in edges of a shortest undirected path; UNREACHABLE if none."""
    g.check_entity(start)
    g.check_entity(end)
    if start == end:
        return 0
    dist = _bfs_distances(g, start)
    return dist[end] if dist[end] != -1 else UNREACHABLE


def _shortest_node_path(g, start, end, banned_nodes=(), banned_edges=()):
    """Node sequence of the lexicographically-smallest shortest path, or None.

    Ties between equal-length paths are broken by walking greedily from start
    and always taking the lowest-id neighbor that still lies on some shortest
    path, which makes results reproducible.
    """
    if start == end:
        return [start]
    banned_nodes = set(banned_nodes)
    banned_edges = set(banned_edges)
    dist_end = _bfs_distances(g, end, banned_nodes, banned_edges)
    if dist_end[start] == -1:
        return None
    path = [start]
    u = start
    remaining = dist_end[start]
    while u != end:
        for v in g.adjacency[u]:  # ascending id: lowest-id tie-break
            if v in banned_nodes:
                continue
            if banned_edges and (min(u, v), max(u, v)) in banned_edges:
                continue
            if dist_end[v] == remaining - 1:
                path.append(v)
                u = v
                remaining -= 1
                break
    return path


def _path_triples(g, node_path):
    """One triple per step of a node path; parallel edges resolved by sort order."""
    return [g.triples_between(u, v)[0] for u, v in zip(node_path, node_path[1:])]


def shortest_path(g, start, end):
    """Triples along one shortest undirected path from start to end.

    Deterministic under the lowest-entity-id tie-break. Raises
    UnreachableError when the pair is disconnected.
    """
    g.check_entity(start)
    g.check_entity(end)
    node_path = _shortest_node_path(g, start, end)
    if node_path is None:
        raise UnreachableError(
            "no path between %r and %r" % (g.labels[start], g.labels[end]))
    return _path_triples(g, node_path)


def nodes_at_hop(g, start, hop):
    """Entity ids at hop distance exactly `hop` from start, ascending."""
    g.check_entity(start)
    dist = _bfs_distances(g, start)
    return [v for v, d in enumerate(dist) if d == hop]
