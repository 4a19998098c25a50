"""Positive and multi-level negative sample construction.

Positives concatenate the K triples incident to an anchor entity. Negatives
walk the graph: a level-D record collects shortest paths from the anchor to
nodes at hop D+1, preferring ends of the anchor's own entity class, and when
the anchor-end pair stays connected after deleting a path's interior nodes a
second, node-disjoint path is appended as well. Records carry the per-triple
position-index protocol and are serialized as JSONL.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .graph import (
    KnowledgeGraph,
    ClassHierarchy,
    _shortest_node_path,
    _path_triples,
    nodes_at_hop,
)
from .text import tokenize

__all__ = [
    "CLS_TOKEN",
    "SEP_TOKEN",
    "NoCandidateError",
    "PathSegment",
    "SampleRecord",
    "build_positive",
    "build_negative",
    "build_all",
    "validate_level_config",
    "SampleAugmenter",
    "write_jsonl",
]

logger = logging.getLogger(__name__)

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"


class NoCandidateError(ValueError):
    """No node sits at the hop distance a negative level requires."""


@dataclass
class PathSegment:
    """One appended path: its triples in walk order and the far end node."""

    triples: list
    end_node: int
    separator_follows: bool = False


@dataclass
class SampleRecord:
    """A serialized training sample for one anchor entity.

    `tokens` starts with [CLS] (position index 0); every token of the j-th
    triple in the record carries position index j, and separator tokens take
    the index of the triple that follows them. `level` stays None on
    positives.
    """

    anchor: int
    kind: str
    level: int | None
    segments: list = field(default_factory=list)
    tokens: list = field(default_factory=list)
    position_index: list = field(default_factory=list)
    paths_merged: int = 0
    truncated: bool = False

    def as_dict(self):
        out = {"anchor": self.anchor, "kind": self.kind}
        if self.kind == "negative":
            out["level"] = self.level
        out["tokens"] = list(self.tokens)
        out["position_index"] = list(self.position_index)
        out["paths_merged"] = self.paths_merged
        out["truncated"] = self.truncated
        return out


def _triple_tokens(g, triple):
    """head tokens, then relation tokens, then tail tokens."""
    return (
        tokenize(g.labels[triple.head])
        + tokenize(triple.relation)
        + tokenize(g.labels[triple.tail])
    )


def _serialize(g, record):
    """Fill tokens/position_index from record.segments, in place."""
    tokens = [CLS_TOKEN]
    index = [0]
    counter = 0
    for seg_no, segment in enumerate(record.segments):
        if seg_no > 0 and record.segments[seg_no - 1].separator_follows:
            tokens.append(SEP_TOKEN)
            index.append(counter + 1)
        for triple in segment.triples:
            counter += 1
            toks = _triple_tokens(g, triple)
            tokens.extend(toks)
            index.extend([counter] * len(toks))
    record.tokens = tokens
    record.position_index = index
    return record


def _incident_sorted(g, anchor):
    """Incident triples ordered by neighbor id, then triple content."""

    def key(t):
        neighbor = t.tail if t.head == anchor else t.head
        return (neighbor, t.head, t.relation, t.tail)

    return sorted(g.incident_triples(anchor), key=key)


def build_positive(g, anchor, K=2, positive_hop=1):
    """Concatenate the K incident triples of `anchor` into one record.

    Ties between triples are broken by lowest neighbor id. With
    positive_hop > 1 (an ablation setting) the record instead merges the
    shortest paths to the K lowest-id nodes at that hop.
    """
    g.check_entity(anchor)
    if K < 1:
        raise ValueError("K must be >= 1")
    record = SampleRecord(anchor=anchor, kind="positive", level=None)
    if positive_hop == 1:
        incident = _incident_sorted(g, anchor)
        if not incident:
            raise ValueError(
                "entity %d (%r) is isolated, cannot build a positive sample"
                % (anchor, g.labels[anchor])
            )
        for triple in incident[:K]:
            record.segments.append(PathSegment([triple], _other_end(triple, anchor)))
    else:
        ends = nodes_at_hop(g, anchor, positive_hop)
        if not ends:
            raise ValueError(
                "entity %d (%r) has no node at hop %d for a positive sample"
                % (anchor, g.labels[anchor], positive_hop)
            )
        for end in ends[:K]:
            node_path = _shortest_node_path(g, anchor, end)
            record.segments.append(PathSegment(_path_triples(g, node_path), end))
    record.paths_merged = len(record.segments)
    return _serialize(g, record)


def _other_end(triple, anchor):
    return triple.tail if triple.head == anchor else triple.head


def _node_class(g, hierarchy, node):
    return hierarchy.class_of.get(g.labels[node])


def build_negative(g, hierarchy, anchor, level, L=64, seed=0,
                   same_class_preference=True, negative_base_hop=2):
    """Build one level-`level` negative record for `anchor`.

    Repeats until the serialized record reaches L tokens: pick an unused end
    node at hop level + negative_base_hop - 1 (same-class ends first when any
    exist), append the shortest path that reuses no earlier triple, drop the
    path's interior nodes, and append a second interior-disjoint path when
    the pair is still connected without them. Stops early with truncated=True
    when every candidate end is exhausted.
    """
    g.check_entity(anchor)
    if level < 1:
        raise ValueError("level must be >= 1")
    if negative_base_hop < 1:
        raise ValueError("negative_base_hop must be >= 1")
    target_hop = level + negative_base_hop - 1
    candidates = nodes_at_hop(g, anchor, target_hop)
    if not candidates:
        raise NoCandidateError(
            "no node at hop %d from entity %d (%r) for level %d"
            % (target_hop, anchor, g.labels[anchor], level)
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    record = SampleRecord(anchor=anchor, kind="negative", level=level)
    anchor_class = _node_class(g, hierarchy, anchor)
    used_ends = set()
    used_edges = set()

    def token_length():
        n = 1  # [CLS]
        for seg_no, segment in enumerate(record.segments):
            if seg_no > 0 and record.segments[seg_no - 1].separator_follows:
                n += 1
            for triple in segment.triples:
                n += len(_triple_tokens(g, triple))
        return n

    while token_length() < L:
        pool = [c for c in candidates if c not in used_ends]
        if same_class_preference and anchor_class is not None:
            same = [c for c in pool if _node_class(g, hierarchy, c) == anchor_class]
            if same:
                pool = same
        path = None
        while pool:
            end = int(pool[int(rng.integers(len(pool)))])
            path = _shortest_node_path(g, anchor, end, banned_edges=used_edges)
            if path is not None:
                break
            used_ends.add(end)
            pool.remove(end)
        if path is None:
            record.truncated = True
            break
        used_ends.add(end)
        segments = [path]
        interior = set(path[1:-1])
        second = _shortest_node_path(
            g, anchor, end, banned_nodes=interior, banned_edges=used_edges
        )
        if second is not None and interior:
            segments.append(second)
        for node_path in segments:
            triples = _path_triples(g, node_path)
            for t in triples:
                used_edges.add((min(t.head, t.tail), max(t.head, t.tail)))
            if record.segments:
                record.segments[-1].separator_follows = True
            record.segments.append(PathSegment(triples, end))
    record.paths_merged = len(record.segments)
    return _serialize(g, record)


def validate_level_config(K=2, k=3, L=64, positive_hop=1, negative_base_hop=2):
    """Sanity-check sampling levels; returns a list of warning strings.

    Configurations whose negatives sit at a hop less than or equal to the
    positives' hop are known to degrade contrastive training sharply, so they
    warn rather than error. Structurally invalid values raise instead.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1 (got %d)" % k)
    if L < 4:
        raise ValueError("L must leave room for at least one short triple")
    if positive_hop < 1 or negative_base_hop < 1:
        raise ValueError("hops must be >= 1")
    warnings = []
    if negative_base_hop <= positive_hop:
        warnings.append(
            "level-1 negatives sit at hop %d, not beyond the positives at hop %d: "
            "negatives overlapping the positive neighborhood sharply degrade "
            "contrastive training" % (negative_base_hop, positive_hop)
        )
    if positive_hop > 1:
        warnings.append(
            "positives drawn at hop %d instead of the immediate neighborhood "
            "weaken the positive signal" % positive_hop
        )
    return warnings


def build_all(g, hierarchy, anchors, K=2, k=3, L=64, seed=42,
              same_class_preference=True, positive_hop=1, negative_base_hop=2):
    """Yield 1 positive and up to k negatives per anchor, in anchor order.

    Per-record seeds are derived from (seed, anchor, level), so the stream is
    deterministic and independent of scheduling. Failures are logged and the
    stream continues.
    """
    for warning in validate_level_config(K, k, L, positive_hop, negative_base_hop):
        logger.warning(warning)
    for anchor in anchors:
        try:
            yield build_positive(g, anchor, K=K, positive_hop=positive_hop)
        except ValueError as exc:
            logger.warning("skipping positive for anchor %d: %s", anchor, exc)
        for level in range(1, k + 1):
            try:
                yield build_negative(
                    g, hierarchy, anchor, level, L=L,
                    seed=[seed, anchor, level],
                    same_class_preference=same_class_preference,
                    negative_base_hop=negative_base_hop,
                )
            except NoCandidateError as exc:
                logger.info("skipping level %d for anchor %d: %s", level, anchor, exc)
            except ValueError as exc:
                logger.warning("skipping level %d for anchor %d: %s", level, anchor, exc)


def write_jsonl(records, fh):
    """Write records to an open text file, one JSON object per line."""
    count = 0
    for record in records:
        fh.write(json.dumps(record.as_dict(), ensure_ascii=False) + "\n")
        count += 1
    return count


class SampleAugmenter(BaseEstimator):
    """Builds contrastive sample records from a knowledge graph.

    fit() binds the graph and class hierarchy; transform() turns a list of
    anchor entity ids into SampleRecords (one positive plus up to k
    negatives each).

    Parameters mirror the sampling configuration: K incident triples per
    positive, k negative levels, target token length L, same-class end
    preference, and the base random seed. positive_hop / negative_base_hop
    move the sampling neighborhoods for ablation runs; the defaults (1, 2)
    keep positives adjacent and negatives strictly farther out.
    """

    def __init__(self, K=2, k=3, L=64, same_class_preference=True,
                 positive_hop=1, negative_base_hop=2, random_state=42):
        self.K = K
        self.k = k
        self.L = L
        self.same_class_preference = same_class_preference
        self.positive_hop = positive_hop
        self.negative_base_hop = negative_base_hop
        self.random_state = random_state

    def validate(self):
        """Run the level-configuration checks; returns warning strings."""
        return validate_level_config(
            self.K, self.k, self.L, self.positive_hop, self.negative_base_hop
        )

    def fit(self, graph, hierarchy=None):
        if not isinstance(graph, KnowledgeGraph):
            raise TypeError("graph must be a KnowledgeGraph")
        if not isinstance(hierarchy, ClassHierarchy):
            raise TypeError("hierarchy must be a ClassHierarchy")
        if not isinstance(self.random_state, (int, np.integer)):
            raise ValueError("random_state must be an integer seed")
        self.validate()
        self.graph_ = graph
        self.hierarchy_ = hierarchy
        return self

    def _require_fitted(self):
        if not hasattr(self, "graph_"):
            raise NotFittedError("this SampleAugmenter is not fitted; call fit first")

    def transform(self, anchors=None):
        """Sample records for the given anchor ids (default: every entity)."""
        self._require_fitted()
        if anchors is None:
            anchors = range(self.graph_.n_entities)
        anchors = [int(a) for a in anchors]
        for a in anchors:
            self.graph_.check_entity(a)
        return list(
            build_all(
                self.graph_, self.hierarchy_, anchors,
                K=self.K, k=self.k, L=self.L, seed=int(self.random_state),
                same_class_preference=self.same_class_preference,
                positive_hop=self.positive_hop,
                negative_base_hop=self.negative_base_hop,
            )
        )
