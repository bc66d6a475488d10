"""Graph core: similarity graph, partition objective, merge, summary graphs.

The document graph is a dense symmetric weight matrix with zero diagonal.
Partitions are label vectors (values 1..k); the partition-quality objective
is the normalized within-group association summed over occupied groups.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, tfidf


class GraphError(ValueError):
    """Invalid graph construction or mismatched graph/assignment inputs."""


@dataclass(frozen=True)
class DocumentGraph:
    """Weighted complete graph over documents; weights[i, j] is similarity."""

    weights: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"weight matrix must be square, got {w.shape}")
        if len(self.ids) != w.shape[0]:
            raise GraphError("id table length does not match matrix size")
        if not np.allclose(w, w.T):
            raise GraphError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise GraphError("weight matrix must have zero diagonal")
        if np.any(w < 0):
            raise GraphError("weights must be non-negative")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def index_of(self, doc_id: str) -> int:
        try:
            return self.ids.index(doc_id)
        except ValueError:
            raise GraphError(f"unknown document id: {doc_id!r}") from None


@dataclass(frozen=True)
class Assignment:
    """Partition state: labels[i] in 1..k maps node i to a super-node.

    Label values need not all be occupied; groups can transiently empty out
    during learning.
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise GraphError(f"k must be >= 1, got {self.k}")
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1:
            raise GraphError("labels must be a 1-d vector")
        if lab.size and (lab.min() < 1 or lab.max() > self.k):
            raise GraphError(f"labels must lie in 1..{self.k}")
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.labels.size

    def groups(self) -> dict[int, np.ndarray]:
        """Occupied label -> sorted member indices."""
        return {int(l): np.flatnonzero(self.labels == l) for l in np.unique(self.labels)}


@dataclass(frozen=True)
class SummaryGraph:
    """Super-nodes (member-id sets) and average-similarity super-edges.

    source_labels records which original label each super-node came from,
    i.e. the stable renumbering applied when empty groups are dropped.
    """

    supernodes: tuple[frozenset[str], ...]
    superedges: np.ndarray
    level: int
    source_labels: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.supernodes)


def build_document_graph(corpus: Corpus) -> DocumentGraph:
    """Cosine similarities between the documents' TF-IDF vectors."""
    n = len(corpus.documents)
    if n < 2:
        raise GraphError(f"corpus too small to build a graph: {n} document(s)")
    vectors = tfidf(corpus)
    dense = np.zeros((n, len(corpus.vocabulary)))
    for i, vec in enumerate(vectors):
        for t, w in vec.items():
            dense[i, t] = w
    norms = np.linalg.norm(dense, axis=1)
    safe = np.where(norms > 0, norms, 1.0)  # all-zero vectors get similarity 0
    unit = dense / safe[:, None]
    w = unit @ unit.T
    w = np.clip((w + w.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(w, 0.0)
    return DocumentGraph(w, corpus.ids)


def f_prob(graph: DocumentGraph, assignment: Assignment) -> float:
    """Partition quality: sum over occupied groups of within-mass / degree-mass.

    A group with zero degree mass contributes 0. Groups are visited in a
    label-independent order (by smallest member index) so the result is
    bitwise invariant under label permutation.
    """
    labels = assignment.labels
    if labels.size != graph.n:
        raise GraphError(f"assignment length {labels.size} != graph size {graph.n}")
    degrees = graph.degrees
    groups = sorted(assignment.groups().values(), key=lambda m: int(m[0]))
    total = 0.0
    for members in groups:
        sub = graph.weights[np.ix_(members, members)]
        within = sub.sum(axis=1).sum()
        mass = degrees[members].sum()
        if mass > 0:
            total += within / mass
    return float(total)


def merge_supernode(graph: DocumentGraph, members: Iterable[int]) -> tuple[DocumentGraph, int]:
    """Collapse the member nodes into one new node.

    The new node's edge to each outside node i is the member-row sum at i
    divided by the member count; intra-member edges are discarded. The new
    node is appended last; its index in the new graph is returned.
    """
    members = sorted(set(int(m) for m in members))
    if not members:
        raise GraphError("member set must be non-empty")
    if members[0] < 0 or members[-1] >= graph.n:
        raise GraphError(f"unknown node in member set: {members}")
    b = len(members)
    member_set = set(members)
    keep = [i for i in range(graph.n) if i not in member_set]
    m = len(keep)
    w = np.zeros((m + 1, m + 1))
    w[:m, :m] = graph.weights[np.ix_(keep, keep)]
    merged_row = graph.weights[members, :][:, keep].sum(axis=0) / b
    w[m, :m] = merged_row
    w[:m, m] = merged_row
    merged_id = "+".join(graph.ids[i] for i in members)
    ids = tuple(graph.ids[i] for i in keep) + (merged_id,)
    return DocumentGraph(w, ids), m


def build_summary(graph: DocumentGraph, assignment: Assignment, level: int = 0) -> SummaryGraph:
    """Summary network: super-edge(p, q) is the mean similarity over all
    cross pairs between groups p and q, zero-weight pairs included."""
    if assignment.labels.size != graph.n:
        raise GraphError(f"assignment length {assignment.labels.size} != graph size {graph.n}")
    groups = assignment.groups()
    occupied = sorted(groups)
    k = len(occupied)
    edges = np.zeros((k, k))
    for p in range(k):
        for q in range(p + 1, k):
            block = graph.weights[np.ix_(groups[occupied[p]], groups[occupied[q]])]
            edges[p, q] = edges[q, p] = block.mean()
    supernodes = tuple(
        frozenset(graph.ids[i] for i in groups[l]) for l in occupied
    )
    return SummaryGraph(supernodes, edges, level, tuple(occupied))


def induced_subgraph(graph: DocumentGraph, members: Iterable[int]) -> tuple[DocumentGraph, list[int]]:
    """Subgraph over the member nodes with original weights.

    Returns the subgraph plus the remap table: position j in the subgraph
    corresponds to original node remap[j].
    """
    remap = sorted(set(int(m) for m in members))
    if not remap:
        raise GraphError("member set must be non-empty")
    if remap[0] < 0 or remap[-1] >= graph.n:
        raise GraphError(f"unknown node in member set: {remap}")
    w = graph.weights[np.ix_(remap, remap)].copy()
    ids = tuple(graph.ids[i] for i in remap)
    return DocumentGraph(w, ids), remap


def write_edgelist(graph: DocumentGraph, path: str | Path) -> None:
    """Edge-list export: a JSON header line, then "u v w" per nonzero edge."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"v": 1, "n": graph.n, "ids": list(graph.ids)}) + "\n")
        for i in range(graph.n):
            for j in range(i + 1, graph.n):
                w = float(graph.weights[i, j])
                if w != 0.0:
                    fh.write(f"{i} {j} {w!r}\n")


def read_edgelist(path: str | Path) -> DocumentGraph:
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        n = header["n"]
        w = np.zeros((n, n))
        for line in fh:
            if not line.strip():
                continue
            u, v, weight = line.split()
            w[int(u), int(v)] = w[int(v), int(u)] = float(weight)
    return DocumentGraph(w, tuple(header["ids"]))
