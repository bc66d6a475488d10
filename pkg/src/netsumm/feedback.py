"""Analyst feedback: positive/negative pair graphs and their bookkeeping.

Interactions (overlap, annotate, highlight, minimize, close) are mapped to
must-group / must-separate document pairs. A partition satisfies the
feedback when every positive pair is co-grouped and every negative pair is
split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .netgraph import Assignment

POSITIVE_KINDS = ("annotate", "highlight", "overlap")
NEGATIVE_KINDS = ("minimize", "close")
EVENT_KINDS = POSITIVE_KINDS + NEGATIVE_KINDS


class FeedbackError(ValueError):
    """Malformed event or unknown document id."""


class FeedbackConflict(FeedbackError):
    """A pair was fed back with both signs."""


def _pair(a: str, b: str) -> tuple[str, str]:
    if a == b:
        raise FeedbackError(f"self-pair is not allowed: {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class FeedbackGraphs:
    """Immutable pair sets for positive and negative analyst feedback."""

    positive: frozenset[tuple[str, str]] = frozenset()
    negative: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        both = self.positive & self.negative
        if both:
            raise FeedbackConflict(f"pairs present in both sets: {sorted(both)}")

    @property
    def total(self) -> int:
        return len(self.positive) + len(self.negative)

    def add_positive(self, a: str, b: str) -> "FeedbackGraphs":
        p = _pair(a, b)
        if p in self.negative:
            raise FeedbackConflict(f"pair {p} already has negative feedback")
        return FeedbackGraphs(self.positive | {p}, self.negative)

    def add_negative(self, a: str, b: str) -> "FeedbackGraphs":
        p = _pair(a, b)
        if p in self.positive:
            raise FeedbackConflict(f"pair {p} already has positive feedback")
        return FeedbackGraphs(self.positive, self.negative | {p})

    def document_ids(self) -> set[str]:
        out: set[str] = set()
        for a, b in self.positive | self.negative:
            out.add(a)
            out.add(b)
        return out


@dataclass(frozen=True)
class InteractionEvent:
    """One semantic interaction.

    object is the second document for overlap; context is the document being
    read when another one is minimized or closed.
    """

    kind: str
    subject: str
    object: str | None = None
    context: str | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise FeedbackError(f"unknown interaction kind: {self.kind!r}")
        if self.kind == "overlap":
            if not self.object:
                raise FeedbackError("overlap requires a second document")
            if self.object == self.subject:
                raise FeedbackError("overlap requires two distinct documents")
        if self.kind in NEGATIVE_KINDS:
            if not self.context:
                raise FeedbackError(f"{self.kind} requires the currently open document as context")
            if self.context == self.subject:
                raise FeedbackError(f"{self.kind} context must differ from its subject")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "subject": self.subject, "timestamp": self.timestamp}
        if self.object is not None:
            out["object"] = self.object
        if self.context is not None:
            out["context"] = self.context
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "InteractionEvent":
        return cls(
            kind=obj["kind"],
            subject=obj["subject"],
            object=obj.get("object"),
            context=obj.get("context"),
            timestamp=float(obj.get("timestamp", 0.0)),
        )


def apply_interaction(
    fb: FeedbackGraphs, event: InteractionEvent, focus: str | None = None
) -> FeedbackGraphs:
    """Fold one interaction into the feedback graphs.

    overlap pairs its two documents positively. annotate/highlight pair the
    subject with the session's focus document when one is active; without a
    focus (or when the subject is the focus) the event carries no pair.
    minimize/close pair the subject negatively with the document being read.
    Re-adding an existing same-sign pair is a no-op; an opposite-sign pair
    raises FeedbackConflict.
    """
    if event.kind == "overlap":
        return fb.add_positive(event.subject, event.object)
    if event.kind in ("annotate", "highlight"):
        if focus is None or focus == event.subject:
            return fb
        return fb.add_positive(event.subject, focus)
    return fb.add_negative(event.subject, event.context)


def satisfaction(
    fb: FeedbackGraphs, assignment: Assignment, ids: Sequence[str]
) -> tuple[int, int]:
    """(satisfied, total): co-grouped positive pairs plus split negative pairs."""
    index = {doc_id: i for i, doc_id in enumerate(ids)}
    labels = assignment.labels
    satisfied = 0
    for a, b in fb.positive:
        satisfied += labels[_lookup(index, a)] == labels[_lookup(index, b)]
    for a, b in fb.negative:
        satisfied += labels[_lookup(index, a)] != labels[_lookup(index, b)]
    return int(satisfied), fb.total


def _lookup(index: dict[str, int], doc_id: str) -> int:
    try:
        return index[doc_id]
    except KeyError:
        raise FeedbackError(f"unknown document id in feedback: {doc_id!r}") from None


def is_fully_satisfied(fb: FeedbackGraphs, assignment: Assignment, ids: Sequence[str]) -> bool:
    satisfied, total = satisfaction(fb, assignment, ids)
    return satisfied == total


def index_pairs(fb: FeedbackGraphs, ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Compile pair sets to index arrays (sorted for determinism).

    Returns (positive, negative), each of shape (m, 2); used by training
    loops that check satisfaction per step.
    """
    index = {doc_id: i for i, doc_id in enumerate(ids)}
    pos = sorted((_lookup(index, a), _lookup(index, b)) for a, b in fb.positive)
    neg = sorted((_lookup(index, a), _lookup(index, b)) for a, b in fb.negative)
    return (
        np.array(pos, dtype=np.int64).reshape(-1, 2),
        np.array(neg, dtype=np.int64).reshape(-1, 2),
    )


def project_feedback(fb: FeedbackGraphs, members: Iterable[str]) -> tuple[FeedbackGraphs, int]:
    """Restrict feedback to pairs with both endpoints in the member set.

    Returns the projected graphs plus the count of dropped pairs that touch
    the member set (pairs entirely outside it are not counted).
    """
    member_set = set(members)
    kept_pos, kept_neg, dropped = set(), set(), 0
    for pair in fb.positive:
        inside = (pair[0] in member_set) + (pair[1] in member_set)
        if inside == 2:
            kept_pos.add(pair)
        elif inside == 1:
            dropped += 1
    for pair in fb.negative:
        inside = (pair[0] in member_set) + (pair[1] in member_set)
        if inside == 2:
            kept_neg.add(pair)
        elif inside == 1:
            dropped += 1
    return FeedbackGraphs(frozenset(kept_pos), frozenset(kept_neg)), dropped


@dataclass(frozen=True)
class Feasibility:
    status: str  # "feasible" | "infeasible" | "unknown"
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.status != "infeasible"


def feasibility_check(fb: FeedbackGraphs, k: int) -> Feasibility:
    """Can any k-way partition satisfy this feedback?

    Infeasible when a negative pair lies inside one positive component
    (co-grouping is transitive), or, for k=2, when the negative edges over
    contracted positive components are not 2-colorable. k=1 tolerates no
    negative pairs at all. Larger k is only ever "unknown" here.
    """
    if k < 1:
        raise FeedbackError(f"k must be >= 1, got {k}")
    if k == 1:
        if fb.negative:
            return Feasibility("infeasible", "negative feedback cannot be split into one group")
        return Feasibility("feasible")

    component = _positive_components(fb)
    for a, b in sorted(fb.negative):
        if component[a] == component[b]:
            return Feasibility(
                "infeasible",
                f"negative pair ({a}, {b}) lies inside positive component {sorted(component[a])}",
            )
    if k > 2:
        return Feasibility("unknown")

    # k=2: contract positive components, 2-color the negative-edge graph.
    adj: dict[frozenset, set[frozenset]] = {}
    for a, b in fb.negative:
        adj.setdefault(component[a], set()).add(component[b])
        adj.setdefault(component[b], set()).add(component[a])
    color: dict[frozenset, int] = {}
    for start in sorted(adj, key=sorted):
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in color:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return Feasibility(
                        "infeasible",
                        "negative feedback forms an odd cycle over positive components",
                    )
    return Feasibility("feasible")


def _positive_components(fb: FeedbackGraphs) -> dict[str, frozenset]:
    """Union the positive pairs; every feedback id maps to its component."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for doc_id in fb.document_ids():
        parent[doc_id] = doc_id
    for a, b in fb.positive:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    members: dict[str, set[str]] = {}
    for doc_id in parent:
        members.setdefault(find(doc_id), set()).add(doc_id)
    return {doc_id: frozenset(members[find(doc_id)]) for doc_id in parent}


def serialize_feedback(fb: FeedbackGraphs) -> str:
    """Canonical JSON for the pair sets (stable ordering, fixed separators)."""
    return json.dumps(
        {
            "v": 1,
            "positive": [list(p) for p in sorted(fb.positive)],
            "negative": [list(p) for p in sorted(fb.negative)],
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def append_event_log(path: str | Path, event: InteractionEvent, focus: str | None) -> None:
    """Append one applied interaction, with the focus in effect, to a jsonl log."""
    record = {"v": 1, "type": "event", "focus": focus, **event.to_dict()}
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def append_focus_log(path: str | Path, doc_id: str | None) -> None:
    record = {"v": 1, "type": "focus", "doc": doc_id}
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def replay_log(path: str | Path) -> tuple[FeedbackGraphs, str | None]:
    """Rebuild (FeedbackGraphs, focus) by replaying an event log from offset 0."""
    fb = FeedbackGraphs()
    focus: str | None = None
    path = Path(path)
    if not path.exists():
        return fb, focus
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("type") == "focus":
                focus = record.get("doc")
            else:
                event = InteractionEvent.from_dict(record)
                fb = apply_interaction(fb, event, record.get("focus"))
    return fb, focus
