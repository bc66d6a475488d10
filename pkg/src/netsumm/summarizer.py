"""Hierarchical summaries: recursive bisection with per-branch training.

Level d holds up to 2^d groups; each deeper level refines the previous one
by splitting every group with at least two members into two. Feedback
passed into a branch is restricted to pairs fully inside it; pairs whose
endpoints diverge at a split are dropped there and counted against that
split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .feedback import FeedbackGraphs, project_feedback, satisfaction
from .netgraph import Assignment, DocumentGraph, SummaryGraph, build_summary, f_prob, induced_subgraph
from .qlearn import EpisodeStats, Hyperparameters, InfeasibleFeedback, train


class SummarizerError(ValueError):
    """Invalid target size or root-level infeasibility."""


@dataclass(frozen=True)
class HierarchyLevel:
    depth: int
    assignment: Assignment
    summary: SummaryGraph
    satisfied: int
    total: int
    quality: float  # partition objective at this level

    @property
    def ratio(self) -> float:
        return self.satisfied / self.total if self.total else 1.0


@dataclass(frozen=True)
class Hierarchy:
    levels: tuple[HierarchyLevel, ...]
    dropped_feedback: dict[str, int]  # split key "depth:group" -> dropped pairs
    seed: int
    ids: tuple[str, ...]
    notes: tuple[str, ...] = ()
    models: dict[str, "object"] = field(default_factory=dict)  # branch key -> QModel

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, d: int) -> HierarchyLevel:
        if not 0 <= d < len(self.levels):
            raise SummarizerError(f"unknown level {d}; hierarchy has levels 0..{self.depth}")
        return self.levels[d]


def hierarchical_summarize(
    graph: DocumentGraph,
    fb: FeedbackGraphs,
    K: int,
    hyper: Hyperparameters | None = None,
    seed: int = 0,
    on_progress: Callable[[str, EpisodeStats], None] | None = None,
) -> Hierarchy:
    """Bisect down to K groups (K a power of two), training each split.

    Branch seeds derive from (seed, depth, parent group) so results do not
    depend on the order branches happen to run in.
    """
    depth_target = _depth_for(K)
    if K > graph.n:
        raise SummarizerError(f"target size {K} exceeds node count {graph.n}")
    hyper = hyper or Hyperparameters()

    n = graph.n
    labels = np.ones(n, dtype=np.int64)
    assignment = Assignment(labels, 1)
    levels = [_make_level(graph, fb, assignment, 0)]
    group_fb: dict[int, FeedbackGraphs] = {1: fb}
    dropped: dict[str, int] = {}
    notes: list[str] = []
    models: dict[str, object] = {}

    for d in range(1, depth_target + 1):
        k_d = 2**d
        new_labels = np.zeros(n, dtype=np.int64)
        new_group_fb: dict[int, FeedbackGraphs] = {}
        for g, members in sorted(levels[-1].assignment.groups().items()):
            left, right = 2 * g - 1, 2 * g
            branch_fb = group_fb.get(g, FeedbackGraphs())
            if members.size < 2:
                new_labels[members] = left
                new_group_fb[left] = branch_fb
                continue
            sub, remap = induced_subgraph(graph, members)
            key = f"{d}:{g}"
            branch_seed = _branch_seed(seed, d, g)
            try:
                result = train(
                    sub,
                    branch_fb,
                    2,
                    hyper,
                    branch_seed,
                    on_episode=(
                        None
                        if on_progress is None
                        else lambda st, _key=key: on_progress(_key, st)
                    ),
                )
            except InfeasibleFeedback:
                if d == 1:
                    raise
                # a branch inherited contradictory pairs (possible when the
                # parent level could not satisfy everything); pass it through
                new_labels[members] = left
                new_group_fb[left] = branch_fb
                notes.append(f"{key}: infeasible branch feedback, group passed through")
                continue
            models[key] = result.model
            sub_labels = result.assignment.labels
            left_ids = [graph.ids[remap[i]] for i in range(len(remap)) if sub_labels[i] == 1]
            right_ids = [graph.ids[remap[i]] for i in range(len(remap)) if sub_labels[i] == 2]
            for i, orig in enumerate(remap):
                new_labels[orig] = left if sub_labels[i] == 1 else right
            fb_left, cut = project_feedback(branch_fb, left_ids)
            fb_right, _ = project_feedback(branch_fb, right_ids)
            if cut:
                dropped[key] = cut
            new_group_fb[left] = fb_left
            new_group_fb[right] = fb_right
        assignment = Assignment(new_labels, k_d)
        levels.append(_make_level(graph, fb, assignment, d))
        group_fb = new_group_fb

    return Hierarchy(tuple(levels), dropped, seed, graph.ids, tuple(notes), models)


def _depth_for(K: int) -> int:
    d = (K).bit_length() - 1
    if K < 2 or 2**d != K:
        raise SummarizerError(f"target size must be a power of two >= 2, got {K}")
    return d


def _branch_seed(seed: int, depth: int, group: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(depth, group))
    return int(ss.generate_state(1)[0])


def _make_level(
    graph: DocumentGraph, fb: FeedbackGraphs, assignment: Assignment, depth: int
) -> HierarchyLevel:
    satisfied, total = satisfaction(fb, assignment, graph.ids)
    return HierarchyLevel(
        depth=depth,
        assignment=assignment,
        summary=build_summary(graph, assignment, level=depth),
        satisfied=satisfied,
        total=total,
        quality=f_prob(graph, assignment),
    )


def select_best_level(hierarchy: Hierarchy, fb: FeedbackGraphs | None = None) -> int:
    """Deepest level with the maximal satisfied-feedback ratio.

    Pass fb to re-evaluate against feedback gathered after training;
    otherwise the ratios recorded at build time are used.
    """
    if fb is None:
        ratios = [lvl.ratio for lvl in hierarchy.levels]
    else:
        ratios = []
        for lvl in hierarchy.levels:
            s, t = satisfaction(fb, lvl.assignment, hierarchy.ids)
            ratios.append(s / t if t else 1.0)
    best = max(ratios)
    return max(i for i, r in enumerate(ratios) if r == best)


def hierarchy_to_dict(hierarchy: Hierarchy) -> dict:
    levels = []
    for lvl in hierarchy.levels:
        levels.append(
            {
                "labels": hierarchy_labels(lvl),
                "supernodes": [sorted(s) for s in lvl.summary.supernodes],
                "superedges": [[float(x) for x in row] for row in lvl.summary.superedges],
                "satisfaction": {
                    "satisfied": lvl.satisfied,
                    "total": lvl.total,
                    "ratio": lvl.ratio,
                },
                "f_prob": lvl.quality,
            }
        )
    return {
        "levels": levels,
        "dropped_feedback": dict(sorted(hierarchy.dropped_feedback.items())),
        "seed": hierarchy.seed,
    }


def hierarchy_labels(level: HierarchyLevel) -> list[int]:
    return [int(x) for x in level.assignment.labels]


def write_hierarchy(hierarchy: Hierarchy, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(hierarchy_to_dict(hierarchy), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def hierarchy_from_dict(obj: dict, ids: tuple[str, ...], graph: DocumentGraph) -> Hierarchy:
    """Rebuild a Hierarchy from its export, recomputing summaries from the graph."""
    levels = []
    for d, lvl in enumerate(obj["levels"]):
        labels = np.array(lvl["labels"], dtype=np.int64)
        assignment = Assignment(labels, max(1, 2**d))
        levels.append(
            HierarchyLevel(
                depth=d,
                assignment=assignment,
                summary=build_summary(graph, assignment, level=d),
                satisfied=lvl["satisfaction"]["satisfied"],
                total=lvl["satisfaction"]["total"],
                quality=lvl["f_prob"],
            )
        )
    return Hierarchy(tuple(levels), dict(obj.get("dropped_feedback", {})), obj["seed"], ids)
