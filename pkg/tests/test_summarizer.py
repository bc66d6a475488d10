import json

import numpy as np
import pytest

from netsumm.feedback import FeedbackGraphs
from netsumm.netgraph import Assignment, build_summary
from netsumm.qlearn import Hyperparameters, InfeasibleFeedback, train
from netsumm.summarizer import (
    Hierarchy,
    HierarchyLevel,
    SummarizerError,
    _branch_seed,
    hierarchical_summarize,
    hierarchy_from_dict,
    hierarchy_to_dict,
    select_best_level,
    write_hierarchy,
)

from conftest import make_graph
from oracles import planted_graph, random_graph

FAST = Hyperparameters(episodes=60)


def two_cluster_graph(size=4, w_in=0.9, w_out=0.1):
    return make_graph(planted_graph([size, size], w_in, w_out))


def test_k_must_be_power_of_two():
    g = two_cluster_graph()
    for bad in (0, 1, 3, 6):
        with pytest.raises(SummarizerError, match="power of two"):
            hierarchical_summarize(g, FeedbackGraphs(), bad, FAST, seed=0)


def test_k_exceeding_n():
    g = make_graph(random_graph(4, np.random.default_rng(0)))
    with pytest.raises(SummarizerError, match="exceeds"):
        hierarchical_summarize(g, FeedbackGraphs(), 8, FAST, seed=0)


def test_root_infeasibility_propagates():
    g = two_cluster_graph()
    fb = (
        FeedbackGraphs()
        .add_positive("n0", "n1")
        .add_positive("n1", "n2")
        .add_negative("n0", "n2")
    )
    with pytest.raises(InfeasibleFeedback):
        hierarchical_summarize(g, fb, 2, FAST, seed=0)


def test_k2_matches_direct_train():
    g = two_cluster_graph()
    h = hierarchical_summarize(g, FeedbackGraphs(), 2, FAST, seed=5)
    assert h.depth == 1
    assert h.levels[0].assignment.k == 1
    direct = train(g, FeedbackGraphs(), 2, FAST, seed=_branch_seed(5, 1, 1))
    assert np.array_equal(h.levels[1].assignment.labels, direct.assignment.labels)


def test_levels_refine():
    g = make_graph(planted_graph([2, 2, 2, 2], 0.9, 0.05))
    h = hierarchical_summarize(g, FeedbackGraphs(), 4, FAST, seed=3)
    assert h.depth == 2
    for shallow, deep in zip(h.levels, h.levels[1:]):
        parents = {}
        for i in range(g.n):
            child = int(deep.assignment.labels[i])
            parent = int(shallow.assignment.labels[i])
            parents.setdefault(child, set()).add(parent)
        assert all(len(p) == 1 for p in parents.values())


def test_group_count_monotone():
    g = make_graph(random_graph(10, np.random.default_rng(9)))
    h = hierarchical_summarize(g, FeedbackGraphs(), 4, FAST, seed=1)
    counts = [len(np.unique(lvl.assignment.labels)) for lvl in h.levels]
    assert counts == sorted(counts)
    assert counts[0] == 1


def test_negative_pair_dropped_once_at_the_split():
    g = two_cluster_graph()
    fb = FeedbackGraphs().add_negative("n0", "n4").add_positive("n0", "n1")
    h = hierarchical_summarize(g, fb, 4, Hyperparameters(episodes=120), seed=2)
    level1 = h.levels[1]
    if level1.satisfied == level1.total:  # negative pair split at the root
        total_dropped = sum(h.dropped_feedback.values())
        assert h.dropped_feedback.get("1:1", 0) >= 1
        # conservation: pairs split so far == cumulative dropped, per level
        for d, lvl in enumerate(h.levels):
            labels = lvl.assignment.labels
            ids = list(h.ids)
            crossing = 0
            for a, b in list(fb.positive) + list(fb.negative):
                ia, ib = ids.index(a), ids.index(b)
                if labels[ia] != labels[ib]:
                    crossing += 1
            dropped_upto = sum(
                v for key, v in h.dropped_feedback.items() if int(key.split(":")[0]) <= d
            )
            assert crossing == dropped_upto


def test_satisfaction_recorded_per_level():
    g = two_cluster_graph()
    fb = FeedbackGraphs().add_positive("n0", "n1").add_negative("n0", "n5")
    h = hierarchical_summarize(g, fb, 2, Hyperparameters(episodes=120), seed=4)
    lvl0 = h.levels[0]
    assert (lvl0.satisfied, lvl0.total) == (1, 2)  # positive holds, negative co-grouped
    assert h.levels[1].total == 2


def _tiny_levels(ratios):
    g = make_graph(np.array([[0.0, 0.5], [0.5, 0.0]]))
    levels = []
    for d, ratio in enumerate(ratios):
        a = Assignment(np.array([1, 1]), 1) if d == 0 else Assignment(np.array([1, 2]), 2)
        satisfied, total = (int(ratio * 10), 10)
        levels.append(
            HierarchyLevel(d, a, build_summary(g, a, level=d), satisfied, total, 1.0)
        )
    return Hierarchy(tuple(levels), {}, 0, g.ids)


def test_select_best_level_tie_goes_deeper():
    assert select_best_level(_tiny_levels([1.0, 1.0])) == 1


def test_select_best_level_example():
    assert select_best_level(_tiny_levels([1.0, 1.0, 0.8])) == 1


def test_select_best_level_empty_feedback_vacuous():
    g = two_cluster_graph()
    h = hierarchical_summarize(g, FeedbackGraphs(), 4, FAST, seed=8)
    assert select_best_level(h) == h.depth  # all ratios vacuously 1.0


def test_hierarchy_export_round_trip(tmp_path):
    g = two_cluster_graph()
    fb = FeedbackGraphs().add_positive("n0", "n2")
    h = hierarchical_summarize(g, fb, 2, FAST, seed=6)
    path = tmp_path / "hierarchy.json"
    write_hierarchy(h, path)
    write_hierarchy(h, tmp_path / "again.json")
    assert path.read_bytes() == (tmp_path / "again.json").read_bytes()

    obj = json.loads(path.read_text())
    assert set(obj) == {"levels", "dropped_feedback", "seed"}
    rebuilt = hierarchy_from_dict(obj, g.ids, g)
    assert rebuilt.depth == h.depth
    for a, b in zip(rebuilt.levels, h.levels):
        assert np.array_equal(a.assignment.labels, b.assignment.labels)
        assert a.ratio == b.ratio


def test_singleton_group_passes_through():
    # feedback forces level 1 into {n0} vs {n1, n2, n3}; at level 2 the
    # singleton passes through and the glued triple cannot split
    g = make_graph(random_graph(4, np.random.default_rng(12)))
    fb = (
        FeedbackGraphs()
        .add_positive("n1", "n2")
        .add_positive("n1", "n3")
        .add_negative("n0", "n1")
    )
    h = hierarchical_summarize(g, fb, 4, Hyperparameters(episodes=150), seed=11)
    lvl1, lvl2 = h.levels[1], h.levels[2]
    assert lvl1.satisfied == lvl1.total  # the forced split was found
    labels1, labels2 = lvl1.assignment.labels, lvl2.assignment.labels
    assert labels1[1] == labels1[2] == labels1[3] != labels1[0]
    assert labels2[1] == labels2[2] == labels2[3] != labels2[0]
    # still exactly two occupied groups, the singleton intact
    assert len(np.unique(labels2)) == 2


def test_branch_seeds_are_path_deterministic():
    assert _branch_seed(3, 1, 1) == _branch_seed(3, 1, 1)
    assert _branch_seed(3, 1, 1) != _branch_seed(3, 2, 1)
    assert _branch_seed(3, 2, 1) != _branch_seed(3, 2, 2)
    assert _branch_seed(3, 1, 1) != _branch_seed(4, 1, 1)
