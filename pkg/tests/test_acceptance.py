"""Acceptance suite: one test per release criterion, at fixed tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. The synthetic-protocol criteria share a module-scoped batch of
training runs; everything else builds its own instances.
"""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from netsumm.cli import main as cli_main
from netsumm.evaluation import (
    SyntheticParams,
    brute_force_oracle,
    generate_synthetic_corpus,
    purity_rho,
    sample_feasible_feedback,
    spectral_baseline,
)
from netsumm.feedback import FeedbackGraphs, FeedbackConflict, is_fully_satisfied, serialize_feedback
from netsumm.layout import ForceConfig, two_step_layout
from netsumm.netgraph import Assignment, DocumentGraph, build_document_graph, build_summary, f_prob, merge_supernode
from netsumm.qlearn import Hyperparameters, encode_state, init_model, loss_and_grads, train
from netsumm.service import create_app
from netsumm.summarizer import hierarchical_summarize

from oracles import (
    all_labelings,
    brute_merge_weights,
    brute_superedges,
    finite_difference_grads,
    matrix_feedback_equality,
    random_graph,
)

SEEDS = tuple(range(10))
PROTOCOL = {"n_relevant": 10, "n_irrelevant": 20, "n_topics": 2, "p_pos": 0.10, "p_neg": 0.01}


def _report(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: PASS{suffix}")


def _make_instance(seed: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    corpus, truth = generate_synthetic_corpus(
        PROTOCOL["n_relevant"], PROTOCOL["n_irrelevant"], PROTOCOL["n_topics"],
        SyntheticParams(), rng,
    )
    graph = build_document_graph(corpus)
    fb = sample_feasible_feedback(truth, corpus.ids, PROTOCOL["p_pos"], PROTOCOL["p_neg"], seed)
    return corpus, truth, graph, fb


@pytest.fixture(scope="module")
def protocol_runs():
    """Per-seed protocol results shared by the satisfaction and purity criteria."""
    runs = []
    for seed in SEEDS:
        corpus, truth, graph, fb = _make_instance(seed)
        start = time.perf_counter()
        levels = {}
        for K in (2, 4):
            hierarchy = hierarchical_summarize(graph, fb, K, Hyperparameters(), seed)
            levels[K] = hierarchy.levels[-1]
        elapsed = time.perf_counter() - start
        runs.append(
            {
                "seed": seed,
                "corpus": corpus,
                "truth": truth,
                "graph": graph,
                "fb": fb,
                "levels": levels,
                "elapsed": elapsed,
            }
        )
    return runs


def test_feedback_satisfaction(protocol_runs):
    """Satisfied ratio 1.0 at K in {2, 4} on >= 9/10 seeds, < 60 s per seed."""
    satisfied_seeds = 0
    for run in protocol_runs:
        assert run["elapsed"] < 60.0, f"seed {run['seed']} took {run['elapsed']:.1f}s"
        if all(lvl.ratio == 1.0 for lvl in run["levels"].values()):
            satisfied_seeds += 1
    assert satisfied_seeds >= 9, f"only {satisfied_seeds}/10 seeds fully satisfied"
    max_elapsed = max(run["elapsed"] for run in protocol_runs)
    _report("feedback-satisfaction", f"{satisfied_seeds}/10 seeds, slowest {max_elapsed:.1f}s")


def test_rho_ordering(protocol_runs):
    """Mean purity: learner above spectral and random on >= 8/10 seeds."""
    wins = 0
    for run in protocol_runs:
        corpus, truth, graph = run["corpus"], run["truth"], run["graph"]
        net = np.mean(
            [purity_rho(lvl.assignment, truth, corpus.ids) for lvl in run["levels"].values()]
        )
        spectral = np.mean(
            [
                purity_rho(spectral_baseline(graph, K, run["seed"]), truth, corpus.ids)
                for K in (2, 4)
            ]
        )
        rand_rhos = []
        for K in (2, 4):
            rng = np.random.default_rng(np.random.SeedSequence(run["seed"], spawn_key=(97, K)))
            assignment = Assignment(rng.integers(1, K + 1, size=graph.n, dtype=np.int64), K)
            rand_rhos.append(purity_rho(assignment, truth, corpus.ids))
        if net > spectral and net > float(np.mean(rand_rhos)):
            wins += 1
    assert wins >= 8, f"purity ordering held on only {wins}/10 seeds"
    _report("rho-ordering", f"{wins}/10 seeds")


def _feasible_random_feedback(ids, rng):
    """Random feedback consistent with a hidden bipartition (always feasible)."""
    n = len(ids)
    side = rng.integers(0, 2, n)
    while len(set(side.tolist())) < 2:
        side = rng.integers(0, 2, n)
    fb = FeedbackGraphs()
    for _ in range(int(rng.integers(2, 5))):
        s = int(rng.integers(0, 2))
        group = [i for i in range(n) if side[i] == s]
        if len(group) >= 2:
            i, j = rng.choice(group, size=2, replace=False)
            try:
                fb = fb.add_positive(ids[min(i, j)], ids[max(i, j)])
            except FeedbackConflict:
                pass
    a_side = [i for i in range(n) if side[i] == 0]
    b_side = [i for i in range(n) if side[i] == 1]
    for _ in range(int(rng.integers(1, 3))):
        i, j = int(rng.choice(a_side)), int(rng.choice(b_side))
        try:
            fb = fb.add_negative(ids[min(i, j)], ids[max(i, j)])
        except FeedbackConflict:
            pass
    return fb


def test_oracle_equivalence():
    """Training reaches >= 0.95x the constrained optimum on >= 18/20 instances."""
    ok = 0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        n = int(rng.integers(6, 11))
        ids = tuple(f"n{i}" for i in range(n))
        graph = DocumentGraph(random_graph(n, rng), ids)
        fb = _feasible_random_feedback(ids, rng)
        oracle = brute_force_oracle(graph, fb, 2)
        assert oracle.fully_satisfied
        result = train(graph, fb, 2, Hyperparameters(), seed=trial)
        if result.satisfied:  # oracle dominance: exhaustive search is an upper bound
            assert result.best_f_prob <= oracle.f_prob + 1e-9
        if result.satisfied and result.best_f_prob >= 0.95 * oracle.f_prob:
            ok += 1
    assert ok >= 18, f"only {ok}/20 instances reached 0.95x of the optimum"
    _report("oracle-equivalence", f"{ok}/20 instances")


def test_feedback_matrix_equivalence():
    """Per-pair satisfaction and the indicator-matrix equality never disagree
    on any assignment of any instance with <= 6 nodes."""
    rng = np.random.default_rng(2718)
    checked = 0
    for n in (2, 3, 4, 5, 6):
        ids = tuple(f"n{i}" for i in range(n))
        for _ in range(5):
            fb = FeedbackGraphs()
            pos, neg = [], []
            for _ in range(int(rng.integers(1, 4))):
                i, j = map(int, rng.choice(n, size=2, replace=False))
                pair = (min(i, j), max(i, j))
                try:
                    fb = fb.add_positive(ids[pair[0]], ids[pair[1]])
                    if pair not in pos:
                        pos.append(pair)
                except FeedbackConflict:
                    pass
            for _ in range(int(rng.integers(0, 3))):
                i, j = map(int, rng.choice(n, size=2, replace=False))
                pair = (min(i, j), max(i, j))
                try:
                    fb = fb.add_negative(ids[pair[0]], ids[pair[1]])
                    if pair not in neg:
                        neg.append(pair)
                except FeedbackConflict:
                    pass
            for k in (2, 3):
                for labels in all_labelings(n, k):
                    assignment = Assignment(labels, k)
                    assert is_fully_satisfied(fb, assignment, ids) == matrix_feedback_equality(
                        labels, k, pos, neg
                    )
                    checked += 1
    _report("feedback-matrix-equivalence", f"{checked} assignments, 0 discrepancies")


def test_f_prob_invariants():
    """Trivial partition exactly 1.0; bounds on 1000 samples; bitwise label
    permutation invariance."""
    rng = np.random.default_rng(31415)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        graph = DocumentGraph(random_graph(n, rng), tuple(f"n{i}" for i in range(n)))
        assert f_prob(graph, Assignment(np.ones(n, dtype=np.int64), 1)) == 1.0

    for _ in range(1000):
        n = int(rng.integers(2, 12))
        k = int(rng.integers(1, 6))
        graph = DocumentGraph(random_graph(n, rng), tuple(f"n{i}" for i in range(n)))
        labels = rng.integers(1, k + 1, size=n)
        value = f_prob(graph, Assignment(labels, k))
        assert 0.0 <= value <= k

    for _ in range(200):
        n = int(rng.integers(2, 10))
        k = int(rng.integers(2, 5))
        graph = DocumentGraph(random_graph(n, rng), tuple(f"n{i}" for i in range(n)))
        labels = rng.integers(1, k + 1, size=n)
        perm = rng.permutation(np.arange(1, k + 1))
        permuted = np.array([perm[l - 1] for l in labels])
        assert f_prob(graph, Assignment(labels, k)) == f_prob(graph, Assignment(permuted, k))
    _report("f-prob-invariants", "trivial exact, 1000 bounded, 200 bitwise-permuted")


def test_gradient_check():
    """Backprop vs central finite differences (h=1e-5): max rel err < 1e-4."""
    worst = 0.0
    for trial in range(5):
        rng = np.random.default_rng(4000 + trial)
        n = int(rng.integers(2, 5))
        k = int(rng.integers(2, 4))
        model = init_model(n, k, Hyperparameters(hidden=int(rng.integers(3, 9))), seed=trial)
        batch = int(rng.integers(3, 7))
        states = np.zeros((batch, n * k))
        action_flat = np.zeros(batch, dtype=np.int64)
        for b in range(batch):
            labels = rng.integers(1, k + 1, size=n)
            states[b] = encode_state(Assignment(labels, k))
            node = int(rng.integers(0, n))
            new_label = int(rng.choice([l for l in range(1, k + 1) if l != labels[node]]))
            action_flat[b] = node * k + (new_label - 1)
        targets = rng.uniform(-1.0, 1.0, size=batch)
        _, grads = loss_and_grads(model, states, action_flat, targets)
        fd = finite_difference_grads(
            lambda: loss_and_grads(model, states, action_flat, targets)[0],
            {"W1": model.W1, "b1": model.b1, "W2": model.W2, "b2": model.b2},
        )
        for name in grads:
            denom = np.maximum(np.maximum(np.abs(grads[name]), np.abs(fd[name])), 1e-8)
            worst = max(worst, float((np.abs(grads[name] - fd[name]) / denom).max()))
    assert worst < 1e-4, f"max relative gradient error {worst:.2e}"
    _report("gradient-check", f"max rel err {worst:.2e}")


@pytest.mark.parametrize("subcommand", ["train", "simulate"])
def test_cli_determinism(tmp_path, subcommand):
    """Seeded re-runs produce byte-identical hierarchy and report JSON."""
    if subcommand == "train":
        corpus, _, _, _ = _make_instance(0)
        from netsumm.corpus import write_jsonl

        corpus_path = tmp_path / "corpus.jsonl"
        write_jsonl(corpus, corpus_path)
        args = ["train", "--corpus", str(corpus_path), "--k", "2", "--seed", "5"]
        artifacts = ["hierarchy.json", "feedback.json"]
    else:
        args = ["simulate", "--seed", "5", "--k-values", "2,4"]
        artifacts = ["report.json", "corpus.jsonl", "feedback.json"]
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert cli_main(args + ["--out", str(out1)]) == 0
    assert cli_main(args + ["--out", str(out2)]) == 0
    for name in artifacts:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    _report(f"determinism-{subcommand}", ", ".join(artifacts))


def test_merge_and_summary_correctness():
    """Single-merge weights and pairwise-mean super-edges match brute force
    within 1e-12 on 50 random graphs."""
    rng = np.random.default_rng(6174)
    for _ in range(50):
        n = int(rng.integers(3, 10))
        w = random_graph(n, rng)
        graph = DocumentGraph(w, tuple(f"n{i}" for i in range(n)))

        size = int(rng.integers(1, n))
        members = sorted(map(int, rng.choice(n, size=size, replace=False)))
        merged, new_idx = merge_supernode(graph, members)
        expected = brute_merge_weights(w, members)
        outside = [i for i in range(n) if i not in members]
        for pos, orig in enumerate(outside):
            assert abs(merged.weights[new_idx, pos] - expected[orig]) <= 1e-12

        k = int(rng.integers(2, 5))
        labels = rng.integers(1, k + 1, size=n)
        summary = build_summary(graph, Assignment(labels, k))
        expected_edges = brute_superedges(w, labels)
        assert np.all(np.abs(summary.superedges - expected_edges) <= 1e-12)
    _report("merge-summary-correctness", "50 graphs within 1e-12")


def test_layout_properties():
    """Determinism, strict non-overlap, and combine-rule containment on 20
    random hierarchies."""
    rng = np.random.default_rng(9999)
    for trial in range(20):
        n = int(rng.integers(4, 14))
        k = int(rng.integers(1, 5))
        graph = DocumentGraph(random_graph(n, rng), tuple(f"n{i}" for i in range(n)))
        labels = rng.integers(1, k + 1, size=n)
        assignment = Assignment(labels, k)
        summary = build_summary(graph, assignment)
        config = ForceConfig(seed=trial)
        first = two_step_layout(graph, assignment, summary, config)
        second = two_step_layout(graph, assignment, summary, config)
        assert first.positions == second.positions  # bitwise determinism
        assert first.min_distance() > 0.0

        occupied = len(first.supernode_positions)
        bound = np.sqrt(2.0) / occupied + 1e-9
        anchor = {
            lbl: first.supernode_positions[gi]
            for gi, lbl in enumerate(sorted(set(labels.tolist())))
        }
        for i, doc_id in enumerate(graph.ids):
            ax, ay = anchor[int(labels[i])]
            x, y = first.positions[doc_id]
            assert np.hypot(x - ax, y - ay) <= bound
    _report("layout-properties", "20 hierarchies: deterministic, non-overlapping, contained")


def test_persistence_round_trip(tmp_path):
    """Service restart reproduces byte-identical feedback serialization and
    satisfaction snapshot."""
    root = tmp_path / "sessions"
    docs = [{"id": f"d{i}", "text": f"alpha beta w{i % 4} extra{i % 3}"} for i in range(8)]
    with TestClient(create_app(root)) as client:
        sid = client.post("/sessions", json={"documents": docs, "seed": 1}).json()["session_id"]
        client.post(f"/sessions/{sid}/focus", json={"doc": "d0"})
        client.post(f"/sessions/{sid}/events", json={"kind": "highlight", "subject": "d3"})
        client.post(
            f"/sessions/{sid}/events",
            json={"kind": "overlap", "subject": "d1", "object": "d6", "timestamp": 4.0},
        )
        client.post(
            f"/sessions/{sid}/events",
            json={"kind": "minimize", "subject": "d5", "context": "d0", "timestamp": 5.0},
        )
        state = client.app.state.store.get(sid)
        feedback_before = serialize_feedback(state.fb)
        snapshot_before = json.dumps(
            client.get(f"/sessions/{sid}").json()["satisfaction"], sort_keys=True
        )

    with TestClient(create_app(root)) as client:
        state = client.app.state.store.get(sid)
        feedback_after = serialize_feedback(state.fb)
        snapshot_after = json.dumps(
            client.get(f"/sessions/{sid}").json()["satisfaction"], sort_keys=True
        )
    assert feedback_after == feedback_before
    assert snapshot_after == snapshot_before
    _report("persistence-round-trip", "feedback bytes and snapshot identical")
