"""Metrics and the experiment harness.

Purity scores how concentrated the ground-truth-relevant documents are in
the groups that contain any. The harness mirrors the simulated-analyst
protocol: sample feedback pairs from the ground truth, summarize, and
report purity / satisfied-feedback ratios per method and summary size.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, Document, build_corpus
from .feedback import FeedbackGraphs, feasibility_check, satisfaction
from .netgraph import Assignment, DocumentGraph, build_document_graph, f_prob
from .qlearn import Hyperparameters
from .summarizer import hierarchical_summarize

METHODS = ("netreact", "spectral", "random")


class EvaluationError(ValueError):
    """Bad metric input or an instance too large for exhaustive search."""


class EigensolverError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


@dataclass(frozen=True)
class GroundTruth:
    relevant: frozenset[str]

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "GroundTruth":
        return cls(frozenset(d.id for d in corpus.documents if d.relevant))


def purity_rho(assignment: Assignment, truth: GroundTruth, ids: Sequence[str]) -> float:
    """Mean relevant fraction over groups containing at least one relevant doc."""
    if not truth.relevant:
        raise EvaluationError("purity is undefined without relevant documents")
    unknown = truth.relevant - set(ids)
    if unknown:
        raise EvaluationError(f"relevant ids missing from the corpus: {sorted(unknown)}")
    relevant_idx = {i for i, doc_id in enumerate(ids) if doc_id in truth.relevant}
    fractions = []
    for members in assignment.groups().values():
        hits = sum(1 for i in members if int(i) in relevant_idx)
        if hits:
            fractions.append(hits / members.size)
    return float(np.mean(fractions))


def sample_feedback(
    truth: GroundTruth,
    ids: Sequence[str],
    p_pos: float,
    p_neg: float,
    rng: np.random.Generator,
) -> FeedbackGraphs:
    """Simulated analyst feedback from the ground truth.

    Positive pairs are sampled among relevant documents, negative pairs
    among (relevant, irrelevant) mixed pairs; both without replacement at
    ceil(p * pool size).
    """
    relevant = sorted(truth.relevant)
    irrelevant = sorted(set(ids) - truth.relevant)
    if len(relevant) < 2:
        raise EvaluationError("need at least two relevant documents to sample feedback")
    if not (0.0 <= p_pos <= 1.0 and 0.0 <= p_neg <= 1.0):
        raise EvaluationError("feedback percentages must lie in [0, 1]")

    pos_pool = list(combinations(relevant, 2))
    neg_pool = [(r, i) for r in relevant for i in irrelevant]
    n_pos = min(len(pos_pool), math.ceil(p_pos * len(pos_pool)))
    n_neg = min(len(neg_pool), math.ceil(p_neg * len(neg_pool)))
    fb = FeedbackGraphs()
    for idx in rng.choice(len(pos_pool), size=n_pos, replace=False) if n_pos else []:
        fb = fb.add_positive(*pos_pool[int(idx)])
    for idx in rng.choice(len(neg_pool), size=n_neg, replace=False) if n_neg else []:
        fb = fb.add_negative(*neg_pool[int(idx)])
    return fb


def sample_feasible_feedback(
    truth: GroundTruth,
    ids: Sequence[str],
    p_pos: float,
    p_neg: float,
    seed: int,
    k: int = 2,
    attempts: int = 32,
) -> FeedbackGraphs:
    """Resample with derived seeds until the feedback passes the k-way check."""
    for attempt in range(attempts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(attempt,)))
        fb = sample_feedback(truth, ids, p_pos, p_neg, rng)
        if feasibility_check(fb, k):
            return fb
    raise EvaluationError(f"no feasible feedback sample found in {attempts} attempts")


@dataclass(frozen=True)
class OracleResult:
    assignment: Assignment
    f_prob: float
    fully_satisfied: bool


def brute_force_oracle(graph: DocumentGraph, fb: FeedbackGraphs, k: int) -> OracleResult:
    """Exhaustively search partitions into at most k groups.

    Enumeration is over canonical label vectors (first occurrences in
    increasing order) so label permutations are visited once. Among fully
    satisfying assignments the best objective wins; if none satisfies, the
    result maximizes (satisfied count, objective) and is flagged.
    """
    n = graph.n
    count = _partition_count(n, k)
    if count > 1_000_000:
        raise EvaluationError(f"instance too large for exhaustive search: {count} partitions")

    best_sat: tuple[float, Assignment] | None = None
    best_any: tuple[int, float, Assignment] | None = None
    for labels in _canonical_labelings(n, k):
        assignment = Assignment(np.array(labels, dtype=np.int64), k)
        satisfied, total = satisfaction(fb, assignment, graph.ids)
        quality = f_prob(graph, assignment)
        if satisfied == total and (best_sat is None or quality > best_sat[0]):
            best_sat = (quality, assignment)
        if best_any is None or (satisfied, quality) > best_any[:2]:
            best_any = (satisfied, quality, assignment)
    if best_sat is not None:
        return OracleResult(best_sat[1], best_sat[0], True)
    return OracleResult(best_any[2], best_any[1], False)


def _partition_count(n: int, k: int) -> int:
    # Stirling numbers of the second kind, summed over 1..k blocks
    table = [[0] * (k + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, k + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return sum(table[n][1 : k + 1])


def _canonical_labelings(n: int, k: int):
    labels = [1] * n

    def rec(i: int, used: int):
        if i == n:
            yield list(labels)
            return
        for l in range(1, min(used + 1, k) + 1):
            labels[i] = l
            yield from rec(i + 1, max(used, l))

    yield from rec(1, 1)


def spectral_baseline(
    graph: DocumentGraph, k: int, seed: int = 0, max_iter: int = 10_000, tol: float = 1e-10
) -> Assignment:
    """Feedback-blind reference: normalized-Laplacian embedding into the k
    smallest eigenvectors (power iteration with deflation), then Lloyd
    clustering."""
    n = graph.n
    if k > n:
        raise EvaluationError(f"k={k} exceeds node count {n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    degrees = graph.degrees
    inv_sqrt = np.where(degrees > 0, 1.0 / np.sqrt(np.maximum(degrees, 1e-300)), 0.0)
    sym = inv_sqrt[:, None] * graph.weights * inv_sqrt[None, :]
    laplacian = np.eye(n) - sym

    embedding = _smallest_eigenvectors(laplacian, k, rng, max_iter, tol)
    labels = _lloyd(embedding, k, rng)
    return Assignment(labels + 1, k)


def _smallest_eigenvectors(
    laplacian: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> np.ndarray:
    """Blocked power iteration on 2I - L (eigenvalues of L lie in [0, 2]).

    The k vectors are iterated together and re-orthonormalized each sweep,
    which keeps deflation stable even when eigenvalues are (near) repeated;
    convergence is judged on the invariant-subspace residual, the part that
    actually matters for the embedding.
    """
    n = laplacian.shape[0]
    m = 2.0 * np.eye(n) - laplacian
    v, _ = np.linalg.qr(rng.standard_normal((n, k)))
    converged = False
    best = (np.inf, v)
    for _ in range(max_iter):
        w = m @ v
        v_new, _ = np.linalg.qr(w)
        projected = v_new.T @ m @ v_new
        residual = float(
            np.linalg.norm(m @ v_new - v_new @ projected)
            / max(1.0, np.linalg.norm(projected))
        )
        v = v_new
        if residual < best[0]:
            best = (residual, v)
        if residual < tol:
            converged = True
            break
    if not converged:
        # a k/(k+1) eigenvalue tie makes the subspace non-unique and the
        # residual plateau; any near-invariant basis is fine for clustering
        if best[0] < 1e-6:
            v = best[1]
        else:
            raise EigensolverError(
                f"power iteration did not converge for the {k}-dimensional "
                f"eigenspace within {max_iter} iterations "
                f"(best residual {best[0]:.2e})"
            )
    # rotate into eigenvector coordinates and fix signs for determinism
    projected = v.T @ m @ v
    eigvals, rotation = np.linalg.eigh(projected)
    order = np.argsort(eigvals)[::-1]  # largest of m = smallest of the laplacian
    basis = v @ rotation[:, order]
    for j in range(k):
        lead = np.flatnonzero(np.abs(basis[:, j]) > 1e-12)
        if lead.size and basis[lead[0], j] < 0:
            basis[:, j] = -basis[:, j]
    return basis


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 200) -> np.ndarray:
    """Seeded Lloyd clustering; init prefers k distinct points, empty
    clusters are refilled with the farthest point."""
    n = points.shape[0]
    order = rng.permutation(n)
    centroids, seen = [], set()
    for i in order:
        key = tuple(np.round(points[i], 12))
        if key not in seen:
            seen.add(key)
            centroids.append(points[i])
        if len(centroids) == k:
            break
    while len(centroids) < k:  # fewer distinct points than clusters
        centroids.append(points[int(order[len(centroids) % n])])
    centers = np.array(centroids)

    labels = np.full(n, -1, dtype=np.int64)
    for _it in range(max_iter):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(dist.min(axis=1).argmax())
                new_labels[far] = c
                dist[far] = 0.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return labels


@dataclass(frozen=True)
class SyntheticParams:
    topic_pool: int = 40
    story_pool: int = 24
    doc_length: int = 60
    # the story is deliberately faint: strong enough that constraints can
    # assemble it, weak enough that it never becomes the dominant
    # unsupervised structure (otherwise feedback-blind cuts find it too)
    story_weight: float = 0.05
    # optional sub-pools per topic: each irrelevant document writes in one
    # narrow slice of its topic's vocabulary (tight background clusters);
    # 1 keeps topic sampling symmetric for relevant and irrelevant docs
    topic_subpools: int = 1

    def to_dict(self) -> dict:
        return {
            "topic_pool": self.topic_pool,
            "story_pool": self.story_pool,
            "doc_length": self.doc_length,
            "story_weight": self.story_weight,
            "topic_subpools": self.topic_subpools,
        }


def generate_synthetic_corpus(
    n_relevant: int,
    n_irrelevant: int,
    n_topics: int,
    params: SyntheticParams,
    rng: np.random.Generator,
) -> tuple[Corpus, GroundTruth]:
    """Planted-story corpus: relevant documents mix a shared story pool into
    their topic vocabulary; irrelevant ones draw from topic pools only.
    Topics rotate over document index so the story crosses topic lines, and
    each irrelevant document sticks to one narrow sub-pool of its topic."""
    if min(n_relevant, n_irrelevant, n_topics) < 1:
        raise EvaluationError("corpus sizes and topic count must be >= 1")
    topic_pools = [
        [f"t{t}w{j:03d}" for j in range(params.topic_pool)] for t in range(n_topics)
    ]
    story_pool = [f"sw{j:03d}" for j in range(params.story_pool)]
    subpools = max(1, params.topic_subpools)

    total = n_relevant + n_irrelevant
    documents = []
    relevant_ids = []
    n_story = int(round(params.story_weight * params.doc_length))
    for i in range(total):
        topic = topic_pools[i % n_topics]
        relevant = i < n_relevant
        if relevant:
            words = list(rng.choice(story_pool, size=n_story)) + list(
                rng.choice(topic, size=params.doc_length - n_story)
            )
        else:
            slice_size = max(1, len(topic) // subpools)
            start = int(rng.integers(0, subpools)) * slice_size
            chunk = topic[start : start + slice_size] or topic
            words = list(rng.choice(chunk, size=params.doc_length))
        doc_id = f"doc{i:03d}"
        documents.append(Document(doc_id, " ".join(words), relevant))
        if relevant:
            relevant_ids.append(doc_id)
    corpus = build_corpus(documents)
    return corpus, GroundTruth(frozenset(relevant_ids))


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[str, ...] = METHODS
    k_values: tuple[int, ...] = (2, 4, 8, 16)
    seeds: tuple[int, ...] = (0,)
    p_pos: float = 0.10
    p_neg: float = 0.01
    n_relevant: int = 10
    n_irrelevant: int = 20
    n_topics: int = 2
    synthetic: SyntheticParams = SyntheticParams()
    hyper: Hyperparameters = Hyperparameters()

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise EvaluationError(f"unknown method {m!r}; expected one of {METHODS}")

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "k_values": list(self.k_values),
            "seeds": list(self.seeds),
            "p_pos": self.p_pos,
            "p_neg": self.p_neg,
            "n_relevant": self.n_relevant,
            "n_irrelevant": self.n_irrelevant,
            "n_topics": self.n_topics,
            "synthetic": self.synthetic.to_dict(),
            "hyperparameters": self.hyper.to_dict(),
        }


@dataclass(frozen=True)
class ReportRow:
    method: str
    k: int
    seed: int
    rho: float
    satisfied_ratio: float
    f_prob: float
    runtime_ms: float


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ReportRow] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        """Deterministic report body; runtimes live in the CSV only."""
        return {
            "v": 1,
            "config": self.config.to_dict(),
            "rows": [
                {
                    "method": r.method,
                    "K": r.k,
                    "seed": r.seed,
                    "rho": r.rho,
                    "satisfied_ratio": r.satisfied_ratio,
                    "f_prob": r.f_prob,
                }
                for r in self.rows
            ],
            "failures": self.failures,
        }


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """One cell per (seed, method, K): build the instance, summarize, score."""
    report = ExperimentReport(config)
    for seed in config.seeds:
        corpus_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        corpus, truth = generate_synthetic_corpus(
            config.n_relevant, config.n_irrelevant, config.n_topics, config.synthetic, corpus_rng
        )
        graph = build_document_graph(corpus)
        fb = sample_feasible_feedback(truth, corpus.ids, config.p_pos, config.p_neg, seed)
        for method in config.methods:
            for k in config.k_values:
                start = time.perf_counter()
                try:
                    assignment = _run_method(method, graph, fb, k, config, seed)
                except Exception as exc:  # record the failure, keep going
                    report.failures.append(
                        {"method": method, "K": k, "seed": seed, "error": str(exc)}
                    )
                    continue
                elapsed_ms = (time.perf_counter() - start) * 1000.0
                satisfied, total = satisfaction(fb, assignment, graph.ids)
                report.rows.append(
                    ReportRow(
                        method=method,
                        k=k,
                        seed=seed,
                        rho=purity_rho(assignment, truth, corpus.ids),
                        satisfied_ratio=satisfied / total if total else 1.0,
                        f_prob=f_prob(graph, assignment),
                        runtime_ms=elapsed_ms,
                    )
                )
    return report


def _run_method(
    method: str,
    graph: DocumentGraph,
    fb: FeedbackGraphs,
    k: int,
    config: ExperimentConfig,
    seed: int,
) -> Assignment:
    if method == "netreact":
        hierarchy = hierarchical_summarize(graph, fb, k, config.hyper, seed)
        return hierarchy.levels[-1].assignment
    if method == "spectral":
        return spectral_baseline(graph, k, seed)
    if method == "random":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(97, k)))
        return Assignment(rng.integers(1, k + 1, size=graph.n, dtype=np.int64), k)
    raise EvaluationError(f"unknown method {method!r}")


def write_report(report: ExperimentReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Emit report.json (deterministic) and report.csv (with runtimes)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    csv_path = out_dir / "report.csv"
    json_path.write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "K", "seed", "rho", "satisfied_ratio", "f_prob", "runtime_ms"])
        for r in report.rows:
            writer.writerow(
                [r.method, r.k, r.seed, repr(r.rho), repr(r.satisfied_ratio), repr(r.f_prob), f"{r.runtime_ms:.3f}"]
            )
    return json_path, csv_path


def write_plot_data(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    """Per-figure CSVs: mean satisfied ratio and mean purity by (method, K)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells: dict[tuple[str, int], list[ReportRow]] = {}
    for row in report.rows:
        cells.setdefault((row.method, row.k), []).append(row)
    paths = []
    for fname, attr in (("satisfied_by_k.csv", "satisfied_ratio"), ("rho_by_k.csv", "rho")):
        path = out_dir / fname
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "K", f"mean_{attr}"])
            for (method, k), rows in sorted(cells.items()):
                mean = float(np.mean([getattr(r, attr) for r in rows]))
                writer.writerow([method, k, repr(mean)])
        paths.append(path)
    return paths
