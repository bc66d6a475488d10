"""Two-step visualization: summary backbone plus per-group sublayouts.

The force model pulls connected nodes together with weight * distance^2 and
pushes every pair apart with 1/distance. Final document positions combine a
group-local layout, shrunk by the group count, with the group's backbone
position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netgraph import Assignment, DocumentGraph, SummaryGraph, induced_subgraph


@dataclass(frozen=True)
class ForceConfig:
    iterations: int = 300
    repulsion: float = 0.05
    attraction: float = 1.0
    seed: int = 0
    min_weight: float = 0.01  # edges below this are skipped in the force loop
    initial_step: float = 0.1  # cooling starts here and decays linearly

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.repulsion <= 0 or self.attraction <= 0:
            raise ValueError("force scales must be positive")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "repulsion": self.repulsion,
            "attraction": self.attraction,
            "seed": self.seed,
            "min_weight": self.min_weight,
            "initial_step": self.initial_step,
        }


@dataclass(frozen=True)
class LayoutResult:
    positions: dict[str, tuple[float, float]]
    supernode_positions: dict[int, tuple[float, float]]
    config: ForceConfig
    jitter_applied: bool = False

    def min_distance(self) -> float:
        pts = np.array(list(self.positions.values()))
        if len(pts) < 2:
            return float("inf")
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        return float(dist[~np.eye(len(pts), dtype=bool)].min())


def force_layout(weights: np.ndarray, config: ForceConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Iterative weighted force simulation; positions land in [-1, 1]^2.

    Nodes start on a seeded, jittered circle. Per step each node moves along
    the net force, clamped by a linearly cooling step size; the result is
    rescaled per axis to fill [-1, 1]. Deterministic for a given seed.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    if n == 0:
        raise ValueError("graph must be non-empty")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    if n == 1:
        return np.zeros((1, 2))

    angles = 2.0 * np.pi * np.arange(n) / n
    pos = np.column_stack([np.cos(angles), np.sin(angles)])
    pos += rng.uniform(-0.05, 0.05, size=(n, 2))

    active = weights * (weights >= config.min_weight)
    for it in range(config.iterations):
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        coincident = (dist < 1e-9) & ~np.eye(n, dtype=bool)
        if coincident.any():
            pos += rng.uniform(-1e-6, 1e-6, size=(n, 2))
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, 1.0)
        # net magnitude per pair: repulsion c_r/d minus attraction c_a*w*d^2
        magnitude = config.repulsion / dist - config.attraction * active * dist**2
        np.fill_diagonal(magnitude, 0.0)
        disp = (magnitude[:, :, None] * diff / dist[:, :, None]).sum(axis=1)
        step = config.initial_step * (1.0 - it / config.iterations)
        norms = np.sqrt((disp**2).sum(axis=1))
        scale = np.where(norms > step, step / np.maximum(norms, 1e-30), 1.0)
        pos += disp * scale[:, None]

    return _rescale(pos)


def _rescale(pos: np.ndarray) -> np.ndarray:
    out = np.zeros_like(pos)
    for axis in range(2):
        lo, hi = pos[:, axis].min(), pos[:, axis].max()
        if hi > lo:
            out[:, axis] = 2.0 * (pos[:, axis] - lo) / (hi - lo) - 1.0
    return out


def two_step_layout(
    graph: DocumentGraph,
    assignment: Assignment,
    summary: SummaryGraph,
    config: ForceConfig | None = None,
) -> LayoutResult:
    """Backbone layout of the summary graph, then per-group sublayouts,
    combined as position(v) = sub(v) / k + backbone(group(v))."""
    config = config or ForceConfig()
    if assignment.labels.size != graph.n:
        raise ValueError(f"assignment length {assignment.labels.size} != graph size {graph.n}")
    groups = assignment.groups()
    occupied = sorted(groups)
    k = len(occupied)

    backbone_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
    backbone = force_layout(summary.superedges, config, backbone_rng)

    positions: dict[str, tuple[float, float]] = {}
    supernode_positions: dict[int, tuple[float, float]] = {}
    for gi, label in enumerate(occupied):
        supernode_positions[gi] = (float(backbone[gi, 0]), float(backbone[gi, 1]))
        members = groups[label]
        sub, remap = induced_subgraph(graph, members)
        sub_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(gi + 1,)))
        sub_pos = force_layout(sub.weights, config, sub_rng)
        for j, orig in enumerate(remap):
            x = sub_pos[j, 0] / k + backbone[gi, 0]
            y = sub_pos[j, 1] / k + backbone[gi, 1]
            positions[graph.ids[orig]] = (float(x), float(y))

    result = LayoutResult(positions, supernode_positions, config)
    jitter_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(10_000,)))
    while result.min_distance() <= 0.0:
        jittered = {
            doc_id: (x + float(jitter_rng.uniform(-1e-6, 1e-6)), y + float(jitter_rng.uniform(-1e-6, 1e-6)))
            for doc_id, (x, y) in sorted(result.positions.items())
        }
        result = LayoutResult(jittered, supernode_positions, config, jitter_applied=True)
    return result


def layout_to_dict(result: LayoutResult) -> dict:
    return {
        "positions": {doc_id: [x, y] for doc_id, (x, y) in sorted(result.positions.items())},
        "supernodes": {str(gid): [x, y] for gid, (x, y) in sorted(result.supernode_positions.items())},
        "config": result.config.to_dict(),
    }


def write_layout(result: LayoutResult, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(layout_to_dict(result), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
