"""Deep Q-learning over partition states.

A state is the label vector of an Assignment, one-hot encoded per node.
Actions move one node to a different group. The value network is a single
hidden ReLU layer; forward, backprop, and the momentum step are explicit
numpy so training is bit-reproducible under a seed and the gradients can be
checked against finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .feedback import FeedbackGraphs, feasibility_check, index_pairs, is_fully_satisfied
from .netgraph import Assignment, DocumentGraph, f_prob


class QLearnError(RuntimeError):
    """Training-time failure: bad dimensions, infeasible feedback, NaNs."""


class InfeasibleFeedback(QLearnError):
    """No assignment can satisfy the given feedback."""


class DimensionMismatch(QLearnError):
    """Model was trained for a different (n, k)."""


@dataclass(frozen=True)
class Hyperparameters:
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_frac: float = 0.8
    hidden: int = 64
    learning_rate: float = 1e-3
    momentum: float = 0.9
    episodes: int = 300
    step_cap: int | None = None  # None means 4*n per episode
    update_passes: int = 1  # td_update repetitions over each episode batch
    # fraction of episodes seeded from a perturbed incumbent once one exists;
    # remaining episodes keep fresh uniform starts
    incumbent_restarts: float = 0.5
    restart_flips: int | None = None  # labels flipped per restart; None: max(2, n//6)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise QLearnError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.episodes < 1:
            raise QLearnError("episode count must be >= 1")

    def epsilon(self, episode: int) -> float:
        """Linear decay over the first decay_frac of episodes, then flat."""
        cut = max(1, int(self.epsilon_decay_frac * self.episodes))
        frac = min(1.0, episode / cut)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac

    def cap(self, n: int) -> int:
        return self.step_cap if self.step_cap is not None else 4 * n

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "epsilon_start": self.epsilon_start,
            "epsilon_end": self.epsilon_end,
            "epsilon_decay_frac": self.epsilon_decay_frac,
            "hidden": self.hidden,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "episodes": self.episodes,
            "step_cap": self.step_cap,
            "update_passes": self.update_passes,
            "incumbent_restarts": self.incumbent_restarts,
            "restart_flips": self.restart_flips,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Hyperparameters":
        return cls(**obj)


@dataclass
class QModel:
    """Two fully connected layers: state embedding, then one value per action."""

    n: int
    k: int
    hyper: Hyperparameters
    seed: int
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    # momentum buffers; not part of the checkpoint
    vW1: np.ndarray = field(repr=False, default=None)
    vb1: np.ndarray = field(repr=False, default=None)
    vW2: np.ndarray = field(repr=False, default=None)
    vb2: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.vW1 is None:
            self.vW1 = np.zeros_like(self.W1)
            self.vb1 = np.zeros_like(self.b1)
            self.vW2 = np.zeros_like(self.W2)
            self.vb2 = np.zeros_like(self.b2)

    @property
    def state_dim(self) -> int:
        return self.n * self.k


@dataclass(frozen=True)
class Action:
    node: int       # 0-based node index
    new_label: int  # 1-based target group

    def flat(self, k: int) -> int:
        """Flat position in the network output, row-major over (node, label)."""
        return self.node * k + (self.new_label - 1)


@dataclass(frozen=True)
class EpisodeStats:
    episode: int
    steps: int
    terminal: bool
    reward: float
    f_prob: float
    loss: float | None
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "episode": self.episode,
            "steps": self.steps,
            "terminal": self.terminal,
            "reward": self.reward,
            "f_prob": self.f_prob,
            "loss": self.loss,
            "epsilon": self.epsilon,
        }


@dataclass
class TrainResult:
    model: "QModel"
    assignment: Assignment
    satisfied: bool      # True when the returned assignment meets all feedback
    best_f_prob: float
    episodes: list[EpisodeStats]


@dataclass(frozen=True)
class ReapplyResult:
    assignment: Assignment
    satisfied: int
    total: int
    steps: int


def init_model(n: int, k: int, hyper: Hyperparameters, seed: int) -> QModel:
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d, h = n * k, hyper.hidden
    s1, s2 = 1.0 / math.sqrt(d), 1.0 / math.sqrt(h)
    return QModel(
        n=n,
        k=k,
        hyper=hyper,
        seed=seed,
        W1=rng.uniform(-s1, s1, size=(d, h)),
        b1=rng.uniform(-s1, s1, size=h),
        W2=rng.uniform(-s2, s2, size=(h, d)),
        b2=rng.uniform(-s2, s2, size=d),
    )


def encode_state(assignment: Assignment) -> np.ndarray:
    """One-hot block per node: position i*k + (label_i - 1) is 1."""
    return _encode(assignment.labels[None, :], assignment.k)[0]


def _encode(labels: np.ndarray, k: int) -> np.ndarray:
    b, n = labels.shape
    x = np.zeros((b, n * k))
    flat = np.arange(n) * k + (labels - 1)
    x[np.arange(b)[:, None], flat] = 1.0
    return x


def q_forward(model: QModel, state_vec: np.ndarray) -> np.ndarray:
    """Action values for one encoded state."""
    state_vec = np.asarray(state_vec, dtype=float)
    if state_vec.shape != (model.state_dim,):
        raise DimensionMismatch(
            f"state vector has shape {state_vec.shape}, expected ({model.state_dim},)"
        )
    out, _, _ = _forward(model, state_vec[None, :])
    return out[0]


def _forward(model: QModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pre = x @ model.W1 + model.b1
    hidden = np.maximum(pre, 0.0)
    return hidden @ model.W2 + model.b2, hidden, pre


def _valid_mask(labels: np.ndarray, k: int) -> np.ndarray:
    """Flat boolean mask over (node, label) actions; current labels are invalid."""
    n = labels.shape[-1]
    mask = np.ones(labels.shape[:-1] + (n, k), dtype=bool)
    idx = np.arange(n)
    if labels.ndim == 1:
        mask[idx, labels - 1] = False
    else:
        mask[np.arange(labels.shape[0])[:, None], idx, labels - 1] = False
    return mask.reshape(labels.shape[:-1] + (n * k,))


def select_action(
    model: QModel, assignment: Assignment, epsilon: float, rng: np.random.Generator
) -> Action:
    """Epsilon-greedy over valid actions; greedy ties break at the lowest
    (node, new_label) flat index."""
    if assignment.k < 2:
        raise QLearnError("no valid actions exist for k=1")
    labels = assignment.labels
    mask = _valid_mask(labels, assignment.k)
    if rng.random() < epsilon:
        flat = int(rng.choice(np.flatnonzero(mask)))
    else:
        q = q_forward(model, _encode(labels[None, :], assignment.k)[0])
        q = np.where(mask, q, -np.inf)
        flat = int(np.argmax(q))
    return Action(node=flat // assignment.k, new_label=flat % assignment.k + 1)


def transition(assignment: Assignment, action: Action) -> Assignment:
    """Deterministic: move one node to its new group."""
    labels = assignment.labels
    if not 0 <= action.node < labels.size:
        raise QLearnError(f"action node {action.node} out of range")
    if not 1 <= action.new_label <= assignment.k:
        raise QLearnError(f"action label {action.new_label} out of range 1..{assignment.k}")
    if labels[action.node] == action.new_label:
        raise QLearnError(f"action re-assigns node {action.node} to its current group")
    out = labels.copy()
    out[action.node] = action.new_label
    return Assignment(out, assignment.k)


def reward(graph: DocumentGraph, fb: FeedbackGraphs, next_assignment: Assignment) -> float:
    """Partition quality at a terminal (all-feedback-satisfying) state, else -1."""
    if next_assignment.labels.size != graph.n:
        raise QLearnError(
            f"assignment length {next_assignment.labels.size} != graph size {graph.n}"
        )
    if is_fully_satisfied(fb, next_assignment, graph.ids):
        return f_prob(graph, next_assignment)
    return -1.0


@dataclass(frozen=True)
class TransitionRecord:
    state: np.ndarray       # label vector before the action
    action_flat: int
    reward: float
    next_state: np.ndarray  # label vector after the action
    terminal: bool


def loss_and_grads(
    model: QModel,
    states: np.ndarray,
    action_flat: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Squared error on the taken actions' values, for fixed targets.

    Pure in the model parameters, which is what lets tests compare these
    gradients against central finite differences.
    """
    out, hidden, pre = _forward(model, states)
    b = states.shape[0]
    rows = np.arange(b)
    q = out[rows, action_flat]
    diff = q - targets
    loss = float(np.mean(diff**2))

    dout = np.zeros_like(out)
    dout[rows, action_flat] = 2.0 * diff / b
    gW2 = hidden.T @ dout
    gb2 = dout.sum(axis=0)
    dhidden = dout @ model.W2.T
    dpre = dhidden * (pre > 0.0)
    gW1 = states.T @ dpre
    gb1 = dpre.sum(axis=0)
    return loss, {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


def td_update(model: QModel, batch: Sequence[TransitionRecord]) -> float:
    """One gradient step on the batch's TD targets; returns the mean loss.

    target = r for terminal transitions, else r + gamma * max over valid
    actions of the next state's values. Only the taken action's output
    receives gradient.
    """
    if not batch:
        raise QLearnError("td_update requires a non-empty batch")
    k = model.k
    states = np.stack([t.state for t in batch])
    next_states = np.stack([t.next_state for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=float)
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    action_flat = np.array([t.action_flat for t in batch], dtype=np.int64)

    x = _encode(states, k)
    x_next = _encode(next_states, k)
    q_next, _, _ = _forward(model, x_next)
    q_next = np.where(_valid_mask(next_states, k), q_next, -np.inf)
    best_next = q_next.max(axis=1)
    targets = np.where(terminal, rewards, rewards + model.hyper.gamma * best_next)

    loss, grads = loss_and_grads(model, x, action_flat, targets)
    for name in ("W1", "b1", "W2", "b2"):
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise QLearnError(
                f"non-finite gradient in {name} (batch size {len(batch)}, "
                f"lr {model.hyper.learning_rate}); aborting update"
            )
    mu, lr = model.hyper.momentum, model.hyper.learning_rate
    for name, vel in (("W1", "vW1"), ("b1", "vb1"), ("W2", "vW2"), ("b2", "vb2")):
        v = mu * getattr(model, vel) - lr * grads[name]
        setattr(model, vel, v)
        setattr(model, name, getattr(model, name) + v)
        if not np.all(np.isfinite(getattr(model, name))):
            raise QLearnError(f"non-finite weights in {name} after update")
    return loss


def _satisfied(labels: np.ndarray, pos: np.ndarray, neg: np.ndarray) -> bool:
    if pos.size and not np.all(labels[pos[:, 0]] == labels[pos[:, 1]]):
        return False
    if neg.size and not np.all(labels[neg[:, 0]] != labels[neg[:, 1]]):
        return False
    return True


def _satisfied_count(labels: np.ndarray, pos: np.ndarray, neg: np.ndarray) -> int:
    count = 0
    if pos.size:
        count += int(np.sum(labels[pos[:, 0]] == labels[pos[:, 1]]))
    if neg.size:
        count += int(np.sum(labels[neg[:, 0]] != labels[neg[:, 1]]))
    return count


def train(
    graph: DocumentGraph,
    fb: FeedbackGraphs,
    k: int,
    hyper: Hyperparameters | None = None,
    seed: int = 0,
    on_episode: Callable[[EpisodeStats], None] | None = None,
) -> TrainResult:
    """Episode training: explore until the feedback is satisfied, then learn
    from the collected transitions.

    Episodes walk with the epsilon-greedy policy until all feedback holds or
    the step cap is hit, then the episode's transitions drive TD gradient
    steps. Starts are uniform random; once a satisfying incumbent exists, a
    seeded fraction of episodes restarts from a perturbed copy of it so that
    absorption samples terminal states near the best one found so far. The
    returned assignment is the feedback-satisfying state with the highest
    partition quality seen anywhere in training. If no episode reached a
    satisfying state the result carries the best-effort assignment with
    satisfied=False.
    """
    if k < 2:
        raise QLearnError(f"training needs k >= 2, got k={k}")
    hyper = hyper or Hyperparameters()
    feasible = feasibility_check(fb, k)
    if not feasible:
        raise InfeasibleFeedback(feasible.reason or "feedback is infeasible")
    pos, neg = index_pairs(fb, graph.ids)

    n = graph.n
    model = init_model(n, k, hyper, seed)
    _, walk_ss = np.random.SeedSequence(seed).spawn(2)
    episode_rng = np.random.default_rng(walk_ss)
    cap = hyper.cap(n)
    flips = hyper.restart_flips if hyper.restart_flips is not None else max(2, n // 6)

    best_terminal: tuple[float, np.ndarray] | None = None
    best_effort: tuple[int, float, np.ndarray] | None = None
    log: list[EpisodeStats] = []

    for episode in range(hyper.episodes):
        eps = hyper.epsilon(episode)
        if best_terminal is not None and episode_rng.random() < hyper.incumbent_restarts:
            labels = best_terminal[1].copy()
            for i in episode_rng.choice(n, size=min(flips, n), replace=False):
                labels[i] = episode_rng.integers(1, k + 1)
        else:
            labels = episode_rng.integers(1, k + 1, size=n, dtype=np.int64)
        trace: list[TransitionRecord] = []
        terminal = _satisfied(labels, pos, neg)
        final_reward = 0.0
        while not terminal and len(trace) < cap:
            assignment = Assignment(labels, k)
            action = select_action(model, assignment, eps, episode_rng)
            nxt = labels.copy()
            nxt[action.node] = action.new_label
            terminal = _satisfied(nxt, pos, neg)
            final_reward = f_prob(graph, Assignment(nxt, k)) if terminal else -1.0
            trace.append(
                TransitionRecord(labels, action.flat(k), final_reward, nxt, terminal)
            )
            labels = nxt

        quality = f_prob(graph, Assignment(labels, k))
        if terminal:
            if not trace:  # already satisfying at the initial state
                final_reward = quality
            if best_terminal is None or quality > best_terminal[0]:
                best_terminal = (quality, labels.copy())
        else:
            count = _satisfied_count(labels, pos, neg)
            if best_effort is None or (count, quality) > best_effort[:2]:
                best_effort = (count, quality, labels.copy())

        loss = None
        if trace:
            for _ in range(hyper.update_passes):
                loss = td_update(model, trace)
        stats = EpisodeStats(
            episode=episode,
            steps=len(trace),
            terminal=terminal,
            reward=final_reward if trace or terminal else -1.0,
            f_prob=quality,
            loss=loss,
            epsilon=eps,
        )
        log.append(stats)
        if on_episode is not None:
            on_episode(stats)

    if best_terminal is not None:
        quality, labels = best_terminal
        return TrainResult(model, Assignment(labels, k), True, quality, log)
    _, quality, labels = best_effort  # at least one episode always ran
    return TrainResult(model, Assignment(labels, k), False, quality, log)


def reapply(
    model: QModel,
    graph: DocumentGraph,
    fb: FeedbackGraphs,
    k: int,
    rng: np.random.Generator,
) -> ReapplyResult:
    """Greedy rollout of a trained model on a same-shape instance; no updates."""
    if model.n != graph.n or model.k != k:
        raise DimensionMismatch(
            f"model was trained for (n={model.n}, k={model.k}), "
            f"instance has (n={graph.n}, k={k})"
        )
    pos, neg = index_pairs(fb, graph.ids)
    labels = rng.integers(1, k + 1, size=graph.n, dtype=np.int64)
    cap = model.hyper.cap(graph.n)
    steps = 0
    while not _satisfied(labels, pos, neg) and steps < cap:
        action = select_action(model, Assignment(labels, k), 0.0, rng)
        labels[action.node] = action.new_label
        steps += 1
    assignment = Assignment(labels, k)
    satisfied = _satisfied_count(labels, pos, neg)
    return ReapplyResult(assignment, satisfied, fb.total, steps)


def save_model(model: QModel, path: str | Path) -> None:
    """Checkpoint: dims, row-major layer arrays, hyperparameters, seed."""
    doc = {
        "dims": [model.n, model.k, model.hyper.hidden],
        "W1": model.W1.ravel().tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.ravel().tolist(),
        "b2": model.b2.tolist(),
        "hyperparameters": model.hyper.to_dict(),
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path: str | Path) -> QModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    n, k, h = doc["dims"]
    hyper = Hyperparameters.from_dict(doc["hyperparameters"])
    if hyper.hidden != h:
        raise QLearnError(f"checkpoint dims disagree: hidden {h} vs {hyper.hidden}")
    arrays = {}
    shapes = {"W1": (n * k, h), "b1": (h,), "W2": (h, n * k), "b2": (n * k,)}
    for name, shape in shapes.items():
        arr = np.array(doc[name], dtype=float).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise QLearnError(f"checkpoint contains non-finite values in {name}")
        arrays[name] = arr
    return QModel(n=n, k=k, hyper=hyper, seed=int(doc["seed"]), **arrays)
