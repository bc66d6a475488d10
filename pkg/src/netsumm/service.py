"""Session-oriented HTTP API over the summarization engine.

One directory per session holds the corpus snapshot, the interaction event
log, the persisted hierarchy, per-level layouts, and model checkpoints.
Feedback state is always reconstructable by replaying the event log, so a
service restart reproduces sessions exactly.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import Body, FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .corpus import Corpus, CorpusError, load_corpus, top_terms, write_jsonl
from .corpus import build_corpus, Document
from .feedback import (
    FeedbackConflict,
    FeedbackError,
    FeedbackGraphs,
    InteractionEvent,
    append_event_log,
    append_focus_log,
    apply_interaction,
    feasibility_check,
    replay_log,
    serialize_feedback,
)
from .layout import ForceConfig, LayoutResult, layout_to_dict, two_step_layout
from .netgraph import Assignment, DocumentGraph, build_document_graph
from .qlearn import Hyperparameters, save_model
from .summarizer import (
    Hierarchy,
    HierarchyLevel,
    _make_level,
    hierarchical_summarize,
    hierarchy_from_dict,
    hierarchy_to_dict,
    select_best_level,
)

WORD_CLOUD_TERMS = 10
PROGRESS_EVERY = 25  # stream a training_progress message every N episodes


class _Cancelled(Exception):
    pass


@dataclass
class TrainingState:
    status: str = "idle"  # idle | queued | running | done | cancelled | failed
    error: str | None = None
    k: int | None = None
    cancel: bool = False
    tail: list[dict] = field(default_factory=list)  # recent per-episode stats
    levels: list[dict] = field(default_factory=list)


@dataclass
class SessionState:
    sid: str
    directory: Path
    corpus: Corpus
    graph: DocumentGraph
    seed: int
    fb: FeedbackGraphs = field(default_factory=FeedbackGraphs)
    focus: str | None = None
    hierarchy: Hierarchy | None = None
    trained_feedback: str = ""  # serialized feedback the hierarchy was built on
    layouts: dict[int, LayoutResult] = field(default_factory=dict)
    training: TrainingState = field(default_factory=TrainingState)
    lock: threading.RLock = field(default_factory=threading.RLock)
    feed: list[dict] = field(default_factory=list)  # stream outbox, append-only

    @property
    def events_path(self) -> Path:
        return self.directory / "events.jsonl"

    def push(self, kind: str, payload: dict) -> None:
        self.feed.append({"v": 1, "type": kind, "payload": payload})

    def stale(self) -> bool:
        return serialize_feedback(self.fb) != self.trained_feedback


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _layout_seed(seed: int, level: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(17, level)).generate_state(1)[0])


class SessionStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, SessionState] = {}
        self.lock = threading.Lock()

    def create(self, corpus: Corpus, seed: int) -> SessionState:
        sid = "s-" + uuid.uuid4().hex[:12]
        directory = self.root / sid
        directory.mkdir(parents=True)
        write_jsonl(corpus, directory / "corpus.jsonl")
        _atomic_write(
            directory / "meta.json",
            json.dumps({"v": 1, "session_id": sid, "seed": seed}, sort_keys=True) + "\n",
        )
        state = SessionState(
            sid=sid,
            directory=directory,
            corpus=corpus,
            graph=build_document_graph(corpus),
            seed=seed,
        )
        self._init_level0(state)
        with self.lock:
            self.sessions[sid] = state
        return state

    def _init_level0(self, state: SessionState) -> None:
        trivial = Assignment(np.ones(state.graph.n, dtype=np.int64), 1)
        level0 = _make_level(state.graph, state.fb, trivial, 0)
        state.hierarchy = Hierarchy((level0,), {}, state.seed, state.graph.ids)
        state.trained_feedback = serialize_feedback(state.fb)
        self._persist_hierarchy(state)
        state.layouts[0] = self._layout_for(state, 0)
        self._persist_layouts(state)

    def get(self, sid: str) -> SessionState:
        with self.lock:
            if sid in self.sessions:
                return self.sessions[sid]
        state = self._load(sid)
        with self.lock:
            return self.sessions.setdefault(sid, state)

    def _load(self, sid: str) -> SessionState:
        directory = self.root / sid
        if not (directory / "meta.json").exists():
            raise HTTPException(404, f"unknown session: {sid}")
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        corpus = load_corpus(directory / "corpus.jsonl", "jsonl")
        graph = build_document_graph(corpus)
        state = SessionState(
            sid=sid, directory=directory, corpus=corpus, graph=graph, seed=meta["seed"]
        )
        state.fb, state.focus = replay_log(state.events_path)
        hpath = directory / "hierarchy.json"
        if hpath.exists():
            obj = json.loads(hpath.read_text(encoding="utf-8"))
            state.hierarchy = hierarchy_from_dict(obj, graph.ids, graph)
            hmeta_path = directory / "hierarchy_meta.json"
            if hmeta_path.exists():
                hmeta = json.loads(hmeta_path.read_text(encoding="utf-8"))
                state.trained_feedback = hmeta.get("feedback", "")
        lpath = directory / "layouts.json"
        if lpath.exists():
            raw = json.loads(lpath.read_text(encoding="utf-8"))
            for level_str, obj in raw.get("levels", {}).items():
                state.layouts[int(level_str)] = LayoutResult(
                    positions={i: tuple(xy) for i, xy in obj["positions"].items()},
                    supernode_positions={int(g): tuple(xy) for g, xy in obj["supernodes"].items()},
                    config=ForceConfig(**obj["config"]),
                )
        return state

    def _persist_hierarchy(self, state: SessionState) -> None:
        _atomic_write(
            state.directory / "hierarchy.json",
            json.dumps(hierarchy_to_dict(state.hierarchy), sort_keys=True) + "\n",
        )
        _atomic_write(
            state.directory / "hierarchy_meta.json",
            json.dumps({"v": 1, "feedback": state.trained_feedback}, sort_keys=True) + "\n",
        )

    def _persist_layouts(self, state: SessionState) -> None:
        doc = {
            "v": 1,
            "levels": {str(level): layout_to_dict(res) for level, res in sorted(state.layouts.items())},
        }
        _atomic_write(state.directory / "layouts.json", json.dumps(doc, sort_keys=True) + "\n")

    def _layout_for(self, state: SessionState, level: int) -> LayoutResult:
        lvl = state.hierarchy.level(level)
        config = ForceConfig(seed=_layout_seed(state.seed, level))
        return two_step_layout(state.graph, lvl.assignment, lvl.summary, config)

    def layout(self, state: SessionState, level: int) -> LayoutResult:
        with state.lock:
            if level not in state.layouts:
                state.hierarchy.level(level)  # raises on unknown level
                state.layouts[level] = self._layout_for(state, level)
                self._persist_layouts(state)
            return state.layouts[level]


def snapshot(state: SessionState) -> dict:
    """Satisfaction of the best hierarchy level against the current feedback."""
    from .feedback import satisfaction

    best = select_best_level(state.hierarchy, state.fb)
    satisfied, total = satisfaction(state.fb, state.hierarchy.level(best).assignment, state.graph.ids)
    return {
        "v": 1,
        "level": best,
        "satisfied": satisfied,
        "total": total,
        "ratio": satisfied / total if total else 1.0,
        "positive": len(state.fb.positive),
        "negative": len(state.fb.negative),
        "stale": state.stale(),
    }


def create_app(root: str | Path) -> FastAPI:
    app = FastAPI(title="netsumm session service")
    store = SessionStore(Path(root))
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        seed = int(payload.get("seed", 0))
        try:
            if "documents" in payload:
                docs = [
                    Document(str(d["id"]), str(d["text"]), d.get("relevant"))
                    for d in payload["documents"]
                ]
                corpus = build_corpus(docs)
            elif "corpus_path" in payload:
                corpus = load_corpus(payload["corpus_path"], payload.get("format", "jsonl"))
            else:
                raise HTTPException(422, "payload needs 'documents' or 'corpus_path'")
        except CorpusError as exc:
            raise HTTPException(400, str(exc)) from None
        except (KeyError, TypeError) as exc:
            raise HTTPException(422, f"malformed corpus payload: {exc}") from None
        state = store.create(corpus, seed)
        return {"v": 1, "session_id": state.sid, "documents": len(corpus.documents)}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        state = store.get(sid)
        with state.lock:
            return {
                "v": 1,
                "session_id": sid,
                "documents": len(state.corpus.documents),
                "levels": state.hierarchy.depth + 1,
                "focus": state.focus,
                "training": state.training.status,
                "satisfaction": snapshot(state),
            }

    @app.post("/sessions/{sid}/events")
    def post_event(sid: str, payload: dict = Body(...)):
        state = store.get(sid)
        try:
            event = InteractionEvent.from_dict(payload)
        except (FeedbackError, KeyError) as exc:
            raise HTTPException(422, f"malformed event: {exc}") from None
        known = set(state.corpus.ids)
        for doc_id in (event.subject, event.object, event.context):
            if doc_id is not None and doc_id not in known:
                raise HTTPException(404, f"unknown document id: {doc_id}")
        with state.lock:
            focus = state.focus
            try:
                state.fb = apply_interaction(state.fb, event, focus)
            except FeedbackConflict as exc:
                raise HTTPException(409, str(exc)) from None
            append_event_log(state.events_path, event, focus)
            snap = snapshot(state)
            state.push("satisfaction", snap)
            return snap

    @app.post("/sessions/{sid}/focus")
    def post_focus(sid: str, payload: dict = Body(...)):
        state = store.get(sid)
        doc = payload.get("doc")
        if doc is not None and doc not in set(state.corpus.ids):
            raise HTTPException(404, f"unknown document id: {doc}")
        with state.lock:
            state.focus = doc
            append_focus_log(state.events_path, doc)
            return {"v": 1, "focus": doc}

    @app.post("/sessions/{sid}/train", status_code=202)
    def start_training(sid: str, payload: dict = Body(default={})):
        state = store.get(sid)
        k = int(payload.get("K", 4))
        seed = int(payload.get("seed", state.seed))
        hyper = (
            Hyperparameters.from_dict({**Hyperparameters().to_dict(), **payload["hyperparameters"]})
            if "hyperparameters" in payload
            else Hyperparameters()
        )
        with state.lock:
            if state.training.status in ("queued", "running"):
                raise HTTPException(409, "a training run is already active for this session")
            feasible = feasibility_check(state.fb, 2)
            if not feasible:
                raise HTTPException(409, f"infeasible feedback: {feasible.reason}")
            state.training = TrainingState(status="queued", k=k)
            fb_at_start = state.fb
        worker = threading.Thread(
            target=_train_worker, args=(store, state, fb_at_start, k, hyper, seed), daemon=True
        )
        worker.start()
        return {"v": 1, "status": "queued", "K": k}

    @app.get("/sessions/{sid}/train")
    def training_status(sid: str):
        state = store.get(sid)
        with state.lock:
            t = state.training
            return {
                "v": 1,
                "status": t.status,
                "K": t.k,
                "error": t.error,
                "episodes": t.tail[-10:],
                "levels": t.levels,
            }

    @app.delete("/sessions/{sid}/train")
    def cancel_training(sid: str):
        state = store.get(sid)
        with state.lock:
            if state.training.status not in ("queued", "running"):
                raise HTTPException(409, "no active training run")
            state.training.cancel = True
            return {"v": 1, "status": "cancelling"}

    @app.get("/sessions/{sid}/summary")
    def get_summary(sid: str, level: int = 0):
        state = store.get(sid)
        with state.lock:
            try:
                lvl = state.hierarchy.level(level)
            except Exception:
                raise HTTPException(404, f"unknown level: {level}") from None
            return _summary_payload(state, lvl)

    @app.get("/sessions/{sid}/layout")
    def get_layout(sid: str, level: int = 0):
        state = store.get(sid)
        try:
            result = store.layout(state, level)
        except HTTPException:
            raise
        except Exception:
            raise HTTPException(404, f"unknown level: {level}") from None
        return {"v": 1, "level": level, **layout_to_dict(result)}

    @app.get("/sessions/{sid}/groups/{gid}")
    def expand_group(sid: str, gid: int, level: int = 0):
        state = store.get(sid)
        with state.lock:
            try:
                lvl = state.hierarchy.level(level)
            except Exception:
                raise HTTPException(404, f"unknown level: {level}") from None
            if not 0 <= gid < lvl.summary.k:
                raise HTTPException(404, f"unknown group: {gid}")
            layout = store.layout(state, level)
            members = sorted(lvl.summary.supernodes[gid])
            texts = {d.id: d.text for d in state.corpus.documents}
            return {
                "v": 1,
                "level": level,
                "gid": gid,
                "members": [
                    {"id": m, "text": texts[m], "position": list(layout.positions[m])}
                    for m in members
                ],
                "top_terms": [
                    [term, weight] for term, weight in top_terms(state.corpus, members, WORD_CLOUD_TERMS)
                ],
                "supernode_position": list(layout.supernode_positions[gid]),
            }

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        state = store.get(sid)
        await ws.accept()
        # reconnect contract: always start with the latest snapshot
        cursor = len(state.feed)
        with state.lock:
            await ws.send_json({"v": 1, "type": "satisfaction", "payload": snapshot(state)})
        try:
            while True:
                if len(state.feed) > cursor:
                    for message in state.feed[cursor:]:
                        await ws.send_json(message)
                    cursor = len(state.feed)
                else:
                    await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            pass

    return app


def _summary_payload(state: SessionState, lvl: HierarchyLevel) -> dict:
    from .feedback import satisfaction

    satisfied, total = satisfaction(state.fb, lvl.assignment, state.graph.ids)
    supernodes = []
    for gid, members in enumerate(lvl.summary.supernodes):
        ordered = sorted(members)
        supernodes.append(
            {
                "gid": gid,
                "members": ordered,
                "size": len(ordered),
                "top_terms": [
                    [t, w] for t, w in top_terms(state.corpus, ordered, WORD_CLOUD_TERMS)
                ],
            }
        )
    return {
        "v": 1,
        "level": lvl.depth,
        "supernodes": supernodes,
        "superedges": [[float(x) for x in row] for row in lvl.summary.superedges],
        "satisfaction": {"satisfied": satisfied, "total": total, "ratio": satisfied / total if total else 1.0},
        "f_prob": lvl.quality,
        "stale": state.stale(),
    }


def _train_worker(
    store: SessionStore,
    state: SessionState,
    fb: FeedbackGraphs,
    k: int,
    hyper: Hyperparameters,
    seed: int,
) -> None:
    with state.lock:
        state.training.status = "running"

    def on_progress(branch: str, stats) -> None:
        with state.lock:
            if state.training.cancel:
                raise _Cancelled()
            state.training.tail.append({"branch": branch, **stats.to_dict()})
            if stats.episode % PROGRESS_EVERY == 0:
                state.push(
                    "training_progress",
                    {"branch": branch, "episode": stats.episode, "terminal": stats.terminal},
                )

    try:
        hierarchy = hierarchical_summarize(state.graph, fb, k, hyper, seed, on_progress)
    except _Cancelled:
        with state.lock:
            state.training.status = "cancelled"
            state.push("training_progress", {"status": "cancelled"})
        return
    except Exception as exc:
        with state.lock:
            state.training.status = "failed"
            state.training.error = str(exc)
            state.push("training_progress", {"status": "failed", "error": str(exc)})
        return

    with state.lock:
        state.hierarchy = hierarchy
        state.trained_feedback = serialize_feedback(fb)
        state.layouts = {
            level: store._layout_for(state, level) for level in range(hierarchy.depth + 1)
        }
        store._persist_hierarchy(state)
        store._persist_layouts(state)
        checkpoints = state.directory / "checkpoints"
        checkpoints.mkdir(exist_ok=True)
        for branch, model in hierarchy.models.items():
            save_model(model, checkpoints / f"{branch.replace(':', '_')}.json")
        state.training.levels = [
            {"level": lvl.depth, "satisfied": lvl.satisfied, "total": lvl.total, "ratio": lvl.ratio}
            for lvl in hierarchy.levels
        ]
        state.training.status = "done"
        state.push("summary_updated", {"levels": hierarchy.depth + 1, "K": k})
        state.push("satisfaction", snapshot(state))
