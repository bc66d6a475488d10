"""Batch entry points.

Subcommands compose the library: build graphs, train hierarchies, emit
summaries/layouts/plot data, run the simulated-feedback protocol, and serve
the HTTP API. Every run echoes its resolved configuration next to its
outputs so results can be reproduced byte-for-byte.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation
from .corpus import load_corpus, write_jsonl
from .feedback import serialize_feedback
from .layout import ForceConfig, two_step_layout, write_layout
from .netgraph import build_document_graph, write_edgelist
from .qlearn import Hyperparameters
from .summarizer import hierarchical_summarize, hierarchy_from_dict, select_best_level, write_hierarchy

HYPER_FLAGS = {
    "episodes": int,
    "gamma": float,
    "hidden": int,
    "learning_rate": float,
    "momentum": float,
    "step_cap": int,
    "epsilon_start": float,
    "epsilon_end": float,
    "epsilon_decay_frac": float,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # uniform runtime error contract
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netsumm", description="document-network summarization toolkit"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON config; explicit flags win")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("build-graph", help="build the similarity graph for a corpus")
    common(p)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--format", choices=["jsonl", "plain-dir"])
    p.set_defaults(func=_cmd_build_graph)

    p = sub.add_parser("train", help="train a hierarchical summary for a corpus")
    common(p)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--format", choices=["jsonl", "plain-dir"])
    p.add_argument("--k", type=int, help="target super-node count (power of two)")
    p.add_argument("--feedback", type=Path, help="event-log jsonl to replay before training")
    for flag, cast in HYPER_FLAGS.items():
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=cast)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("summarize", help="emit one level of a trained hierarchy")
    common(p)
    p.add_argument("--hierarchy", type=Path)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--format", choices=["jsonl", "plain-dir"])
    p.add_argument("--level", help='level index or "best"')
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("layout", help="two-step layout for one hierarchy level")
    common(p)
    p.add_argument("--hierarchy", type=Path)
    p.add_argument("--corpus", type=Path)
    p.add_argument("--format", choices=["jsonl", "plain-dir"])
    p.add_argument("--level", type=int)
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=_cmd_layout)

    def experiment_flags(p):
        p.add_argument("--methods")
        p.add_argument("--k-values", dest="k_values")
        p.add_argument("--seeds")
        p.add_argument("--p-pos", dest="p_pos", type=float)
        p.add_argument("--p-neg", dest="p_neg", type=float)
        p.add_argument("--n-relevant", dest="n_relevant", type=int)
        p.add_argument("--n-irrelevant", dest="n_irrelevant", type=int)
        p.add_argument("--n-topics", dest="n_topics", type=int)
        for flag, cast in HYPER_FLAGS.items():
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=cast)

    p = sub.add_parser("evaluate", help="run the experiment grid")
    common(p)
    experiment_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="synthetic corpus + sampled feedback protocol")
    common(p)
    experiment_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="run the session HTTP API")
    common(p)
    p.add_argument("--root", type=Path, help="session storage directory")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int)
    p.set_defaults(func=_cmd_serve)

    return parser


class _Resolver:
    """Layered parameter lookup: explicit flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = {}
        if getattr(args, "config", None):
            self.config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        self.resolved: dict = {"subcommand": args.subcommand}

    def get(self, name: str, default=None, required: bool = False):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.config.get(name, default)
        if value is None and required:
            raise ValueError(f"missing required parameter: --{name.replace('_', '-')}")
        if isinstance(value, Path):
            value = str(value)
        self.resolved[name] = value
        return value

    def hyper(self) -> Hyperparameters:
        base = Hyperparameters()
        overrides = {}
        for flag in HYPER_FLAGS:
            value = getattr(self.args, flag, None)
            if value is None:
                value = self.config.get(flag)
            if value is not None:
                overrides[flag] = value
        self.resolved.update({k: v for k, v in overrides.items()})
        return Hyperparameters(**{**base.to_dict(), **overrides}) if overrides else base

    def echo(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "run_config.json").write_text(
            json.dumps(self.resolved, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def _int_list(raw, default):
    if raw is None:
        return tuple(default)
    if isinstance(raw, (list, tuple)):
        return tuple(int(x) for x in raw)
    return tuple(int(x) for x in str(raw).split(","))


def _str_list(raw, default):
    if raw is None:
        return tuple(default)
    if isinstance(raw, (list, tuple)):
        return tuple(raw)
    return tuple(s.strip() for s in str(raw).split(",") if s.strip())


def _load(resolver: _Resolver):
    path = resolver.get("corpus", required=True)
    fmt = resolver.get("format", "jsonl")
    return load_corpus(path, fmt)


def _cmd_build_graph(args) -> int:
    r = _Resolver(args)
    corpus = _load(r)
    out = Path(r.get("out", "out/build-graph"))
    graph = build_document_graph(corpus)
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(graph, out / "graph.edges")
    r.echo(out)
    print(f"graph: {graph.n} nodes -> {out / 'graph.edges'}")
    return 0


def _cmd_train(args) -> int:
    r = _Resolver(args)
    corpus = _load(r)
    k = int(r.get("k", required=True))
    seed = int(r.get("seed", 0))
    feedback_log = r.get("feedback")
    hyper = r.hyper()
    out = Path(r.get("out", "out/train"))

    from .feedback import FeedbackGraphs, replay_log

    fb = FeedbackGraphs()
    if feedback_log:
        fb, _ = replay_log(feedback_log)
    graph = build_document_graph(corpus)
    hierarchy = hierarchical_summarize(graph, fb, k, hyper, seed)
    out.mkdir(parents=True, exist_ok=True)
    write_hierarchy(hierarchy, out / "hierarchy.json")
    (out / "feedback.json").write_text(serialize_feedback(fb) + "\n", encoding="utf-8")
    r.echo(out)
    best = select_best_level(hierarchy)
    print(
        f"hierarchy: depth {hierarchy.depth}, best level {best}, "
        f"ratio {hierarchy.levels[best].ratio:.3f} -> {out / 'hierarchy.json'}"
    )
    return 0


def _load_hierarchy(resolver: _Resolver):
    corpus = _load(resolver)
    graph = build_document_graph(corpus)
    hierarchy_path = resolver.get("hierarchy", required=True)
    obj = json.loads(Path(hierarchy_path).read_text(encoding="utf-8"))
    return corpus, graph, hierarchy_from_dict(obj, graph.ids, graph)


def _cmd_summarize(args) -> int:
    r = _Resolver(args)
    corpus, graph, hierarchy = _load_hierarchy(r)
    raw_level = r.get("level", "best")
    level = select_best_level(hierarchy) if raw_level == "best" else int(raw_level)
    lvl = hierarchy.level(level)
    out = Path(r.get("out", "out/summarize"))
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "v": 1,
        "level": level,
        "supernodes": [sorted(s) for s in lvl.summary.supernodes],
        "superedges": [[float(x) for x in row] for row in lvl.summary.superedges],
        "satisfaction": {"satisfied": lvl.satisfied, "total": lvl.total, "ratio": lvl.ratio},
        "f_prob": lvl.quality,
    }
    (out / "summary.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    r.echo(out)
    print(f"summary: level {level}, {lvl.summary.k} super-nodes -> {out / 'summary.json'}")
    return 0


def _cmd_layout(args) -> int:
    r = _Resolver(args)
    corpus, graph, hierarchy = _load_hierarchy(r)
    level = r.get("level")
    if level is None:
        raise ValueError("missing required parameter: --level")
    lvl = hierarchy.level(int(level))  # raises "unknown level" past the depth
    seed = int(r.get("seed", 0))
    iterations = r.get("iterations", 300)
    config = ForceConfig(iterations=int(iterations), seed=seed)
    result = two_step_layout(graph, lvl.assignment, lvl.summary, config)
    out = Path(r.get("out", "out/layout"))
    out.mkdir(parents=True, exist_ok=True)
    write_layout(result, out / "layout.json")
    r.echo(out)
    print(f"layout: level {int(level)}, {len(result.positions)} documents -> {out / 'layout.json'}")
    return 0


def _experiment_config(r: _Resolver, default_k=(2, 4, 8, 16), default_methods=evaluation.METHODS):
    return evaluation.ExperimentConfig(
        methods=_str_list(r.get("methods"), default_methods),
        k_values=_int_list(r.get("k_values"), default_k),
        seeds=_int_list(r.get("seeds"), (int(r.get("seed", 0)),)),
        p_pos=float(r.get("p_pos", 0.10)),
        p_neg=float(r.get("p_neg", 0.01)),
        n_relevant=int(r.get("n_relevant", 10)),
        n_irrelevant=int(r.get("n_irrelevant", 20)),
        n_topics=int(r.get("n_topics", 2)),
        hyper=r.hyper(),
    )


def _cmd_evaluate(args) -> int:
    r = _Resolver(args)
    config = _experiment_config(r)
    out = Path(r.get("out", "out/evaluate"))
    report = evaluation.run_experiment(config)
    json_path, csv_path = evaluation.write_report(report, out)
    evaluation.write_plot_data(report, out)
    r.echo(out)
    print(f"report: {len(report.rows)} rows -> {json_path}, {csv_path}")
    if report.failures:
        print(f"failures: {len(report.failures)} (see report.json)", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    """Simulated-analyst protocol: synthetic corpus, sampled feedback at the
    default positive/negative percentages, hierarchies for each K."""
    r = _Resolver(args)
    config = _experiment_config(r)
    seed = config.seeds[0]
    out = Path(r.get("out", "out/simulate"))
    out.mkdir(parents=True, exist_ok=True)

    corpus_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    corpus, truth = evaluation.generate_synthetic_corpus(
        config.n_relevant, config.n_irrelevant, config.n_topics, config.synthetic, corpus_rng
    )
    write_jsonl(corpus, out / "corpus.jsonl")
    fb = evaluation.sample_feasible_feedback(truth, corpus.ids, config.p_pos, config.p_neg, seed)
    (out / "feedback.json").write_text(serialize_feedback(fb) + "\n", encoding="utf-8")

    report = evaluation.run_experiment(config)
    json_path, csv_path = evaluation.write_report(report, out)
    evaluation.write_plot_data(report, out)
    r.echo(out)
    for row in report.rows:
        print(
            f"{row.method} K={row.k}: satisfied={row.satisfied_ratio:.2f} rho={row.rho:.3f}"
        )
    print(f"report -> {json_path}")
    return 0


def _cmd_serve(args) -> int:
    r = _Resolver(args)
    root = Path(r.get("root", "sessions"))
    host = r.get("host", "127.0.0.1")
    port = int(r.get("port", 8787))
    import uvicorn

    from .service import create_app

    app = create_app(root)
    uvicorn.run(app, host=host, port=port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
