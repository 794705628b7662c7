"""Command-line entry points: run one query, bench a dataset, sweep caps,
inspect the experience pool."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .backends import (
    RECORD,
    REPLAY,
    BackendSet,
    Cassette,
    CassetteChatBackend,
    HashingEmbedder,
    LiveChatBackend,
    LiveEmbedder,
    ScriptedChatBackend,
)
from .config import deserialize_config, serialize_config
from .defaults import default_config
from .errors import BackendFailure, PoolCorrupt, SchemaError, StatemorphError
from .harness import (
    MODES,
    HarnessSettings,
    content_address,
    run_bench,
    run_single,
    run_sweep,
    write_run_artifacts,
)
from .memory import ExperiencePool
from .report import load_dataset, render_table, write_bench_outputs, write_sweep_outputs
from .scenarios import SCENARIOS, load_scenario
from .tools import FixtureToolkit, LiveToolkit, ToolRegistry
from .validate import validate_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BAD_CONFIG = 2
EXIT_BACKEND = 3
EXIT_NO_ANSWER = 4


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="machine config JSON file")
    p.add_argument("--mode", choices=MODES, default="evofsm")
    p.add_argument("--max-iterations", type=int, default=3)
    p.add_argument("--max-states", type=int, default=10)
    p.add_argument("--max-steps", type=int, default=20)
    p.add_argument("--loop-threshold", type=int, default=3)
    p.add_argument("--pool", help="experience pool JSONL path")
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--sim-threshold", type=float, default=0.55)
    p.add_argument("--backend", choices=["live", "scripted", "replay", "record"], default=None)
    p.add_argument("--cassette", help="cassette JSONL for record/replay")
    p.add_argument("--scripts", help="scripted rules JSON file")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), help="built-in scripted scenario")
    p.add_argument("--fixtures", help="tool fixture corpus directory")
    p.add_argument("--judge", action="store_true", help="score with the judge backend instead of exact match")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-timestamps", action="store_true", help="omit timestamps for byte-stable outputs")


def _settings(args) -> HarnessSettings:
    return HarnessSettings(
        mode=args.mode,
        max_iterations=args.max_iterations,
        max_states=args.max_states,
        max_steps=args.max_steps,
        loop_threshold=args.loop_threshold,
        top_k=args.top_k,
        sim_threshold=args.sim_threshold,
        judge=args.judge,
        workers=args.workers,
        seed=args.seed,
        timestamps=not args.no_timestamps,
    )


def _resolve_scenario(args):
    return load_scenario(args.scenario) if args.scenario else None


def _resolve_config(args, scenario):
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        return deserialize_config(text)
    if scenario is not None:
        return scenario.config
    return default_config()


def _backend_factory(args, scenario):
    """Return a zero-argument factory so each worker owns fresh handles."""
    backend_kind = args.backend or ("scripted" if scenario is not None else "live")

    def tools_registry():
        if args.fixtures:
            return ToolRegistry(FixtureToolkit.from_dir(args.fixtures))
        if scenario is not None:
            return ToolRegistry(scenario.toolkit)
        return ToolRegistry(LiveToolkit())

    def chat_backend():
        if backend_kind == "scripted":
            if args.scripts:
                return ScriptedChatBackend.from_file(args.scripts)
            if scenario is not None:
                return ScriptedChatBackend(scenario.rules)
            raise BackendFailure("scripted backend needs --scripts or --scenario")
        if backend_kind == "replay":
            if not args.cassette:
                raise BackendFailure("replay needs --cassette")
            return CassetteChatBackend(Cassette(mode=REPLAY, path=args.cassette))
        if backend_kind == "record":
            if not args.cassette:
                raise BackendFailure("record needs --cassette")
            if args.scripts:
                inner = ScriptedChatBackend.from_file(args.scripts)
            elif scenario is not None:
                inner = ScriptedChatBackend(scenario.rules)
            else:
                inner = LiveChatBackend()
            return CassetteChatBackend(Cassette(mode=RECORD, path=args.cassette), inner=inner)
        return LiveChatBackend()

    def embedder():
        import os

        if backend_kind == "live" and os.environ.get("EMBED_BASE_URL"):
            return LiveEmbedder()
        return HashingEmbedder()

    def factory() -> BackendSet:
        return BackendSet(chat=chat_backend(), embedder=embedder(), tools=tools_registry())

    return factory


def cmd_run(args) -> int:
    scenario = _resolve_scenario(args)
    query = args.query or (scenario.query if scenario else None)
    if not query:
        print("error: provide --query or a --scenario with a built-in query", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = _resolve_config(args, scenario)
    except SchemaError as e:
        print(f"config does not parse: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    report = validate_config(config, max_states=args.max_states)
    if not report.ok:
        print("config invalid:", file=sys.stderr)
        for v in report.violations:
            print(f"  {v.code}: {v.detail}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    settings = _settings(args)
    pool = ExperiencePool(args.pool) if args.pool else None
    backends = _backend_factory(args, scenario)()
    try:
        result = run_single(query, config, backends, settings, pool=pool)
    except BackendFailure as e:
        print(f"backend failure: {e}", file=sys.stderr)
        return EXIT_BACKEND

    if args.out:
        out_dir = Path(args.out)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S") if settings.timestamps else content_address(config, query, settings.mode, settings.seed)
        out_dir = Path("runs") / f"run-{stamp}"
    write_run_artifacts(out_dir, result)
    print(f"run directory: {out_dir}")

    if result.trajectory.error and "Backend" in result.trajectory.error:
        print(f"backend failure: {result.trajectory.error}", file=sys.stderr)
        return EXIT_BACKEND
    if result.answer is None or not result.answer.strip():
        print(f"no answer produced (halted: {result.trajectory.halted_reason})", file=sys.stderr)
        return EXIT_NO_ANSWER
    print(result.answer)
    return EXIT_OK


def _resolve_items(args, scenario):
    if args.dataset:
        return load_dataset(args.dataset), args.dataset
    if scenario is not None and scenario.dataset:
        return scenario.dataset, scenario.name
    raise ValueError("provide --dataset or a --scenario with a dataset")


def cmd_bench(args) -> int:
    scenario = _resolve_scenario(args)
    try:
        items, dataset_name = _resolve_items(args, scenario)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    config = _resolve_config(args, scenario)
    report = validate_config(config, max_states=args.max_states)
    if not report.ok:
        print(f"config invalid: {report.summary()}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    settings = _settings(args)
    pool = ExperiencePool(args.pool) if args.pool else None
    bench_report = run_bench(
        items, config, _backend_factory(args, scenario), settings, pool=pool, dataset_name=dataset_name
    )
    print(render_table(bench_report))
    out_dir = Path(args.out) if args.out else Path("runs") / f"bench-{content_address(config, dataset_name, settings.mode, settings.seed)}"
    write_bench_outputs(bench_report, out_dir)
    print(f"report directory: {out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _resolve_scenario(args)
    try:
        items, dataset_name = _resolve_items(args, scenario)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    config = _resolve_config(args, scenario)
    caps = [int(c) for c in args.caps.split(",") if c.strip() != ""]
    settings = _settings(args)
    rows, reports = run_sweep(items, config, _backend_factory(args, scenario), settings, caps)
    from .report import sweep_csv

    print(sweep_csv(rows), end="")
    out_dir = Path(args.out) if args.out else Path("runs") / f"sweep-{content_address(config, dataset_name, 'sweep', settings.seed, args.caps)}"
    write_sweep_outputs(rows, reports, out_dir)
    print(f"sweep directory: {out_dir}")
    return EXIT_OK


def cmd_pool(args) -> int:
    path = Path(args.pool) if args.pool else None
    if path is None or not path.exists():
        print("error: --pool must point at an existing pool file", file=sys.stderr)
        return EXIT_USAGE
    try:
        pool = ExperiencePool(path)
    except PoolCorrupt as e:
        print(f"corrupt pool: line(s) {e.lines}", file=sys.stderr)
        return 2

    if args.pool_cmd == "stats":
        print(f"{len(pool.successes())} success / {len(pool.failures())} failure")
        for r in pool.records:
            ops = ", ".join(op.summary() for op in r.op_sequence) or "no ops"
            print(f"  {r.id} [{r.outcome.lower()}] {ops} :: {r.query_text[:60]}")
        if pool.truncated_tail_line is not None:
            print(f"note: dropped torn final line {pool.truncated_tail_line}")
        return EXIT_OK

    if args.pool_cmd == "show":
        record = next((r for r in pool.records if r.id == args.record_id), None)
        if record is None:
            print(f"no record {args.record_id!r}", file=sys.stderr)
            return EXIT_USAGE
        doc = record.to_dict()
        dim = len(doc["query_embedding"])
        doc["query_embedding"] = {"dim": dim, "head": doc["query_embedding"][:4]}
        print(json.dumps(doc, indent=2, ensure_ascii=False))
        return EXIT_OK

    # verify
    problems = pool.scan_problems()
    if pool.truncated_tail_line is not None:
        print(f"corrupt pool: line(s) [{pool.truncated_tail_line}]", file=sys.stderr)
        return 2
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return 1
    print(f"pool ok: {len(pool)} records")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statemorph", description="Self-revising FSM research agent harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="answer one query")
    p_run.add_argument("--query", help="the question to answer")
    _add_common_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_bench = sub.add_parser("bench", help="run a benchmark dataset")
    p_bench.add_argument("--dataset", help="JSONL with id/question/answer per line")
    _add_common_flags(p_bench)
    p_bench.set_defaults(fn=cmd_bench)

    p_sweep = sub.add_parser("sweep", help="accuracy vs evolution-iteration caps")
    p_sweep.add_argument("--dataset", help="JSONL with id/question/answer per line")
    p_sweep.add_argument("--caps", default="0,1,2,3", help="comma-separated caps")
    _add_common_flags(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_pool = sub.add_parser("pool", help="inspect the experience pool")
    pool_sub = p_pool.add_subparsers(dest="pool_cmd", required=True)
    for name in ("stats", "verify"):
        sp = pool_sub.add_parser(name)
        sp.add_argument("--pool", required=True)
    sp_show = pool_sub.add_parser("show")
    sp_show.add_argument("record_id")
    sp_show.add_argument("--pool", required=True)
    p_pool.set_defaults(fn=cmd_pool)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except StatemorphError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BACKEND if isinstance(e, BackendFailure) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
