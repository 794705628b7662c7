"""Mode runners and batch execution: the layer the CLI drives.

Modes:
- ``evofsm``  warm start from the pool, evolve under the critic, reflect back;
- ``static``  one run of the fixed machine, no critic loop, no memory;
- ``rewrite`` critic loop with whole-instruction rewriting, no topology ops;
- ``react``   a single looped reason-act agent with the same tools.

Only ``evofsm`` touches the experience pool. Per-item failures in a batch are
recorded on the item and never abort the batch.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .backends import BackendSet
from .config import FsmConfig, serialize_config
from .critic import Verdict, critique, reflect
from .engine import RunLimits, ToolLog, run
from .errors import BackendFailure, StatemorphError
from .evolve import EvolveLimits, EvolutionOutcome, apply_freeform_rewrite, evolve
from .memory import ExperiencePool, embed, retrieve_top_k, warm_start
from .ops import OpLogEntry, ops_to_jsonl
from .react import run_react
from .report import BenchmarkItem, ItemResult, RunReport, now_stamp
from .scoring import exact_match, judge_match
from .trajectory import TERMINAL, Trajectory

logger = logging.getLogger(__name__)

MODES = ("evofsm", "static", "rewrite", "react")


@dataclass
class HarnessSettings:
    mode: str = "evofsm"
    max_iterations: int = 3
    max_states: int = 10
    max_steps: int = 20
    loop_threshold: int = 3
    top_k: int = 3
    sim_threshold: float = 0.55
    judge: bool = False
    workers: int = 1
    seed: int = 0
    timestamps: bool = True

    def run_limits(self) -> RunLimits:
        return RunLimits(max_steps=self.max_steps, loop_threshold=self.loop_threshold)

    def evolve_limits(self) -> EvolveLimits:
        return EvolveLimits(max_iterations=self.max_iterations, max_states=self.max_states, run=self.run_limits())


@dataclass
class SingleRunResult:
    mode: str
    answer: str | None
    trajectory: Trajectory
    verdicts: list[Verdict] = field(default_factory=list)
    op_log: list[OpLogEntry] = field(default_factory=list)
    final_config: FsmConfig | None = None
    initial_config: FsmConfig | None = None
    iterations_used: int = 1
    succeeded: bool = False
    tool_log: ToolLog = field(default_factory=ToolLog)

    def op_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.op_log:
            counts[entry.op.kind] = counts.get(entry.op.kind, 0) + 1
        return counts


def run_single(
    query: str,
    config: FsmConfig,
    backends: BackendSet,
    settings: HarnessSettings,
    pool: ExperiencePool | None = None,
) -> SingleRunResult:
    if settings.mode == "evofsm":
        return _run_evofsm(query, config, backends, settings, pool)
    if settings.mode == "static":
        return _run_static(query, config, backends, settings)
    if settings.mode == "rewrite":
        return _run_rewrite(query, config, backends, settings)
    if settings.mode == "react":
        return _run_react_mode(query, backends, settings)
    raise ValueError(f"unknown mode {settings.mode!r}")


def _run_evofsm(
    query: str,
    config: FsmConfig,
    backends: BackendSet,
    settings: HarnessSettings,
    pool: ExperiencePool | None,
) -> SingleRunResult:
    m_init = warm_start(
        config,
        query,
        pool,
        backends.embedder,
        k=settings.top_k,
        sim_threshold=settings.sim_threshold,
        max_states=settings.max_states,
    )
    retrieved = []
    if pool is not None and len(pool):
        query_embedding = embed(query, backends.embedder)
        retrieved = [res.record for res in retrieve_top_k(pool, query_embedding, settings.top_k, "ALL")]
    tool_log = ToolLog()
    outcome: EvolutionOutcome = evolve(
        m_init, query, backends, limits=settings.evolve_limits(), retrieved=retrieved, tool_log=tool_log
    )
    if pool is not None:
        record = reflect(outcome, query, backends.embedder, backends.chat)
        pool.add(record)
    return SingleRunResult(
        mode="evofsm",
        answer=outcome.final_trajectory.final_answer,
        trajectory=outcome.final_trajectory,
        verdicts=outcome.verdicts,
        op_log=outcome.op_log,
        final_config=outcome.final_config,
        initial_config=m_init,
        iterations_used=outcome.iterations_used,
        succeeded=outcome.succeeded,
        tool_log=tool_log,
    )


def _run_static(query: str, config: FsmConfig, backends: BackendSet, settings: HarnessSettings) -> SingleRunResult:
    tool_log = ToolLog()
    trajectory = run(
        config, query, backends, limits=settings.run_limits(), tool_log=tool_log, max_states=settings.max_states
    )
    return SingleRunResult(
        mode="static",
        answer=trajectory.final_answer,
        trajectory=trajectory,
        final_config=config,
        initial_config=config,
        succeeded=trajectory.halted_reason == TERMINAL,
        tool_log=tool_log,
    )


def _run_rewrite(query: str, config: FsmConfig, backends: BackendSet, settings: HarnessSettings) -> SingleRunResult:
    current = config.clone()
    verdicts: list[Verdict] = []
    tool_log = ToolLog()
    trajectory = Trajectory(query=query)
    iterations = 0
    succeeded = False
    for iteration in range(1, settings.max_iterations + 1):
        iterations = iteration
        trajectory = run(
            current, query, backends, limits=settings.run_limits(), tool_log=tool_log, max_states=settings.max_states
        )
        verdict = critique(query, trajectory, backends.chat)
        verdicts.append(verdict)
        if verdict.passed:
            succeeded = True
            break
        if iteration == settings.max_iterations:
            break
        try:
            current = apply_freeform_rewrite(current, verdict, backends.chat, query=query)
        except BackendFailure as e:
            logger.warning("rewrite backend failed (%s); stopping", e)
            break
    return SingleRunResult(
        mode="rewrite",
        answer=trajectory.final_answer,
        trajectory=trajectory,
        verdicts=verdicts,
        final_config=current,
        initial_config=config,
        iterations_used=iterations,
        succeeded=succeeded,
        tool_log=tool_log,
    )


def _run_react_mode(query: str, backends: BackendSet, settings: HarnessSettings) -> SingleRunResult:
    trajectory = run_react(query, backends, max_steps=settings.max_steps)
    return SingleRunResult(
        mode="react",
        answer=trajectory.final_answer,
        trajectory=trajectory,
        succeeded=trajectory.halted_reason == TERMINAL,
    )


def score_item(item: BenchmarkItem, answer: str | None, settings: HarnessSettings, backends: BackendSet) -> bool:
    if settings.judge:
        return judge_match(item.question, item.gold_answer, answer, backends.chat)
    return exact_match(item.gold_answer, answer)


def _item_result(item: BenchmarkItem, result: SingleRunResult, correct: bool) -> ItemResult:
    return ItemResult(
        id=item.id,
        question=item.question,
        gold_answer=item.gold_answer,
        answer=result.answer,
        correct=correct,
        iterations_used=result.iterations_used,
        steps=len(result.trajectory.steps),
        halted_reason=result.trajectory.halted_reason,
        op_counts=result.op_counts(),
        verdicts=[{"passed": v.passed, "codes": v.codes()} for v in result.verdicts],
        initial_state_ids=[s.id for s in result.initial_config.states] if result.initial_config else [],
    )


def run_bench(
    items: list[BenchmarkItem],
    config: FsmConfig,
    backend_factory,
    settings: HarnessSettings,
    pool: ExperiencePool | None = None,
    dataset_name: str = "",
) -> RunReport:
    """Run every item under the mode; item failures become item records."""

    def one(item: BenchmarkItem) -> ItemResult:
        backends = backend_factory()
        try:
            result = run_single(item.question, config, backends, settings, pool=pool)
            correct = score_item(item, result.answer, settings, backends)
            return _item_result(item, result, correct)
        except StatemorphError as e:
            logger.warning("item %s failed: %s", item.id, e)
            return ItemResult(
                id=item.id,
                question=item.question,
                gold_answer=item.gold_answer,
                answer=None,
                correct=False,
                iterations_used=0,
                steps=0,
                halted_reason=None,
                error=f"{type(e).__name__}: {e}",
            )

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool_exec:
            results = list(pool_exec.map(one, items))
    else:
        results = [one(item) for item in items]
    return RunReport(
        mode=settings.mode,
        items=results,
        workers=settings.workers,
        dataset=dataset_name,
        created_at=now_stamp() if settings.timestamps else None,
    )


def run_sweep(
    items: list[BenchmarkItem],
    config: FsmConfig,
    backend_factory,
    settings: HarnessSettings,
    caps: list[int],
) -> tuple[list[dict], list[RunReport]]:
    """One bench per evolution cap. A cap is the number of repair rounds
    allowed: cap 0 means run-once, which is exactly the static behavior."""
    rows: list[dict] = []
    reports: list[RunReport] = []
    for cap in caps:
        cap_settings = HarnessSettings(**{**settings.__dict__, "mode": "evofsm", "max_iterations": cap + 1})
        report = run_bench(items, config, backend_factory, cap_settings, pool=None, dataset_name=f"cap{cap}")
        rows.append({"cap": cap, "accuracy": report.accuracy, "mean_ops": report.mean_ops})
        reports.append(report)
    return rows, reports


def content_address(config: FsmConfig, dataset_name: str, mode: str, seed: int, extra: str = "") -> str:
    blob = "|".join([config.structural_key(), dataset_name, mode, str(seed), extra])
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def write_run_artifacts(out_dir: str | Path, result: SingleRunResult) -> Path:
    """Persist one run: trajectory, verdicts, op log, final config, tool log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trajectory.json").write_text(
        json.dumps(result.trajectory.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (out_dir / "verdicts.json").write_text(
        json.dumps([v.to_dict() for v in result.verdicts], indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (out_dir / "oplog.jsonl").write_text(ops_to_jsonl(result.op_log), encoding="utf-8")
    if result.final_config is not None:
        (out_dir / "final_config.json").write_text(serialize_config(result.final_config), encoding="utf-8")
    with open(out_dir / "tools.jsonl", "w", encoding="utf-8") as f:
        for entry in result.tool_log.entries:
            f.write(json.dumps(entry, ensure_ascii=False) + "\n")
    if result.answer is not None:
        (out_dir / "answer.txt").write_text(result.answer + "\n", encoding="utf-8")
    return out_dir
