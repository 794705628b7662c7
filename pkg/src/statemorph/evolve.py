"""The critic-gated improvement loop over a machine config.

Each iteration runs the current machine, judges the result, and on failure
asks the proposer for 1-3 atomic ops, applying them in order and skipping
any the op layer rejects. The loop is capped; an iteration counts one
run-plus-critique cycle. When every proposed op of an iteration is rejected,
the proposer gets exactly one retry with the rejection reasons appended.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from . import prompts
from .backends import BackendSet, ChatRequest
from .config import DEFAULT_MAX_STATES, FsmConfig
from .critic import Verdict, critique
from .engine import RunLimits, ToolLog, run
from .errors import BackendFailure, NoValidProposal, OpRejected, SchemaError
from .memory import ExperienceRecord
from .ops import AtomicOp, OpLogEntry, apply_op
from .trajectory import Trajectory, digest_for_prompt

logger = logging.getLogger(__name__)

MAX_OPS_PER_ITERATION = 3

_JSON_BLOCK_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


@dataclass
class EvolveLimits:
    max_iterations: int = 3
    max_states: int = DEFAULT_MAX_STATES
    run: RunLimits = field(default_factory=RunLimits)


@dataclass
class EvolutionOutcome:
    final_config: FsmConfig
    final_trajectory: Trajectory
    verdicts: list[Verdict]
    op_log: list[OpLogEntry]
    iterations_used: int
    succeeded: bool

    def op_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.op_log:
            counts[entry.op.kind] = counts.get(entry.op.kind, 0) + 1
        return counts


def _render_config_compact(config: FsmConfig) -> str:
    lines = [f"initial: {config.initial_state}"]
    for s in config.states:
        marker = " (terminal)" if s.is_terminal else ""
        tools = ",".join(sorted(s.allowed_tools)) or "-"
        lines.append(f"state {s.id}{marker} tools[{tools}]: {s.instruction[:110]}")
    for t in config.transitions:
        cond = t.condition
        if cond.kind == "PREDICATE":
            guard = f"{cond.predicate}({', '.join(map(str, cond.args))})"
        elif cond.kind == "ROUTER_JUDGED":
            guard = f"router: {cond.guidance or ''}"
        else:
            guard = "always"
        lines.append(f"transition {t.id}: {t.from_state} -> {t.to_state} p{t.priority} [{guard}]")
    return "\n".join(lines)


def _render_warnings(config: FsmConfig) -> str:
    if not config.negative_constraints:
        return ""
    lines = ["\nKnown dead ends (do not recreate):"]
    for p in config.negative_constraints:
        if p.kind == "TRANSITION_EDGE":
            lines.append(f"- transition {p.payload[0]} -> {p.payload[1]}: {p.rationale}")
        else:
            lines.append(f"- tool {p.payload[1]} in state {p.payload[0]}: {p.rationale}")
    return "\n".join(lines) + "\n"


def _render_experience(retrieved: list[ExperienceRecord]) -> str:
    if not retrieved:
        return ""
    lines = ["\nLessons from similar past tasks:"]
    for r in retrieved:
        lines.append(f"- [{r.outcome.lower()}] {r.rationale[:180]}")
    return "\n".join(lines) + "\n"


def propose_ops(
    verdict: Verdict,
    config: FsmConfig,
    trajectory: Trajectory,
    retrieved: list[ExperienceRecord],
    proposer,
    feedback: str = "",
) -> list[AtomicOp]:
    """Ask the proposer for atomic ops and strictly parse its reply. Anything
    outside the op vocabulary is dropped; free-form rewrites never survive."""
    user = prompts.PROPOSER_USER.format(
        verdict=verdict.render(),
        config=_render_config_compact(config),
        digest=digest_for_prompt(trajectory),
        warnings=_render_warnings(config),
        experience=_render_experience(retrieved),
        feedback=f"\nPrevious proposal was rejected: {feedback}\n" if feedback else "",
    )
    reply = proposer.chat(
        ChatRequest(
            role="proposer",
            messages=[
                {"role": "system", "content": prompts.PROPOSER_SYSTEM},
                {"role": "user", "content": user},
            ],
        )
    )
    match = _JSON_BLOCK_RE.search(reply.text)
    if not match:
        raise NoValidProposal("proposer reply carried no fenced JSON block")
    try:
        doc = json.loads(match.group(1))
    except json.JSONDecodeError as e:
        raise NoValidProposal(f"proposer JSON does not parse: {e}") from e
    if not isinstance(doc, list):
        raise NoValidProposal("proposer JSON is not an array of ops")
    if len(doc) > MAX_OPS_PER_ITERATION:
        logger.warning("proposer sent %d ops; keeping first %d", len(doc), MAX_OPS_PER_ITERATION)
        doc = doc[:MAX_OPS_PER_ITERATION]
    ops: list[AtomicOp] = []
    for i, entry in enumerate(doc):
        try:
            ops.append(AtomicOp.from_dict(entry, f"$[{i}]"))
        except SchemaError as e:
            logger.warning("dropping malformed proposed op: %s", e)
    if not ops:
        raise NoValidProposal("no proposed op survived schema validation")
    return ops


def evolve(
    initial_config: FsmConfig,
    query: str,
    backends: BackendSet,
    limits: EvolveLimits | None = None,
    retrieved: list[ExperienceRecord] | None = None,
    tool_log: ToolLog | None = None,
) -> EvolutionOutcome:
    """Run/critique/repair until the critic passes or the iteration cap hits.

    The returned config and trajectory are those of the first passing
    iteration, else the last one; the op log is always complete."""
    limits = limits or EvolveLimits()
    retrieved = retrieved or []
    config = initial_config
    verdicts: list[Verdict] = []
    op_log: list[OpLogEntry] = []
    trajectory = Trajectory(query=query)

    for iteration in range(1, limits.max_iterations + 1):
        trajectory = run(config, query, backends, limits=limits.run, tool_log=tool_log, max_states=limits.max_states)
        verdict = critique(query, trajectory, backends.chat)
        verdicts.append(verdict)
        if verdict.passed:
            return EvolutionOutcome(config, trajectory, verdicts, op_log, iteration, True)
        if iteration == limits.max_iterations:
            break
        try:
            proposed = propose_ops(verdict, config, trajectory, retrieved, backends.chat)
        except NoValidProposal as e:
            logger.warning("iteration %d: %s; stopping with best-so-far config", iteration, e)
            return EvolutionOutcome(config, trajectory, verdicts, op_log, iteration, False)
        config, applied, rejections = _apply_proposed(config, proposed, iteration, op_log, limits.max_states)
        if not applied and rejections:
            # One retry with the rejection reasons in view, then give up.
            try:
                retry = propose_ops(
                    verdict, config, trajectory, retrieved, backends.chat, feedback="; ".join(rejections)
                )
                config, applied, _ = _apply_proposed(config, retry, iteration, op_log, limits.max_states)
            except NoValidProposal:
                pass
        if not applied:
            logger.info("iteration %d applied no ops; re-running unchanged machine", iteration)

    return EvolutionOutcome(config, trajectory, verdicts, op_log, limits.max_iterations, False)


def _apply_proposed(
    config: FsmConfig,
    proposed: list[AtomicOp],
    iteration: int,
    op_log: list[OpLogEntry],
    max_states: int,
) -> tuple[FsmConfig, bool, list[str]]:
    applied = False
    rejections: list[str] = []
    for op in proposed:
        try:
            new_config, inverse = apply_op(config, op, max_states=max_states)
        except OpRejected as e:
            logger.warning("iteration %d: %s rejected (%s)", iteration, op.summary(), e)
            rejections.append(f"{op.summary()}: {e}")
            continue
        op_log.append(
            OpLogEntry(
                iteration=iteration,
                op=op,
                inverse=inverse,
                pre_version=config.version,
                post_version=new_config.version,
            )
        )
        config = new_config
        applied = True
    return config, applied, rejections


def apply_freeform_rewrite(config: FsmConfig, verdict: Verdict, rewriter, query: str = "") -> FsmConfig:
    """Baseline-only: replace state instructions wholesale from one backend
    reply, topology untouched. Exists for the unstructured-evolution
    comparison and is never used by the structured loop."""
    instructions = "\n".join(f"[{s.id}] {s.instruction}" for s in config.states)
    user = prompts.REWRITER_USER.format(verdict=verdict.render(), query=query, instructions=instructions)
    reply = rewriter.chat(
        ChatRequest(
            role="rewriter",
            messages=[
                {"role": "system", "content": prompts.REWRITER_SYSTEM},
                {"role": "user", "content": user},
            ],
        )
    )
    if not reply.text.strip():
        raise BackendFailure("rewriter returned an empty reply")
    match = _JSON_BLOCK_RE.search(reply.text)
    if not match:
        raise BackendFailure("rewriter reply carried no fenced JSON object")
    try:
        doc = json.loads(match.group(1))
    except json.JSONDecodeError as e:
        raise BackendFailure(f"rewriter JSON does not parse: {e}") from e
    if not isinstance(doc, dict):
        raise BackendFailure("rewriter JSON is not an object")
    after = config.clone()
    for state_id, text in doc.items():
        state = after.state(str(state_id))
        if state is None:
            logger.warning("rewriter named unknown state %r; ignoring", state_id)
            continue
        state.instruction = str(text)
    after.version = config.version + 1
    return after
