"""Execution engine: route between states, execute one state, run a machine.

A step is two-phase: the agent first replies (possibly requesting tools),
requested tools run, and if any ran the agent replies once more with the
observations in view. That second reply becomes the step's output, so a
reading state can quote page content within its own step.

Full tool payloads go to a side log; the trajectory keeps digests only.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from . import predicates, prompts
from .backends import BackendSet, ChatRequest
from .config import ALWAYS, PREDICATE, ROUTER_JUDGED, FsmConfig, TransitionRule
from .errors import (
    BackendFailure,
    ConfigInvalid,
    NoTransitionFired,
    RouterParseError,
    StatemorphError,
)
from .tools import ToolRegistry
from .trajectory import (
    ERROR,
    LOOP_DETECTED,
    STEP_CAP,
    TERMINAL,
    StepRecord,
    ToolCall,
    Trajectory,
    output_digest,
)
from .validate import validate_config

logger = logging.getLogger(__name__)

CONTEXT_STEPS = 6
TOOL_OUTPUT_CHARS = 4000
AGENT_OUTPUT_CHARS = 2000
MAX_TOOL_CALLS = 3

_TOOL_BLOCK_RE = re.compile(r"```tool\s*\n(.*?)```", re.DOTALL)


@dataclass
class RunLimits:
    max_steps: int = 20
    loop_threshold: int = 3


@dataclass
class ToolLog:
    """Side log of full tool payloads, keyed by step index."""

    entries: list[dict] = field(default_factory=list)

    def add(self, step_index: int, tool: str, input_text: str, output: str) -> None:
        self.entries.append({"step": step_index, "tool": tool, "input": input_text, "output": output})

    def outputs_for(self, step_index: int) -> list[dict]:
        return [e for e in self.entries if e["step"] == step_index]


def parse_tool_requests(text: str) -> list[tuple[str, str] | None]:
    """Extract tool requests from fenced blocks; None marks an unparseable block."""
    requests: list[tuple[str, str] | None] = []
    for block in _TOOL_BLOCK_RE.findall(text):
        try:
            doc = json.loads(block)
            requests.append((str(doc["tool"]), str(doc["input"])))
        except (json.JSONDecodeError, KeyError, TypeError):
            requests.append(None)
    return requests


def render_context(trajectory: Trajectory, tool_log: ToolLog | None) -> str:
    """Last few steps with agent outputs and (bounded) tool outputs."""
    window = trajectory.steps[-CONTEXT_STEPS:]
    if not window:
        return "(no steps yet)"
    lines = []
    for step in window:
        lines.append(f"- step {step.index} [{step.state_id}]: {step.agent_output[:AGENT_OUTPUT_CHARS]}")
        full = {(e["tool"], e["input"]): e["output"] for e in (tool_log.outputs_for(step.index) if tool_log else [])}
        for call in step.tool_calls:
            if call.status != "ok":
                lines.append(f"  {call.tool}({call.input}) -> {call.status}: {call.detail}")
                continue
            output = full.get((call.tool, call.input), call.preview)
            lines.append(f"  {call.tool}({call.input}) ->\n{output[:TOOL_OUTPUT_CHARS]}")
    return "\n".join(lines)


def execute_state(
    config: FsmConfig,
    state_id: str,
    trajectory: Trajectory,
    agent,
    tools: ToolRegistry | None,
    tool_log: ToolLog | None = None,
    max_tool_calls: int = MAX_TOOL_CALLS,
) -> StepRecord:
    """Run one state: prompt the agent, execute permitted tool requests,
    gather the agent's post-observation reply, and append the step."""
    state = config.state(state_id)
    if state is None:
        raise StatemorphError(f"unknown state {state_id!r}")
    step = StepRecord(index=len(trajectory.steps), state_id=state_id)

    system = prompts.AGENT_SYSTEM.format(
        instruction=state.instruction,
        tools=", ".join(sorted(state.allowed_tools)) or "none",
        tool_syntax=prompts.TOOL_SYNTAX,
        max_tool_calls=max_tool_calls,
    )
    user = prompts.AGENT_USER.format(
        state_id=state.id,
        state_name=state.name or state.id,
        query=trajectory.query,
        context=render_context(trajectory, tool_log),
    )
    messages = [{"role": "system", "content": system}, {"role": "user", "content": user}]
    first = agent.chat(ChatRequest(role="agent", messages=messages))
    step.agent_output = first.text

    requests = parse_tool_requests(first.text)
    if len(requests) > max_tool_calls:
        logger.warning("state %s requested %d tools; keeping first %d", state_id, len(requests), max_tool_calls)
        requests = requests[:max_tool_calls]

    observations: list[str] = []
    forbidden = config.forbidden_tools(state_id)
    for request in requests:
        if request is None:
            step.tool_calls.append(ToolCall(tool="?", input="", status="error", detail="unparseable tool block"))
            continue
        name, input_text = request
        if tools is None or not tools.known(name):
            step.tool_calls.append(ToolCall(tool=name, input=input_text, status="refused", detail="unknown tool"))
            continue
        if name not in state.allowed_tools:
            step.tool_calls.append(
                ToolCall(tool=name, input=input_text, status="refused", detail="not in allowed_tools")
            )
            continue
        if name in forbidden:
            logger.warning("tool %s blocked in state %s by memory constraint", name, state_id)
            step.tool_calls.append(
                ToolCall(tool=name, input=input_text, status="refused", detail="forbidden by memory constraint")
            )
            continue
        try:
            output = tools.run(name, input_text)
        except BackendFailure as e:
            raise
        except StatemorphError as e:
            step.tool_calls.append(ToolCall(tool=name, input=input_text, status="error", detail=str(e)[:200]))
            continue
        step.tool_calls.append(ToolCall.ok(name, input_text, output))
        if tool_log is not None:
            tool_log.add(step.index, name, input_text, output)
        observations.append(f"[{name}] input: {input_text}\n{output[:TOOL_OUTPUT_CHARS]}")

    if observations:
        follow_up = messages + [
            {"role": "assistant", "content": first.text},
            {"role": "user", "content": prompts.AGENT_OBSERVE.format(results="\n\n".join(observations))},
        ]
        second = agent.chat(ChatRequest(role="agent", messages=follow_up))
        step.agent_output = second.text

    trajectory.append(step)
    return step


def _predicate_holds(rule: TransitionRule, trajectory: Trajectory) -> bool:
    try:
        return predicates.evaluate(rule.condition.predicate, rule.condition.args, trajectory)
    except (ValueError, KeyError) as e:
        logger.warning("predicate on %s failed: %s", rule.id, e)
        return False


def _resolve_router_group(
    group: list[TransitionRule], config: FsmConfig, trajectory: Trajectory, router
) -> TransitionRule:
    candidates = []
    for rule in group:
        target = config.state(rule.to_state)
        name = target.name if target else rule.to_state
        candidates.append(f"- {rule.to_state} ({name}): {rule.condition.guidance or ''}")
    user = prompts.ROUTER_USER.format(
        query=trajectory.query,
        context=render_context(trajectory, None),
        candidates="\n".join(candidates),
    )
    reply = router.chat(ChatRequest(role="router", messages=[{"role": "user", "content": user}]))
    for rule in group:  # group is already in (priority, id) order
        target = config.state(rule.to_state)
        tokens = [rule.to_state] + ([target.name] if target and target.name else [])
        for token in tokens:
            if token and re.search(rf"\b{re.escape(token)}\b", reply.text, re.IGNORECASE):
                return rule
    raise RouterParseError(f"router reply named no candidate: {reply.text[:120]!r}")


def route(config: FsmConfig, current: str, trajectory: Trajectory, router) -> TransitionRule:
    """Pick the transition out of `current`: ascending priority, id as the
    tie-break; forbidden edges are skipped; router-judged guards resolve as a
    group with one backend call."""
    ordered = sorted(config.outgoing(current), key=lambda t: (t.priority, t.id))
    forbidden = config.forbidden_edges()
    usable: list[TransitionRule] = []
    for rule in ordered:
        if (rule.from_state, rule.to_state) in forbidden:
            logger.warning("transition %s (%s->%s) skipped: forbidden by memory", rule.id, rule.from_state, rule.to_state)
            continue
        usable.append(rule)

    router_group = [t for t in usable if t.condition.kind == ROUTER_JUDGED]
    for rule in usable:
        if rule.condition.kind == ALWAYS:
            return rule
        if rule.condition.kind == PREDICATE:
            if _predicate_holds(rule, trajectory):
                return rule
            continue
        if rule.condition.kind == ROUTER_JUDGED:
            try:
                return _resolve_router_group(router_group, config, trajectory, router)
            except RouterParseError:
                always = [t for t in usable if t.condition.kind == ALWAYS]
                if always:
                    return always[0]
                raise
    raise NoTransitionFired(f"no transition fired from state {current!r}")


def run(
    config: FsmConfig,
    query: str,
    backends: BackendSet,
    limits: RunLimits | None = None,
    tool_log: ToolLog | None = None,
    max_states: int | None = None,
) -> Trajectory:
    """Alternate execute/route from the initial state until the machine halts."""
    report = validate_config(config, **({"max_states": max_states} if max_states else {}))
    if not report.ok:
        raise ConfigInvalid(report)
    limits = limits or RunLimits()
    tool_log = tool_log if tool_log is not None else ToolLog()
    trajectory = Trajectory(query=query)
    current = config.initial_state
    try:
        while True:
            if len(trajectory.steps) >= limits.max_steps:
                trajectory.halted_reason = STEP_CAP
                break
            step = execute_state(config, current, trajectory, backends.chat, backends.tools, tool_log)
            state = config.state(current)
            if state.is_terminal:
                trajectory.final_answer = step.agent_output
                trajectory.halted_reason = TERMINAL
                break
            if trajectory.visit_counts[current] > limits.loop_threshold:
                trajectory.halted_reason = LOOP_DETECTED
                break
            chosen = route(config, current, trajectory, backends.chat)
            step.chosen_transition = chosen.id
            current = chosen.to_state
    except StatemorphError as e:
        trajectory.halted_reason = ERROR
        trajectory.error = f"{type(e).__name__}: {e}"
    return trajectory
