"""Runtime record of one machine execution: steps, visits, halt reason."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

# Halt reasons.
TERMINAL = "TERMINAL"
STEP_CAP = "STEP_CAP"
LOOP_DETECTED = "LOOP_DETECTED"
ERROR = "ERROR"

PREVIEW_CHARS = 200


def output_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class ToolCall:
    """One tool request within a step; output kept as digest + short preview."""

    tool: str
    input: str
    status: str = "ok"  # ok | refused | error
    digest: str = ""
    preview: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "input": self.input,
            "status": self.status,
            "digest": self.digest,
            "preview": self.preview,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ToolCall":
        return cls(
            tool=doc.get("tool", ""),
            input=doc.get("input", ""),
            status=doc.get("status", "ok"),
            digest=doc.get("digest", ""),
            preview=doc.get("preview", ""),
            detail=doc.get("detail", ""),
        )

    @classmethod
    def ok(cls, tool: str, input_text: str, output: str) -> "ToolCall":
        return cls(
            tool=tool,
            input=input_text,
            status="ok",
            digest=output_digest(output),
            preview=output[:PREVIEW_CHARS],
        )


@dataclass
class StepRecord:
    """One state execution: the agent's reply plus any tool activity."""

    index: int
    state_id: str
    agent_output: str = ""
    tool_calls: list[ToolCall] = field(default_factory=list)
    chosen_transition: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "state_id": self.state_id,
            "agent_output": self.agent_output,
            "tool_calls": [c.to_dict() for c in self.tool_calls],
            "chosen_transition": self.chosen_transition,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StepRecord":
        return cls(
            index=doc["index"],
            state_id=doc["state_id"],
            agent_output=doc.get("agent_output", ""),
            tool_calls=[ToolCall.from_dict(c) for c in doc.get("tool_calls", [])],
            chosen_transition=doc.get("chosen_transition"),
        )


@dataclass
class Trajectory:
    """Materialized run history for one query."""

    query: str
    steps: list[StepRecord] = field(default_factory=list)
    visit_counts: dict[str, int] = field(default_factory=dict)
    final_answer: str | None = None
    halted_reason: str | None = None
    error: str | None = None

    def append(self, step: StepRecord) -> None:
        self.steps.append(step)
        self.visit_counts[step.state_id] = self.visit_counts.get(step.state_id, 0) + 1

    def state_sequence(self) -> list[str]:
        return [s.state_id for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "halted_reason": self.halted_reason,
            "final_answer": self.final_answer,
            "error": self.error,
            "visit_counts": {k: self.visit_counts[k] for k in sorted(self.visit_counts)},
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Trajectory":
        traj = cls(
            query=doc.get("query", ""),
            final_answer=doc.get("final_answer"),
            halted_reason=doc.get("halted_reason"),
            error=doc.get("error"),
        )
        for s in doc.get("steps", []):
            traj.append(StepRecord.from_dict(s))
        return traj


def repeated_edges(trajectory: Trajectory) -> list[tuple[str, str]]:
    """Consecutive state pairs traversed more than once, in first-seen order."""
    counts: dict[tuple[str, str], int] = {}
    order: list[tuple[str, str]] = []
    seq = trajectory.state_sequence()
    for a, b in zip(seq, seq[1:]):
        pair = (a, b)
        if pair not in counts:
            order.append(pair)
        counts[pair] = counts.get(pair, 0) + 1
    return [pair for pair in order if counts[pair] >= 2]


def digest_for_prompt(trajectory: Trajectory, max_chars: int = 1500) -> str:
    """Compact one-string rendering used in critic/proposer prompts."""
    lines = [f"query: {trajectory.query}"]
    lines.append("state sequence: " + " -> ".join(trajectory.state_sequence()))
    for step in trajectory.steps:
        for call in step.tool_calls:
            lines.append(f"  [{step.state_id}] {call.tool}({call.input[:80]}) {call.status}: {call.preview[:120]}")
    lines.append(f"halted: {trajectory.halted_reason}")
    if trajectory.final_answer is not None:
        lines.append(f"final answer: {trajectory.final_answer[:400]}")
    text = "\n".join(lines)
    return text[:max_chars]
