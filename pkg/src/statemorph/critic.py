"""Judging runs and distilling finished episodes into experience records.

Mechanical checks come first and are decisive: a run that looped, hit the
step cap, or produced no answer fails regardless of what a model would say,
and costs no backend call. Only clean terminal runs are sent to the critic
backend. The critic never sees gold answers; scoring is the harness's job.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from . import prompts
from .backends import ChatRequest
from .errors import BackendFailure, CriticParseError
from .memory import FAILURE, SUCCESS, ExperienceRecord, embed
from .config import ForbiddenPattern
from .trajectory import LOOP_DETECTED, STEP_CAP, Trajectory, digest_for_prompt, repeated_edges

logger = logging.getLogger(__name__)

# Failure-mode codes (closed set).
QUANT_EVIDENCE_MISSING = "QUANT_EVIDENCE_MISSING"
LOGICAL_INCONSISTENCY = "LOGICAL_INCONSISTENCY"
HALLUCINATION = "HALLUCINATION"
INCOMPLETE_REASONING = "INCOMPLETE_REASONING"
LOOP = "LOOP"
SOURCE_QUALITY = "SOURCE_QUALITY"

FAILURE_CODES = (
    QUANT_EVIDENCE_MISSING,
    LOGICAL_INCONSISTENCY,
    HALLUCINATION,
    INCOMPLETE_REASONING,
    LOOP,
    SOURCE_QUALITY,
)

# Mechanical flags.
FLAG_LOOP = "LOOP_DETECTED"
FLAG_STEP_CAP = "STEP_CAP"
FLAG_EMPTY = "EMPTY_ANSWER"

_JSON_BLOCK_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


@dataclass
class FailureTag:
    code: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"code": self.code, "detail": self.detail}


@dataclass
class Verdict:
    passed: bool
    failure_modes: list[FailureTag] = field(default_factory=list)
    rationale: str = ""
    mechanical_flags: set[str] = field(default_factory=set)

    def codes(self) -> list[str]:
        return [t.code for t in self.failure_modes]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failure_modes": [t.to_dict() for t in self.failure_modes],
            "rationale": self.rationale,
            "mechanical_flags": sorted(self.mechanical_flags),
        }

    def render(self) -> str:
        if self.passed:
            return "passed"
        parts = [f"{t.code}: {t.detail}" for t in self.failure_modes] or ["failed"]
        flags = f" flags={sorted(self.mechanical_flags)}" if self.mechanical_flags else ""
        return "; ".join(parts) + flags + (f" | {self.rationale}" if self.rationale else "")


def _coerce_tag(entry) -> FailureTag:
    if isinstance(entry, dict):
        code = str(entry.get("code", "")).upper()
        detail = str(entry.get("detail", ""))
    else:
        code = str(entry).upper()
        detail = ""
    if code not in FAILURE_CODES:
        # Unknown labels collapse to incomplete reasoning but keep their text.
        detail = f"{code}: {detail}".strip(": ")
        code = INCOMPLETE_REASONING
    return FailureTag(code=code, detail=detail)


def _parse_critic_reply(text: str) -> Verdict:
    if re.match(r"\s*PASS\b", text):
        return Verdict(passed=True, rationale=text.strip())
    match = _JSON_BLOCK_RE.search(text)
    if not match:
        raise CriticParseError("no PASS marker and no fenced JSON verdict")
    try:
        doc = json.loads(match.group(1))
    except json.JSONDecodeError as e:
        raise CriticParseError(f"bad JSON in verdict block: {e}") from e
    if not isinstance(doc, dict) or "passed" not in doc:
        raise CriticParseError("verdict block missing 'passed'")
    passed = bool(doc["passed"])
    if passed:
        return Verdict(passed=True, rationale=str(doc.get("rationale", "")))
    tags = [_coerce_tag(t) for t in doc.get("failure_modes", [])]
    if not tags:
        tags = [FailureTag(INCOMPLETE_REASONING, "critic gave no failure modes")]
    return Verdict(passed=False, failure_modes=tags, rationale=str(doc.get("rationale", "")))


def critique(query: str, trajectory: Trajectory, critic) -> Verdict:
    """Judge a completed run. Mechanical failures short-circuit; otherwise one
    critic call decides, failing safe on an unparseable reply."""
    flags: set[str] = set()
    if trajectory.halted_reason == LOOP_DETECTED:
        flags.add(FLAG_LOOP)
    if trajectory.halted_reason == STEP_CAP:
        flags.add(FLAG_STEP_CAP)
    if trajectory.final_answer is None or not trajectory.final_answer.strip():
        flags.add(FLAG_EMPTY)
    if flags:
        tags = []
        if FLAG_LOOP in flags:
            tags.append(FailureTag(LOOP, "run halted on a repeated-state loop"))
        if FLAG_STEP_CAP in flags:
            tags.append(FailureTag(INCOMPLETE_REASONING, "step cap reached before an answer"))
        if FLAG_EMPTY in flags and not tags:
            tags.append(FailureTag(INCOMPLETE_REASONING, "no final answer produced"))
        return Verdict(passed=False, failure_modes=tags, rationale="mechanical checks failed", mechanical_flags=flags)

    user = prompts.CRITIC_USER.format(
        query=query,
        answer=trajectory.final_answer or "",
        digest=digest_for_prompt(trajectory),
    )
    reply = critic.chat(
        ChatRequest(
            role="critic",
            messages=[
                {"role": "system", "content": prompts.CRITIC_SYSTEM},
                {"role": "user", "content": user},
            ],
        )
    )
    try:
        return _parse_critic_reply(reply.text)
    except CriticParseError as e:
        logger.warning("critic reply unparseable (%s); failing safe", e)
        return Verdict(
            passed=False,
            failure_modes=[FailureTag(INCOMPLETE_REASONING, "unparseable critic reply")],
            rationale=reply.text.strip(),
        )


def loop_constraints(trajectory: Trajectory) -> list[ForbiddenPattern]:
    """Forbidden-edge candidates from a loop halt: every consecutive state
    pair traversed more than once in the final run."""
    if trajectory.halted_reason != LOOP_DETECTED:
        return []
    return [
        ForbiddenPattern.edge(a, b, rationale=f"edge {a}->{b} lay on a detected loop")
        for a, b in repeated_edges(trajectory)
    ]


def reflect(episode, query: str, embedder, reflection) -> ExperienceRecord:
    """Distill a finished episode into a pool record. Succeeded episodes keep
    the optimized machine and op sequence; failed ones contribute loop edges
    as negative constraints. Never drops an episode: a reflection-backend
    failure just loses the written rationale."""
    outcome = SUCCESS if episode.succeeded else FAILURE
    ops = [entry.op for entry in episode.op_log]
    user = prompts.REFLECTION_USER.format(
        query=query,
        outcome=outcome.lower(),
        ops=", ".join(op.summary() for op in ops) or "none",
        digest=digest_for_prompt(episode.final_trajectory),
        verb="worked" if episode.succeeded else "failed",
    )
    try:
        rationale = reflection.chat(
            ChatRequest(role="reflection", messages=[{"role": "user", "content": user}])
        ).text.strip()
    except BackendFailure:
        logger.warning("reflection backend unavailable; recording episode without rationale")
        rationale = "(reflection unavailable)"
    return ExperienceRecord(
        query_text=query,
        query_embedding=embed(query, embedder),
        outcome=outcome,
        config_snapshot=episode.final_config.clone(),
        op_sequence=ops,
        rationale=rationale,
        failure_constraints=[] if episode.succeeded else loop_constraints(episode.final_trajectory),
    )
