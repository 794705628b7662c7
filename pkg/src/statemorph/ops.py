"""Atomic edits of a machine config and their exact inverses.

Four kinds exist. ADD_STATE, DELETE_STATE and MODIFY_TRANSITION edit topology
and never touch instruction text; REVISE_INSTRUCTION edits one instruction
and never touches topology. ``apply_op`` returns a fresh config (version + 1)
together with the inverse op, or rejects rather than produce an invalid
machine.

Splicing: an ADD_STATE inbound rule may reuse an existing transition id, in
which case that transition is replaced (typically retargeted at the new
state). The inverse restores the replaced rule, which keeps a single op able
to insert a state into the middle of a chain and still be undone exactly.

DELETE_STATE rewiring lists a disposition per inbound edge: a replacement
rule, or null to drop the edge. Inbound edges not mentioned are dropped;
outbound edges of the deleted state always go with it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .config import (
    DEFAULT_MAX_STATES,
    ConditionSpec,
    FsmConfig,
    StateDef,
    TransitionRule,
)
from .errors import OpRejected, SchemaError
from .validate import (
    NONTERMINAL_DEAD_END,
    STATE_CAP_EXCEEDED,
    validate_config,
)

ADD_STATE = "ADD_STATE"
DELETE_STATE = "DELETE_STATE"
MODIFY_TRANSITION = "MODIFY_TRANSITION"
REVISE_INSTRUCTION = "REVISE_INSTRUCTION"

OP_KINDS = (ADD_STATE, DELETE_STATE, MODIFY_TRANSITION, REVISE_INSTRUCTION)
FLOW_KINDS = (ADD_STATE, DELETE_STATE, MODIFY_TRANSITION)


@dataclass
class RewireRule:
    """Disposition of one inbound edge when its target state is deleted."""

    transition_id: str
    replacement: TransitionRule | None = None

    def to_dict(self) -> dict:
        return {
            "transition_id": self.transition_id,
            "replacement": self.replacement.to_dict() if self.replacement else None,
        }

    @classmethod
    def from_dict(cls, doc: Any, path: str) -> "RewireRule":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected object")
        if "transition_id" not in doc:
            raise SchemaError(f"{path}.transition_id", "missing required field")
        replacement = doc.get("replacement")
        return cls(
            transition_id=str(doc["transition_id"]),
            replacement=TransitionRule.from_dict(replacement, f"{path}.replacement") if replacement else None,
        )


@dataclass
class AtomicOp:
    """One constrained edit; exactly the payload for its kind is populated."""

    kind: str
    rationale: str = ""
    # ADD_STATE
    state: StateDef | None = None
    inbound: list[TransitionRule] = field(default_factory=list)
    outbound: list[TransitionRule] = field(default_factory=list)
    # DELETE_STATE / REVISE_INSTRUCTION
    state_id: str | None = None
    rewiring: list[RewireRule] = field(default_factory=list)
    # MODIFY_TRANSITION
    transition_id: str | None = None
    changes: dict[str, Any] = field(default_factory=dict)
    # REVISE_INSTRUCTION
    instruction: str | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "rationale": self.rationale}
        if self.kind == ADD_STATE:
            out["state"] = self.state.to_dict() if self.state else None
            out["inbound"] = [t.to_dict() for t in self.inbound]
            out["outbound"] = [t.to_dict() for t in self.outbound]
        elif self.kind == DELETE_STATE:
            out["state_id"] = self.state_id
            out["rewiring"] = [r.to_dict() for r in self.rewiring]
        elif self.kind == MODIFY_TRANSITION:
            out["transition_id"] = self.transition_id
            changes = {}
            if "to" in self.changes:
                changes["to"] = self.changes["to"]
            if "priority" in self.changes:
                changes["priority"] = self.changes["priority"]
            if "condition" in self.changes:
                cond = self.changes["condition"]
                changes["condition"] = cond.to_dict() if isinstance(cond, ConditionSpec) else cond
            out["changes"] = changes
        elif self.kind == REVISE_INSTRUCTION:
            out["state_id"] = self.state_id
            out["instruction"] = self.instruction
        return out

    @classmethod
    def from_dict(cls, doc: Any, path: str = "$") -> "AtomicOp":
        if not isinstance(doc, dict):
            raise SchemaError(path, "expected object")
        kind = doc.get("kind")
        if kind not in OP_KINDS:
            raise SchemaError(f"{path}.kind", f"unknown op kind {kind!r}")
        rationale = str(doc.get("rationale", ""))
        if kind == ADD_STATE:
            if "state" not in doc:
                raise SchemaError(f"{path}.state", "missing required field")
            return cls(
                kind=kind,
                rationale=rationale,
                state=StateDef.from_dict(doc["state"], f"{path}.state"),
                inbound=[
                    TransitionRule.from_dict(t, f"{path}.inbound[{i}]")
                    for i, t in enumerate(doc.get("inbound", []))
                ],
                outbound=[
                    TransitionRule.from_dict(t, f"{path}.outbound[{i}]")
                    for i, t in enumerate(doc.get("outbound", []))
                ],
            )
        if kind == DELETE_STATE:
            if "state_id" not in doc:
                raise SchemaError(f"{path}.state_id", "missing required field")
            return cls(
                kind=kind,
                rationale=rationale,
                state_id=str(doc["state_id"]),
                rewiring=[
                    RewireRule.from_dict(r, f"{path}.rewiring[{i}]") for i, r in enumerate(doc.get("rewiring", []))
                ],
            )
        if kind == MODIFY_TRANSITION:
            if "transition_id" not in doc:
                raise SchemaError(f"{path}.transition_id", "missing required field")
            raw = doc.get("changes")
            if not isinstance(raw, dict) or not raw:
                raise SchemaError(f"{path}.changes", "expected non-empty object")
            changes: dict[str, Any] = {}
            if "to" in raw:
                changes["to"] = str(raw["to"])
            if "priority" in raw:
                if not isinstance(raw["priority"], int) or isinstance(raw["priority"], bool):
                    raise SchemaError(f"{path}.changes.priority", "expected integer")
                changes["priority"] = raw["priority"]
            if "condition" in raw:
                changes["condition"] = ConditionSpec.from_dict(raw["condition"], f"{path}.changes.condition")
            if not changes:
                raise SchemaError(f"{path}.changes", "no recognized change field (to/priority/condition)")
            return cls(kind=kind, rationale=rationale, transition_id=str(doc["transition_id"]), changes=changes)
        # REVISE_INSTRUCTION
        if "state_id" not in doc:
            raise SchemaError(f"{path}.state_id", "missing required field")
        if "instruction" not in doc or not isinstance(doc["instruction"], str):
            raise SchemaError(f"{path}.instruction", "expected string")
        return cls(kind=kind, rationale=rationale, state_id=str(doc["state_id"]), instruction=doc["instruction"])

    def summary(self) -> str:
        if self.kind == ADD_STATE:
            return f"ADD_STATE({self.state.id if self.state else '?'})"
        if self.kind == DELETE_STATE:
            return f"DELETE_STATE({self.state_id})"
        if self.kind == MODIFY_TRANSITION:
            return f"MODIFY_TRANSITION({self.transition_id})"
        return f"REVISE_INSTRUCTION({self.state_id})"


@dataclass
class OpLogEntry:
    iteration: int
    op: AtomicOp
    inverse: AtomicOp
    pre_version: int
    post_version: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "op": self.op.to_dict(),
            "inverse": self.inverse.to_dict(),
            "pre_version": self.pre_version,
            "post_version": self.post_version,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OpLogEntry":
        return cls(
            iteration=doc["iteration"],
            op=AtomicOp.from_dict(doc["op"]),
            inverse=AtomicOp.from_dict(doc["inverse"]),
            pre_version=doc["pre_version"],
            post_version=doc["post_version"],
        )


def _check_new_edges(before: FsmConfig, after: FsmConfig) -> None:
    old_edges = {(t.from_state, t.to_state) for t in before.transitions}
    forbidden = after.forbidden_edges()
    for t in after.transitions:
        edge = (t.from_state, t.to_state)
        if edge not in old_edges and edge in forbidden:
            raise OpRejected(OpRejected.FORBIDDEN_BY_MEMORY, f"edge {edge[0]}->{edge[1]} is a known dead end")


def _finish(before: FsmConfig, after: FsmConfig, op: AtomicOp, max_states: int) -> FsmConfig:
    after.version = before.version + 1
    _check_new_edges(before, after)
    report = validate_config(after, max_states=max_states)
    if not report.ok:
        codes = report.codes()
        if STATE_CAP_EXCEEDED in codes:
            raise OpRejected(OpRejected.STATE_CAP, report.summary())
        if op.kind == DELETE_STATE and NONTERMINAL_DEAD_END in codes:
            raise OpRejected(OpRejected.WOULD_ORPHAN, report.summary())
        raise OpRejected(OpRejected.INVALID_RESULT, report.summary())
    return after


def _apply_add_state(config: FsmConfig, op: AtomicOp, max_states: int) -> tuple[FsmConfig, AtomicOp]:
    if op.state is None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, "ADD_STATE without a state payload")
    if config.state(op.state.id) is not None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, f"state id {op.state.id!r} already exists")
    if len(config.states) >= max_states:
        raise OpRejected(OpRejected.STATE_CAP, f"machine already has {len(config.states)} states")
    for rule in op.inbound:
        if rule.to_state != op.state.id:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"inbound {rule.id} does not target the new state")
        if config.state(rule.from_state) is None:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"inbound {rule.id} from unknown state {rule.from_state!r}")
    for rule in op.outbound:
        if rule.from_state != op.state.id:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"outbound {rule.id} does not leave the new state")
        if rule.to_state != op.state.id and config.state(rule.to_state) is None:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"outbound {rule.id} to unknown state {rule.to_state!r}")
        if config.transition(rule.id) is not None:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"outbound id {rule.id!r} collides with an existing transition")

    after = config.clone()
    after.states.append(StateDef.from_dict(op.state.to_dict(), "$.state"))
    replaced: list[TransitionRule] = []
    for rule in op.inbound:
        existing = after.transition(rule.id)
        if existing is not None:
            replaced.append(existing)
            after.transitions = [t for t in after.transitions if t.id != rule.id]
        after.transitions.append(TransitionRule.from_dict(rule.to_dict(), "$.inbound"))
    for rule in op.outbound:
        after.transitions.append(TransitionRule.from_dict(rule.to_dict(), "$.outbound"))

    rewiring = []
    for rule in op.inbound:
        original = next((t for t in replaced if t.id == rule.id), None)
        rewiring.append(RewireRule(transition_id=rule.id, replacement=original))
    inverse = AtomicOp(
        kind=DELETE_STATE,
        rationale=f"undo {op.summary()}",
        state_id=op.state.id,
        rewiring=rewiring,
    )
    return _finish(config, after, op, max_states), inverse


def _apply_delete_state(config: FsmConfig, op: AtomicOp, max_states: int) -> tuple[FsmConfig, AtomicOp]:
    target = config.state(op.state_id or "")
    if target is None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, f"no state {op.state_id!r}")
    if op.state_id == config.initial_state:
        raise OpRejected(OpRejected.DELETE_INITIAL, op.state_id or "")
    if target.is_terminal and sum(1 for s in config.states if s.is_terminal) == 1:
        raise OpRejected(OpRejected.DELETE_LAST_TERMINAL, op.state_id or "")

    inbound = [t for t in config.transitions if t.to_state == op.state_id and t.from_state != op.state_id]
    outbound = [t for t in config.transitions if t.from_state == op.state_id]
    inbound_ids = {t.id for t in inbound}
    dispositions = {r.transition_id: r.replacement for r in op.rewiring}
    for tid in dispositions:
        if tid not in inbound_ids:
            raise OpRejected(OpRejected.UNKNOWN_TARGET, f"rewiring names {tid!r}, not an inbound edge of {op.state_id!r}")

    after = config.clone()
    after.states = [s for s in after.states if s.id != op.state_id]
    kept: list[TransitionRule] = []
    for t in after.transitions:
        if t.from_state == op.state_id:
            continue  # outbound edges die with the state
        if t.to_state == op.state_id:
            replacement = dispositions.get(t.id)
            if replacement is not None:
                kept.append(TransitionRule.from_dict(replacement.to_dict(), "$.rewiring"))
            continue  # no replacement: edge deleted
        kept.append(t)
    after.transitions = kept

    inverse = AtomicOp(
        kind=ADD_STATE,
        rationale=f"undo {op.summary()}",
        state=StateDef.from_dict(target.to_dict(), "$.state"),
        inbound=[TransitionRule.from_dict(t.to_dict(), "$.inbound") for t in inbound],
        outbound=[TransitionRule.from_dict(t.to_dict(), "$.outbound") for t in outbound],
    )
    return _finish(config, after, op, max_states), inverse


def _apply_modify_transition(config: FsmConfig, op: AtomicOp, max_states: int) -> tuple[FsmConfig, AtomicOp]:
    target = config.transition(op.transition_id or "")
    if target is None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, f"no transition {op.transition_id!r}")
    if "to" in op.changes and config.state(op.changes["to"]) is None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, f"retarget to unknown state {op.changes['to']!r}")

    after = config.clone()
    edited = after.transition(op.transition_id or "")
    old_changes: dict[str, Any] = {}
    if "to" in op.changes:
        old_changes["to"] = edited.to_state
        edited.to_state = op.changes["to"]
    if "priority" in op.changes:
        old_changes["priority"] = edited.priority
        edited.priority = op.changes["priority"]
    if "condition" in op.changes:
        new_cond = op.changes["condition"]
        if isinstance(new_cond, dict):
            new_cond = ConditionSpec.from_dict(new_cond, "$.changes.condition")
        old_changes["condition"] = ConditionSpec.from_dict(edited.condition.to_dict(), "$.condition")
        edited.condition = ConditionSpec.from_dict(new_cond.to_dict(), "$.condition")

    inverse = AtomicOp(
        kind=MODIFY_TRANSITION,
        rationale=f"undo {op.summary()}",
        transition_id=op.transition_id,
        changes=old_changes,
    )
    return _finish(config, after, op, max_states), inverse


def _apply_revise_instruction(config: FsmConfig, op: AtomicOp, max_states: int) -> tuple[FsmConfig, AtomicOp]:
    target = config.state(op.state_id or "")
    if target is None:
        raise OpRejected(OpRejected.UNKNOWN_TARGET, f"no state {op.state_id!r}")
    after = config.clone()
    edited = after.state(op.state_id or "")
    old_text = edited.instruction
    edited.instruction = op.instruction or ""
    inverse = AtomicOp(
        kind=REVISE_INSTRUCTION,
        rationale=f"undo {op.summary()}",
        state_id=op.state_id,
        instruction=old_text,
    )
    return _finish(config, after, op, max_states), inverse


def apply_op(
    config: FsmConfig, op: AtomicOp, max_states: int = DEFAULT_MAX_STATES
) -> tuple[FsmConfig, AtomicOp]:
    """Apply one atomic op, returning (new config, inverse). The input config
    is never mutated; a result that would not validate is rejected."""
    if op.kind == ADD_STATE:
        return _apply_add_state(config, op, max_states)
    if op.kind == DELETE_STATE:
        return _apply_delete_state(config, op, max_states)
    if op.kind == MODIFY_TRANSITION:
        return _apply_modify_transition(config, op, max_states)
    if op.kind == REVISE_INSTRUCTION:
        return _apply_revise_instruction(config, op, max_states)
    raise OpRejected(OpRejected.INVALID_RESULT, f"unknown op kind {op.kind!r}")


def undo(config: FsmConfig, inverse: AtomicOp, max_states: int = DEFAULT_MAX_STATES) -> FsmConfig:
    """Apply the inverse produced by apply_op; structurally restores the
    ancestor (the version keeps counting up)."""
    restored, _ = apply_op(config, inverse, max_states=max_states)
    return restored


def ops_to_jsonl(entries: list[OpLogEntry]) -> str:
    return "".join(json.dumps(e.to_dict(), ensure_ascii=False) + "\n" for e in entries)
