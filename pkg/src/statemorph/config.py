"""Machine definition: states, transitions, conditions, and their JSON form.

The JSON schema is the interchange format for configs; writes use a stable
key order and unknown fields survive a round trip untouched (they are kept
in per-object ``extras`` and re-emitted after the known keys).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .errors import SchemaError

# Condition kinds (internal names; JSON uses the lowercase forms below).
ALWAYS = "ALWAYS"
PREDICATE = "PREDICATE"
ROUTER_JUDGED = "ROUTER_JUDGED"

_KIND_TO_JSON = {ALWAYS: "always", PREDICATE: "predicate", ROUTER_JUDGED: "router"}
_KIND_FROM_JSON = {v: k for k, v in _KIND_TO_JSON.items()}

# Forbidden-pattern kinds.
TRANSITION_EDGE = "TRANSITION_EDGE"
TOOL_IN_STATE = "TOOL_IN_STATE"

DEFAULT_MAX_STATES = 10


def _expect(value: Any, types, path: str, what: str):
    if not isinstance(value, types):
        raise SchemaError(path, f"expected {what}, got {type(value).__name__}")
    return value


def _get(doc: dict, key: str, types, path: str, what: str, default=None, required=True):
    if key not in doc:
        if required:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return default
    return _expect(doc[key], types, f"{path}.{key}", what)


def _extras_of(doc: dict, known: tuple[str, ...]) -> dict[str, Any]:
    return {k: v for k, v in doc.items() if k not in known}


def _emit_extras(out: dict, extras: dict[str, Any]) -> dict:
    for k in sorted(extras):
        out[k] = extras[k]
    return out


@dataclass
class ConditionSpec:
    """Guard on a transition: fires always, on a predicate, or by router call."""

    kind: str = ALWAYS
    predicate: str | None = None
    args: list = field(default_factory=list)
    guidance: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": _KIND_TO_JSON[self.kind]}
        if self.kind == PREDICATE:
            out["predicate"] = self.predicate
            out["args"] = list(self.args)
        elif self.kind == ROUTER_JUDGED:
            out["guidance"] = self.guidance or ""
        return _emit_extras(out, self.extras)

    @classmethod
    def from_dict(cls, doc: Any, path: str) -> "ConditionSpec":
        _expect(doc, dict, path, "object")
        raw_kind = _get(doc, "kind", str, path, "string")
        if raw_kind not in _KIND_FROM_JSON:
            raise SchemaError(f"{path}.kind", f"unknown condition kind {raw_kind!r}")
        kind = _KIND_FROM_JSON[raw_kind]
        predicate = None
        args: list = []
        guidance = None
        if kind == PREDICATE:
            predicate = _get(doc, "predicate", str, path, "string")
            args = list(_get(doc, "args", list, path, "array", default=[], required=False) or [])
        elif kind == ROUTER_JUDGED:
            guidance = _get(doc, "guidance", str, path, "string", default="", required=False)
        extras = _extras_of(doc, ("kind", "predicate", "args", "guidance"))
        return cls(kind=kind, predicate=predicate, args=args, guidance=guidance, extras=extras)


@dataclass
class StateDef:
    """One node of the machine; its instruction is the node-local prompt."""

    id: str
    name: str = ""
    instruction: str = ""
    allowed_tools: list[str] = field(default_factory=list)
    is_terminal: bool = False
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "name": self.name,
            "instruction": self.instruction,
            "allowed_tools": sorted(self.allowed_tools),
            "is_terminal": self.is_terminal,
        }
        return _emit_extras(out, self.extras)

    @classmethod
    def from_dict(cls, doc: Any, path: str) -> "StateDef":
        _expect(doc, dict, path, "object")
        tools = _get(doc, "allowed_tools", list, path, "array", default=[], required=False) or []
        for i, t in enumerate(tools):
            _expect(t, str, f"{path}.allowed_tools[{i}]", "string")
        return cls(
            id=_get(doc, "id", str, path, "string"),
            name=_get(doc, "name", str, path, "string", default="", required=False) or "",
            instruction=_get(doc, "instruction", str, path, "string", default="", required=False) or "",
            allowed_tools=sorted(tools),
            is_terminal=bool(_get(doc, "is_terminal", bool, path, "boolean", default=False, required=False)),
            extras=_extras_of(doc, ("id", "name", "instruction", "allowed_tools", "is_terminal")),
        )


@dataclass
class TransitionRule:
    """Directed edge with a guard; lower priority fires first."""

    id: str
    from_state: str
    to_state: str
    priority: int = 10
    condition: ConditionSpec = field(default_factory=ConditionSpec)
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "from": self.from_state,
            "to": self.to_state,
            "priority": self.priority,
            "condition": self.condition.to_dict(),
        }
        return _emit_extras(out, self.extras)

    @classmethod
    def from_dict(cls, doc: Any, path: str) -> "TransitionRule":
        _expect(doc, dict, path, "object")
        priority = _get(doc, "priority", int, path, "integer", default=10, required=False)
        if isinstance(priority, bool):
            raise SchemaError(f"{path}.priority", "expected integer, got boolean")
        return cls(
            id=_get(doc, "id", str, path, "string"),
            from_state=_get(doc, "from", str, path, "string"),
            to_state=_get(doc, "to", str, path, "string"),
            priority=priority,
            condition=ConditionSpec.from_dict(doc.get("condition", {"kind": "always"}), f"{path}.condition"),
            extras=_extras_of(doc, ("id", "from", "to", "priority", "condition")),
        )


@dataclass
class ForbiddenPattern:
    """Negative constraint mined from failures; ids may outlive the config."""

    kind: str
    payload: tuple[str, str]
    rationale: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def edge(cls, from_id: str, to_id: str, rationale: str = "") -> "ForbiddenPattern":
        return cls(kind=TRANSITION_EDGE, payload=(from_id, to_id), rationale=rationale)

    @classmethod
    def tool(cls, state_id: str, tool_name: str, rationale: str = "") -> "ForbiddenPattern":
        return cls(kind=TOOL_IN_STATE, payload=(state_id, tool_name), rationale=rationale)

    def key(self) -> tuple[str, str, str]:
        return (self.kind, self.payload[0], self.payload[1])

    def to_dict(self) -> dict:
        if self.kind == TRANSITION_EDGE:
            out: dict[str, Any] = {
                "kind": "transition_edge",
                "from": self.payload[0],
                "to": self.payload[1],
                "rationale": self.rationale,
            }
        else:
            out = {
                "kind": "tool_in_state",
                "state": self.payload[0],
                "tool": self.payload[1],
                "rationale": self.rationale,
            }
        return _emit_extras(out, self.extras)

    @classmethod
    def from_dict(cls, doc: Any, path: str) -> "ForbiddenPattern":
        _expect(doc, dict, path, "object")
        raw = _get(doc, "kind", str, path, "string")
        rationale = _get(doc, "rationale", str, path, "string", default="", required=False) or ""
        if raw == "transition_edge":
            payload = (_get(doc, "from", str, path, "string"), _get(doc, "to", str, path, "string"))
            known = ("kind", "from", "to", "rationale")
            kind = TRANSITION_EDGE
        elif raw == "tool_in_state":
            payload = (_get(doc, "state", str, path, "string"), _get(doc, "tool", str, path, "string"))
            known = ("kind", "state", "tool", "rationale")
            kind = TOOL_IN_STATE
        else:
            raise SchemaError(f"{path}.kind", f"unknown constraint kind {raw!r}")
        return cls(kind=kind, payload=payload, rationale=rationale, extras=_extras_of(doc, known))


@dataclass
class FsmConfig:
    """The whole machine: the unit that validation, execution, and edits act on."""

    states: list[StateDef] = field(default_factory=list)
    transitions: list[TransitionRule] = field(default_factory=list)
    initial_state: str = ""
    version: int = 1
    negative_constraints: list[ForbiddenPattern] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)

    def state(self, state_id: str) -> StateDef | None:
        for s in self.states:
            if s.id == state_id:
                return s
        return None

    def transition(self, transition_id: str) -> TransitionRule | None:
        for t in self.transitions:
            if t.id == transition_id:
                return t
        return None

    def outgoing(self, state_id: str) -> list[TransitionRule]:
        return [t for t in self.transitions if t.from_state == state_id]

    def forbidden_edges(self) -> set[tuple[str, str]]:
        return {
            (p.payload[0], p.payload[1])
            for p in self.negative_constraints
            if p.kind == TRANSITION_EDGE
        }

    def forbidden_tools(self, state_id: str) -> set[str]:
        return {
            p.payload[1]
            for p in self.negative_constraints
            if p.kind == TOOL_IN_STATE and p.payload[0] == state_id
        }

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "initial_state": self.initial_state,
            "states": [s.to_dict() for s in self.states],
            "transitions": [t.to_dict() for t in self.transitions],
            "negative_constraints": [p.to_dict() for p in self.negative_constraints],
        }
        return _emit_extras(out, self.extras)

    @classmethod
    def from_dict(cls, doc: Any, path: str = "$") -> "FsmConfig":
        _expect(doc, dict, path, "object")
        version = _get(doc, "version", int, path, "integer", default=1, required=False)
        if isinstance(version, bool):
            raise SchemaError(f"{path}.version", "expected integer, got boolean")
        initial = _get(doc, "initial_state", str, path, "string")
        raw_states = _get(doc, "states", list, path, "array")
        raw_transitions = _get(doc, "transitions", list, path, "array", default=[], required=False) or []
        raw_constraints = _get(doc, "negative_constraints", list, path, "array", default=[], required=False) or []
        return cls(
            states=[StateDef.from_dict(s, f"{path}.states[{i}]") for i, s in enumerate(raw_states)],
            transitions=[
                TransitionRule.from_dict(t, f"{path}.transitions[{i}]") for i, t in enumerate(raw_transitions)
            ],
            initial_state=initial,
            version=version,
            negative_constraints=[
                ForbiddenPattern.from_dict(p, f"{path}.negative_constraints[{i}]")
                for i, p in enumerate(raw_constraints)
            ],
            extras=_extras_of(doc, ("version", "initial_state", "states", "transitions", "negative_constraints")),
        )

    def clone(self) -> "FsmConfig":
        return FsmConfig.from_dict(self.to_dict())

    def structural_key(self) -> str:
        """Canonical form ignoring version, for structural-equality checks."""
        doc = self.to_dict()
        doc.pop("version", None)
        return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def structurally_equal(a: FsmConfig, b: FsmConfig) -> bool:
    return a.structural_key() == b.structural_key()


def serialize_config(config: FsmConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, ensure_ascii=False) + "\n"


def deserialize_config(text: str) -> FsmConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"not valid JSON: {e}") from e
    return FsmConfig.from_dict(doc)
