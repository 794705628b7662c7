"""Structural validation of machine configs.

Violations are data, not exceptions: callers inspect the report and decide.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import predicates
from .config import DEFAULT_MAX_STATES, PREDICATE, FsmConfig

DUP_STATE_ID = "DUP_STATE_ID"
DUP_TRANSITION_ID = "DUP_TRANSITION_ID"
DANGLING_TRANSITION = "DANGLING_TRANSITION"
NO_INITIAL = "NO_INITIAL"
UNREACHABLE_STATE = "UNREACHABLE_STATE"
NONTERMINAL_DEAD_END = "NONTERMINAL_DEAD_END"
STATE_CAP_EXCEEDED = "STATE_CAP_EXCEEDED"
DUP_PRIORITY = "DUP_PRIORITY"
UNKNOWN_PREDICATE = "UNKNOWN_PREDICATE"
NO_TERMINAL_REACHABLE = "NO_TERMINAL_REACHABLE"


@dataclass
class Violation:
    code: str
    detail: str

    def to_dict(self) -> dict:
        return {"code": self.code, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def add(self, code: str, detail: str) -> None:
        self.violations.append(Violation(code, detail))

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.code}({v.detail})" for v in self.violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_config(config: FsmConfig, max_states: int = DEFAULT_MAX_STATES) -> ValidationReport:
    report = ValidationReport()
    state_ids = [s.id for s in config.states]
    id_set = set(state_ids)

    seen: set[str] = set()
    for sid in state_ids:
        if not sid:
            report.add(DUP_STATE_ID, "empty state id")
        elif sid in seen:
            report.add(DUP_STATE_ID, sid)
        seen.add(sid)

    if len(config.states) > max_states:
        report.add(STATE_CAP_EXCEEDED, f"{len(config.states)} states > cap {max_states}")

    if not config.initial_state or config.initial_state not in id_set:
        report.add(NO_INITIAL, config.initial_state or "<unset>")

    seen_t: set[str] = set()
    priorities: dict[str, set[int]] = {}
    for t in config.transitions:
        if t.id in seen_t:
            report.add(DUP_TRANSITION_ID, t.id)
        seen_t.add(t.id)
        for endpoint in (t.from_state, t.to_state):
            if endpoint not in id_set:
                report.add(DANGLING_TRANSITION, f"{t.id}: {endpoint!r} is not a state")
        taken = priorities.setdefault(t.from_state, set())
        if t.priority in taken:
            report.add(DUP_PRIORITY, f"{t.from_state}: priority {t.priority} repeated")
        taken.add(t.priority)
        cond = t.condition
        if cond.kind == PREDICATE:
            if not cond.predicate or not predicates.known_predicate(cond.predicate):
                report.add(UNKNOWN_PREDICATE, f"{t.id}: {cond.predicate!r}")
            elif not predicates.known_predicate(cond.predicate, len(cond.args)):
                report.add(UNKNOWN_PREDICATE, f"{t.id}: {cond.predicate} arity {len(cond.args)}")

    # Reachability from the initial state over well-formed edges.
    reachable: set[str] = set()
    if config.initial_state in id_set:
        queue = deque([config.initial_state])
        while queue:
            here = queue.popleft()
            if here in reachable:
                continue
            reachable.add(here)
            for t in config.transitions:
                if t.from_state == here and t.to_state in id_set and t.to_state not in reachable:
                    queue.append(t.to_state)
        for sid in state_ids:
            if sid not in reachable:
                report.add(UNREACHABLE_STATE, sid)
        if not any(s.is_terminal for s in config.states if s.id in reachable):
            report.add(NO_TERMINAL_REACHABLE, "no terminal state reachable from initial")

    outgoing = {t.from_state for t in config.transitions}
    for s in config.states:
        if not s.is_terminal and s.id not in outgoing:
            report.add(NONTERMINAL_DEAD_END, s.id)

    return report
