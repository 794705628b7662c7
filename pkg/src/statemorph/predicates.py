"""Built-in mechanical predicates usable in transition conditions.

Each predicate takes the trajectory so far plus its declared arguments and
returns a bool. The registry is the single source of truth: validation
resolves predicate names against it and routing evaluates through it.
"""

from __future__ import annotations

from typing import Callable

from .trajectory import Trajectory


def evidence_count_at_least(trajectory: Trajectory, n) -> bool:
    ok = sum(1 for step in trajectory.steps for c in step.tool_calls if c.status == "ok")
    return ok >= int(n)


def steps_exceeded(trajectory: Trajectory, n) -> bool:
    return len(trajectory.steps) > int(n)


def last_output_contains(trajectory: Trajectory, text) -> bool:
    if not trajectory.steps:
        return False
    return str(text) in trajectory.steps[-1].agent_output


def visit_count_exceeded(trajectory: Trajectory, state_id, n) -> bool:
    return trajectory.visit_counts.get(str(state_id), 0) > int(n)


REGISTRY: dict[str, tuple[Callable, int]] = {
    "evidence_count_at_least": (evidence_count_at_least, 1),
    "steps_exceeded": (steps_exceeded, 1),
    "last_output_contains": (last_output_contains, 1),
    "visit_count_exceeded": (visit_count_exceeded, 2),
}


def known_predicate(name: str, argc: int | None = None) -> bool:
    if name not in REGISTRY:
        return False
    return argc is None or REGISTRY[name][1] == argc


def evaluate(name: str, args: list, trajectory: Trajectory) -> bool:
    fn, arity = REGISTRY[name]
    if len(args) != arity:
        raise ValueError(f"predicate {name} expects {arity} args, got {len(args)}")
    return bool(fn(trajectory, *args))
