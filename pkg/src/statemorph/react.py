"""Single looped reason-act agent: the no-machine baseline."""

from __future__ import annotations

import logging

from . import prompts
from .backends import BackendSet, ChatRequest
from .engine import TOOL_OUTPUT_CHARS, parse_tool_requests
from .errors import StatemorphError
from .trajectory import StepRecord, ToolCall, Trajectory, ERROR, STEP_CAP, TERMINAL

logger = logging.getLogger(__name__)


def run_react(query: str, backends: BackendSet, max_steps: int = 20) -> Trajectory:
    """Loop one agent over the tools until it declares FINAL or runs out of
    steps. Reuses Trajectory so reports treat all modes alike."""
    trajectory = Trajectory(query=query)
    transcript: list[str] = []
    try:
        while len(trajectory.steps) < max_steps:
            step = StepRecord(index=len(trajectory.steps), state_id="react")
            user = prompts.REACT_USER.format(query=query, transcript="\n".join(transcript) or "(empty)")
            reply = backends.chat.chat(
                ChatRequest(
                    role="react",
                    messages=[
                        {"role": "system", "content": prompts.REACT_SYSTEM.format(tool_syntax=prompts.TOOL_SYNTAX)},
                        {"role": "user", "content": user},
                    ],
                )
            )
            step.agent_output = reply.text
            requests = [r for r in parse_tool_requests(reply.text) if r is not None]
            if not requests:
                trajectory.append(step)
                answer = reply.text.strip()
                if answer.startswith("FINAL:"):
                    answer = answer[len("FINAL:") :].strip()
                trajectory.final_answer = answer
                trajectory.halted_reason = TERMINAL
                return trajectory
            transcript.append(f"Thought: {reply.text}")
            for name, input_text in requests[:3]:
                if name not in ("search", "browse") or backends.tools is None:
                    step.tool_calls.append(ToolCall(tool=name, input=input_text, status="refused", detail="unknown tool"))
                    transcript.append(f"Observation [{name}]: unavailable")
                    continue
                try:
                    output = backends.tools.run(name, input_text)
                except StatemorphError as e:
                    step.tool_calls.append(ToolCall(tool=name, input=input_text, status="error", detail=str(e)[:200]))
                    transcript.append(f"Observation [{name}]: error {e}")
                    continue
                step.tool_calls.append(ToolCall.ok(name, input_text, output))
                transcript.append(f"Observation [{name}]:\n{output[:TOOL_OUTPUT_CHARS]}")
            trajectory.append(step)
        trajectory.halted_reason = STEP_CAP
    except StatemorphError as e:
        trajectory.halted_reason = ERROR
        trajectory.error = f"{type(e).__name__}: {e}"
    return trajectory
