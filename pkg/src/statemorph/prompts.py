"""Prompt templates for every backend role. Original wording, version-pinned."""

from __future__ import annotations

PROMPTS_VERSION = "1"

TOOL_SYNTAX = (
    "Request a tool with a fenced block:\n"
    "```tool\n"
    '{"tool": "<name>", "input": "<text>"}\n'
    "```"
)

AGENT_SYSTEM = (
    "{instruction}\n\n"
    "Allowed tools: {tools}. {tool_syntax}\n"
    "You may request at most {max_tool_calls} tools per step."
)

AGENT_USER = "[state:{state_id}] {state_name}\nTask: {query}\n\nRecent context:\n{context}"

AGENT_OBSERVE = "[observe]\nTool results:\n{results}\n\nRespond for this state now."

ROUTER_USER = (
    "[router]\nTask: {query}\n\nRecent context:\n{context}\n\n"
    "Pick the next phase. Candidates:\n{candidates}\n"
    "Answer with the id of exactly one candidate."
)

CRITIC_SYSTEM = (
    "You judge whether a final answer satisfies the task. Reply PASS if it does.\n"
    "Otherwise reply with a fenced JSON object:\n"
    "```json\n"
    '{"passed": false, "failure_modes": [{"code": "<CODE>", "detail": "<why>"}], "rationale": "<summary>"}\n'
    "```\n"
    "Codes: QUANT_EVIDENCE_MISSING, LOGICAL_INCONSISTENCY, HALLUCINATION, "
    "INCOMPLETE_REASONING, LOOP, SOURCE_QUALITY."
)

CRITIC_USER = "[critic]\nTask: {query}\n\nFinal answer:\n{answer}\n\nEvidence digest:\n{digest}"

PROPOSER_SYSTEM = (
    "You repair a state-machine workflow with atomic edits only. Reply with a\n"
    "fenced JSON array of 1 to 3 operations. Allowed kinds:\n"
    '- {{"kind": "ADD_STATE", "state": {{...state...}}, "inbound": [...], "outbound": [...], "rationale": "..."}}\n'
    '- {{"kind": "DELETE_STATE", "state_id": "...", "rewiring": [{{"transition_id": "...", "replacement": {{...}}|null}}], "rationale": "..."}}\n'
    '- {{"kind": "MODIFY_TRANSITION", "transition_id": "...", "changes": {{"to"?: "...", "priority"?: 1, "condition"?: {{...}}}}, "rationale": "..."}}\n'
    '- {{"kind": "REVISE_INSTRUCTION", "state_id": "...", "instruction": "...", "rationale": "..."}}\n'
    "Free-form rewrites of the whole machine are rejected."
)

PROPOSER_USER = (
    "[proposer]\nVerdict: {verdict}\n\nCurrent machine:\n{config}\n\n"
    "Run digest:\n{digest}\n{warnings}{experience}{feedback}"
)

REFLECTION_USER = (
    "[reflection]\nTask: {query}\nOutcome: {outcome}\n"
    "Operations applied: {ops}\nRun digest:\n{digest}\n\n"
    "Write one short paragraph on why this machine shape {verb} for tasks like this."
)

REWRITER_SYSTEM = (
    "Rewrite the per-state instructions of this workflow to fix the reported\n"
    "problem. Reply with a fenced JSON object mapping state id to new\n"
    "instruction text. States you omit keep their current instruction."
)

REWRITER_USER = "[rewriter]\nVerdict: {verdict}\n\nTask: {query}\n\nCurrent instructions:\n{instructions}"

REACT_SYSTEM = (
    "You answer research questions by reasoning and calling tools.\n"
    "{tool_syntax}\n"
    "Available tools: search, browse. When you know the answer, reply with a\n"
    "line starting with FINAL: followed by the answer."
)

REACT_USER = "[react]\nQuestion: {query}\n\nTranscript:\n{transcript}"

JUDGE_USER = (
    "[judge]\nQuestion: {question}\nReference answer: {gold}\nCandidate answer: {answer}\n"
    "Reply CORRECT if the candidate answer is equivalent to the reference, else INCORRECT."
)
