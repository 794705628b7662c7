"""The stock three-phase research machine used when no config is supplied.

Search gathers candidate sources, browsing reads them, analysis writes the
answer. Browsing advances once it declares the evidence complete and
otherwise falls back to search for a refined query.
"""

from __future__ import annotations

from .config import (
    ALWAYS,
    PREDICATE,
    ConditionSpec,
    FsmConfig,
    StateDef,
    TransitionRule,
)

EVIDENCE_MARKER = "EVIDENCE_COMPLETE"
REFINE_MARKER = "REFINE:"
VERIFIED_MARKER = "VERIFIED"

SEARCH_INSTRUCTION = (
    "You run the search phase of a research workflow. Work out what evidence "
    "the task still needs and issue one focused web query with the search tool. "
    f"If an earlier step proposed a refined query on a line starting with {REFINE_MARKER} "
    "search for exactly that refined query. After seeing results, say which "
    "sources look promising."
)

BROWSING_INSTRUCTION = (
    "You run the reading phase. Pick the most promising source from the recent "
    "search results and read it with the browse tool. Report the facts the page "
    f"contributes. End your reply with {EVIDENCE_MARKER} only once the context "
    "holds the evidence the task needs."
)

ANALYSIS_INSTRUCTION = (
    "You write the final answer to the task using only evidence already in the "
    "context. Be specific and quote figures exactly as they appear."
)


def default_config() -> FsmConfig:
    return FsmConfig(
        initial_state="search",
        version=1,
        states=[
            StateDef(id="search", name="Search", instruction=SEARCH_INSTRUCTION, allowed_tools=["search"]),
            StateDef(id="browsing", name="Browsing", instruction=BROWSING_INSTRUCTION, allowed_tools=["browse"]),
            StateDef(id="analysis", name="Analysis", instruction=ANALYSIS_INSTRUCTION, is_terminal=True),
        ],
        transitions=[
            TransitionRule(
                id="t_search_browse",
                from_state="search",
                to_state="browsing",
                priority=10,
                condition=ConditionSpec(kind=PREDICATE, predicate="evidence_count_at_least", args=[1]),
            ),
            TransitionRule(
                id="t_search_retry",
                from_state="search",
                to_state="search",
                priority=20,
                condition=ConditionSpec(kind=ALWAYS),
            ),
            TransitionRule(
                id="t_browse_analysis",
                from_state="browsing",
                to_state="analysis",
                priority=10,
                condition=ConditionSpec(kind=PREDICATE, predicate="last_output_contains", args=[EVIDENCE_MARKER]),
            ),
            TransitionRule(
                id="t_browse_search",
                from_state="browsing",
                to_state="search",
                priority=20,
                condition=ConditionSpec(kind=ALWAYS),
            ),
        ],
    )
