"""Answer scoring: normalized exact match, plus an opt-in judge backend."""

from __future__ import annotations

import re

from . import prompts
from .backends import ChatRequest

_ARTICLES = {"a", "an", "the"}


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = re.sub(r"[^\w\s]", " ", text)
    tokens = [t for t in text.split() if t not in _ARTICLES]
    return " ".join(tokens)


def exact_match(gold: str, answer: str | None) -> bool:
    if answer is None:
        return False
    return normalize_answer(gold) == normalize_answer(answer)


def judge_match(question: str, gold: str, answer: str | None, judge) -> bool:
    if answer is None:
        return False
    user = prompts.JUDGE_USER.format(question=question, gold=gold, answer=answer)
    reply = judge.chat(ChatRequest(role="judge", messages=[{"role": "user", "content": user}]))
    return bool(re.match(r"\s*CORRECT\b", reply.text))
