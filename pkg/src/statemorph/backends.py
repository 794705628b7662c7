"""Chat and embedding backends: live HTTP, scripted tables, record/replay.

Every caller in the package goes through the same ``ChatBackend.chat``
surface; the request carries a role label (agent, router, critic, proposer,
reflection, rewriter, judge, react) so one backend can serve all roles.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

from .errors import BackendFailure, CassetteMiss, EndpointError, ScriptMiss

logger = logging.getLogger(__name__)

RECORD = "RECORD"
REPLAY = "REPLAY"


@dataclass
class ChatRequest:
    role: str
    messages: list[dict[str, str]]

    def rendered(self) -> str:
        return "\n".join(m.get("content", "") for m in self.messages)


@dataclass
class ChatReply:
    text: str
    model: str = "scripted"
    latency_s: float = 0.0


class ChatBackend(Protocol):
    def chat(self, request: ChatRequest) -> ChatReply: ...


@dataclass
class ScriptRule:
    """One scripted behavior: match by role plus optional turn index / regex."""

    role: str | None = None
    pattern: str | None = None
    turn: int | None = None
    reply: str | Callable[[ChatRequest], str] = ""

    def matches(self, request: ChatRequest, turn: int) -> bool:
        if self.role is not None and self.role != request.role:
            return False
        if self.turn is not None and self.turn != turn:
            return False
        if self.pattern is not None and not re.search(self.pattern, request.rendered(), re.DOTALL):
            return False
        return True


class ScriptedChatBackend:
    """Deterministic table-driven backend; first matching rule wins.

    Turn indices count calls per role, starting at 1.
    """

    def __init__(self, rules: list[ScriptRule]):
        self.rules = list(rules)
        self._turns: dict[str, int] = {}

    def chat(self, request: ChatRequest) -> ChatReply:
        turn = self._turns.get(request.role, 0) + 1
        self._turns[request.role] = turn
        for rule in self.rules:
            if rule.matches(request, turn):
                text = rule.reply(request) if callable(rule.reply) else rule.reply
                return ChatReply(text=text, model="scripted")
        preview = request.rendered()[:160].replace("\n", " ")
        raise ScriptMiss(f"no rule for role={request.role} turn={turn}: {preview!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatBackend":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [
            ScriptRule(
                role=entry.get("role"),
                pattern=entry.get("pattern"),
                turn=entry.get("turn"),
                reply=entry.get("reply", ""),
            )
            for entry in doc
        ]
        return cls(rules)


def default_transport(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    import requests

    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    resp.raise_for_status()
    return resp.json()


class LiveChatBackend:
    """Adapter for chat-completion style HTTP endpoints.

    Configuration comes from arguments or CHAT_BASE_URL / CHAT_API_KEY /
    CHAT_MODEL. Transport failures are retried twice with exponential
    backoff starting at one second.
    """

    RETRIES = 2

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        transport: Callable | None = None,
        backoff_s: float = 1.0,
    ):
        self.base_url = (base_url or os.environ.get("CHAT_BASE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("CHAT_API_KEY", "")
        self.model = model or os.environ.get("CHAT_MODEL", "")
        self.transport = transport or default_transport
        self.backoff_s = backoff_s
        if not self.base_url:
            raise BackendFailure("live chat backend needs a base URL (CHAT_BASE_URL)")

    def chat(self, request: ChatRequest) -> ChatReply:
        url = f"{self.base_url}/chat/completions"
        payload = {"model": self.model, "messages": request.messages}
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_error: Exception | None = None
        started = time.monotonic()
        for attempt in range(self.RETRIES + 1):
            try:
                doc = self.transport(url, payload, headers, 60.0)
                text = doc["choices"][0]["message"]["content"]
                if text is None or text == "":
                    raise EndpointError("endpoint returned an empty reply")
                return ChatReply(text=text, model=self.model, latency_s=time.monotonic() - started)
            except EndpointError:
                raise
            except (KeyError, IndexError, TypeError) as e:
                raise EndpointError(f"malformed endpoint response: {e}") from e
            except Exception as e:  # transport-level; retry with backoff
                last_error = e
                if attempt < self.RETRIES:
                    time.sleep(self.backoff_s * (2**attempt))
        raise EndpointError(f"chat endpoint failed after {self.RETRIES + 1} attempts: {last_error}")


_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:\d{2})?")
_RUN_ID_RE = re.compile(r"run-[0-9a-f]{8,}")


def normalize_for_fingerprint(messages: list[dict[str, str]]) -> str:
    blob = json.dumps(messages, sort_keys=True, ensure_ascii=False)
    blob = _TIMESTAMP_RE.sub("<ts>", blob)
    blob = _RUN_ID_RE.sub("<run>", blob)
    return blob


def fingerprint(messages: list[dict[str, str]]) -> str:
    return hashlib.sha256(normalize_for_fingerprint(messages).encode("utf-8")).hexdigest()[:32]


def fingerprint_distance(a: str, b: str) -> int:
    """Hamming distance over hex digests (shorter digest padded)."""
    width = max(len(a), len(b))
    a = a.ljust(width, "0")
    b = b.ljust(width, "0")
    return sum(1 for x, y in zip(a, b) if x != y)


@dataclass
class Cassette:
    """Ordered recorded exchanges; REPLAY never falls through to a live call."""

    mode: str = REPLAY
    path: Path | None = None
    entries: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.path is not None:
            self.path = Path(self.path)
            if self.path.exists():
                self.entries = []
                for line in self.path.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    doc = json.loads(line)
                    self.entries.append((doc["fingerprint"], doc["reply"]))
        self._cursor: dict[str, int] = {}

    def record(self, fp: str, reply: str) -> None:
        self.entries.append((fp, reply))
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps({"fingerprint": fp, "reply": reply}, ensure_ascii=False) + "\n")

    def lookup(self, fp: str) -> str:
        matches = [reply for recorded, reply in self.entries if recorded == fp]
        if not matches:
            nearest = None
            if self.entries:
                nearest = min((recorded for recorded, _ in self.entries), key=lambda r: fingerprint_distance(fp, r))
            raise CassetteMiss(fp, nearest)
        # Repeated identical requests replay in recorded order, then stick.
        i = self._cursor.get(fp, 0)
        self._cursor[fp] = i + 1
        return matches[min(i, len(matches) - 1)]


class CassetteChatBackend:
    """RECORD wraps an inner backend and captures replies; REPLAY serves only
    recorded ones."""

    def __init__(self, cassette: Cassette, inner: ChatBackend | None = None):
        self.cassette = cassette
        self.inner = inner
        if cassette.mode == RECORD and inner is None:
            raise BackendFailure("recording requires an inner backend")

    def chat(self, request: ChatRequest) -> ChatReply:
        fp = fingerprint(request.messages)
        if self.cassette.mode == REPLAY:
            return ChatReply(text=self.cassette.lookup(fp), model="replay")
        reply = self.inner.chat(request)
        self.cassette.record(fp, reply.text)
        return reply


class EmbedderBackend(Protocol):
    dim: int

    def embed(self, text: str) -> list[float]: ...


class HashingEmbedder:
    """Deterministic offline embedder.

    Lowercased whitespace tokens are feature-hashed into ``dim`` buckets;
    each token contributes +/-1 with the sign taken from its hash parity.
    The result is L2-normalized, so identical text always embeds identically
    across processes.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for token in text.lower().split():
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = math.sqrt(sum(x * x for x in vec))
        if norm < 1e-12:
            vec[0] = 1.0
            norm = 1.0
        return [x / norm for x in vec]


class LiveEmbedder:
    """Adapter for an embeddings HTTP endpoint (EMBED_BASE_URL)."""

    def __init__(self, base_url: str | None = None, dim: int = 256, transport: Callable | None = None):
        self.base_url = (base_url or os.environ.get("EMBED_BASE_URL", "")).rstrip("/")
        self.dim = dim
        self.transport = transport or default_transport
        if not self.base_url:
            raise BackendFailure("live embedder needs a base URL (EMBED_BASE_URL)")

    def embed(self, text: str) -> list[float]:
        try:
            doc = self.transport(f"{self.base_url}/embeddings", {"input": text}, {}, 60.0)
            vec = [float(x) for x in doc["data"][0]["embedding"]]
        except Exception as e:
            raise EndpointError(f"embedding endpoint failed: {e}") from e
        if len(vec) != self.dim:
            self.dim = len(vec)
        return vec


@dataclass
class BackendSet:
    """Handles one run needs; roles share the chat backend by design."""

    chat: ChatBackend
    embedder: Any = None
    tools: Any = None
