"""Exception hierarchy shared across the package."""

from __future__ import annotations


class StatemorphError(Exception):
    """Base class for all package errors."""


class SchemaError(StatemorphError):
    """Malformed document; carries a $-rooted path to the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class ConfigInvalid(StatemorphError):
    """A machine config failed validation where a valid one was required."""

    def __init__(self, report):
        super().__init__(f"invalid config: {report.summary()}")
        self.report = report


class OpRejected(StatemorphError):
    """An atomic edit was refused; `code` names the rejection class."""

    STATE_CAP = "STATE_CAP"
    DELETE_INITIAL = "DELETE_INITIAL"
    DELETE_LAST_TERMINAL = "DELETE_LAST_TERMINAL"
    UNKNOWN_TARGET = "UNKNOWN_TARGET"
    WOULD_ORPHAN = "WOULD_ORPHAN"
    FORBIDDEN_BY_MEMORY = "FORBIDDEN_BY_MEMORY"
    INVALID_RESULT = "INVALID_RESULT"

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


class NoValidProposal(StatemorphError):
    """The proposer produced no parseable atomic operation."""


class NoTransitionFired(StatemorphError):
    """No outgoing transition condition held for the current state."""


class RouterParseError(StatemorphError):
    """The routing reply named none of the candidate states."""


class ToolNotPermitted(StatemorphError):
    """A state requested a tool outside its allow list."""


class CriticParseError(StatemorphError):
    """The critic reply could not be parsed into a verdict."""


class BackendFailure(StatemorphError):
    """A chat/embedding backend could not produce a reply."""


class EndpointError(BackendFailure):
    """A live HTTP endpoint failed after retries."""


class ScriptMiss(BackendFailure):
    """No scripted rule matched the request."""


class CassetteMiss(BackendFailure):
    """Replay found no recorded exchange for the request fingerprint."""

    def __init__(self, fingerprint: str, nearest: str | None):
        msg = f"no recorded reply for fingerprint {fingerprint}"
        if nearest:
            msg += f" (nearest recorded: {nearest})"
        super().__init__(msg)
        self.fingerprint = fingerprint
        self.nearest = nearest


class FixtureMiss(StatemorphError):
    """The fixture corpus has no entry for the normalized key."""

    def __init__(self, kind: str, key: str):
        super().__init__(f"no {kind} fixture for key {key!r}")
        self.kind = kind
        self.key = key


class DimensionMismatch(StatemorphError):
    """Embedding dimension differs from the pool's dimension."""


class StorageFailure(StatemorphError):
    """The experience pool could not be persisted."""


class PoolCorrupt(StatemorphError):
    """The pool file contains undecodable lines."""

    def __init__(self, lines: list[int], path: str = ""):
        where = f" in {path}" if path else ""
        super().__init__(f"corrupt pool line(s) {lines}{where}")
        self.lines = lines
        self.path = path
