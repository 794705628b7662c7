"""Cross-task experience pool: persistence, retrieval, and warm starting.

The pool is an append-only JSONL file, one record per line, fsynced before
``add_record`` returns. Retrieval is a flat exhaustive cosine scan; at the
scale a single operator accumulates, exactness beats an index. Successful
records seed new machines (the best sufficiently-similar one wins); failed
records contribute their forbidden patterns as negative constraints.
"""

from __future__ import annotations

import json
import logging
import math
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .config import DEFAULT_MAX_STATES, ForbiddenPattern, FsmConfig
from .errors import DimensionMismatch, PoolCorrupt, SchemaError, StorageFailure
from .ops import AtomicOp
from .validate import validate_config

logger = logging.getLogger(__name__)

SUCCESS = "SUCCESS"
FAILURE = "FAILURE"

DEFAULT_EMBEDDING_DIM = 256
DEFAULT_TOP_K = 3
DEFAULT_SIM_THRESHOLD = 0.55


def embed(text: str, embedder) -> list[float]:
    """Embed text through the backend and L2-normalize the result."""
    if not text or not text.strip():
        raise ValueError("cannot embed empty text")
    vec = [float(x) for x in embedder.embed(text)]
    norm = math.sqrt(sum(x * x for x in vec))
    if norm < 1e-12:
        vec = [0.0] * len(vec)
        vec[0] = 1.0
        norm = 1.0
    return [x / norm for x in vec]


def cosine(a: list[float], b: list[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


@dataclass
class ExperienceRecord:
    """One distilled episode: what was asked, what machine ended up working
    (or how it failed), and why."""

    query_text: str
    query_embedding: list[float]
    outcome: str
    config_snapshot: FsmConfig
    op_sequence: list[AtomicOp] = field(default_factory=list)
    rationale: str = ""
    failure_constraints: list[ForbiddenPattern] = field(default_factory=list)
    id: str = ""
    created_at: int = -1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "created_at": self.created_at,
            "outcome": self.outcome,
            "query_text": self.query_text,
            "query_embedding": self.query_embedding,
            "config_snapshot": self.config_snapshot.to_dict(),
            "op_sequence": [op.to_dict() for op in self.op_sequence],
            "rationale": self.rationale,
            "failure_constraints": [p.to_dict() for p in self.failure_constraints],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperienceRecord":
        return cls(
            id=doc.get("id", ""),
            created_at=doc.get("created_at", -1),
            outcome=doc["outcome"],
            query_text=doc.get("query_text", ""),
            query_embedding=[float(x) for x in doc["query_embedding"]],
            config_snapshot=FsmConfig.from_dict(doc["config_snapshot"]),
            op_sequence=[AtomicOp.from_dict(o) for o in doc.get("op_sequence", [])],
            rationale=doc.get("rationale", ""),
            failure_constraints=[
                ForbiddenPattern.from_dict(p, "$.failure_constraints") for p in doc.get("failure_constraints", [])
            ],
        )


@dataclass
class RetrievalResult:
    record: ExperienceRecord
    similarity: float


class ExperiencePool:
    """Append-only record store. Reads are lock-free; appends serialize
    through a single writer lock."""

    def __init__(self, path: str | Path | None = None, embedding_dim: int = DEFAULT_EMBEDDING_DIM):
        self.path = Path(path) if path is not None else None
        self.embedding_dim = embedding_dim
        self.records: list[ExperienceRecord] = []
        self.truncated_tail_line: int | None = None
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        self.records = []
        self.truncated_tail_line = None
        lines = self.path.read_text(encoding="utf-8").splitlines()
        bad: list[int] = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                self.records.append(ExperienceRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError, SchemaError):
                bad.append(lineno)
        if bad:
            # A torn final line is expected after a crash mid-append: drop it.
            if bad == [len(lines)]:
                self.truncated_tail_line = bad[0]
                logger.warning("pool %s: dropped torn final line %d", self.path, bad[0])
            else:
                raise PoolCorrupt(bad, str(self.path))
        if self.records:
            self.embedding_dim = len(self.records[0].query_embedding)

    def __len__(self) -> int:
        return len(self.records)

    def successes(self) -> list[ExperienceRecord]:
        return [r for r in self.records if r.outcome == SUCCESS]

    def failures(self) -> list[ExperienceRecord]:
        return [r for r in self.records if r.outcome == FAILURE]

    def add(self, record: ExperienceRecord) -> ExperienceRecord:
        return add_record(self, record)

    def scan_problems(self) -> list[str]:
        """Re-check pool invariants; used by the verify command."""
        problems: list[str] = []
        seen_ids: set[str] = set()
        last_created = -1
        for r in self.records:
            if r.id in seen_ids:
                problems.append(f"duplicate record id {r.id!r}")
            seen_ids.add(r.id)
            if r.created_at <= last_created:
                problems.append(f"created_at not strictly increasing at {r.id!r}")
            last_created = r.created_at
            if len(r.query_embedding) != self.embedding_dim:
                problems.append(f"{r.id!r}: embedding dim {len(r.query_embedding)} != {self.embedding_dim}")
            norm = math.sqrt(sum(x * x for x in r.query_embedding))
            if abs(norm - 1.0) > 1e-6:
                problems.append(f"{r.id!r}: embedding norm {norm:.8f} not unit")
            if r.outcome == SUCCESS and r.failure_constraints:
                problems.append(f"{r.id!r}: SUCCESS record carries failure constraints")
            if r.outcome not in (SUCCESS, FAILURE):
                problems.append(f"{r.id!r}: unknown outcome {r.outcome!r}")
        return problems


def add_record(pool: ExperiencePool, record: ExperienceRecord) -> ExperienceRecord:
    """Append one record, durably, assigning its id and creation ordinal."""
    if len(record.query_embedding) != pool.embedding_dim:
        raise DimensionMismatch(
            f"record embedding dim {len(record.query_embedding)} != pool dim {pool.embedding_dim}"
        )
    with pool._lock:
        ordinal = pool.records[-1].created_at + 1 if pool.records else 0
        stored = replace(
            record,
            id=record.id or f"r{ordinal:06d}",
            created_at=ordinal,
        )
        if any(r.id == stored.id for r in pool.records):
            raise StorageFailure(f"record id {stored.id!r} already present")
        if pool.path is not None:
            try:
                with open(pool.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(stored.to_dict(), ensure_ascii=False) + "\n")
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as e:
                raise StorageFailure(str(e)) from e
        pool.records.append(stored)
    return stored


def retrieve_top_k(
    pool: ExperiencePool,
    query_embedding: list[float],
    k: int,
    flt: str = "ALL",
) -> list[RetrievalResult]:
    """The k most cosine-similar records under the filter; ties break on
    creation order. Exhaustive scan, exact by construction."""
    if k <= 0:
        return []
    if flt == "SUCCESS_ONLY":
        candidates: Iterable[ExperienceRecord] = pool.successes()
    elif flt == "FAILURE_ONLY":
        candidates = pool.failures()
    else:
        candidates = pool.records
    scored = [RetrievalResult(r, cosine(query_embedding, r.query_embedding)) for r in candidates]
    scored.sort(key=lambda res: (-res.similarity, res.record.created_at))
    return scored[:k]


def warm_start(
    default_config: FsmConfig,
    query: str,
    pool: ExperiencePool | None,
    embedder,
    k: int = DEFAULT_TOP_K,
    sim_threshold: float = DEFAULT_SIM_THRESHOLD,
    max_states: int = DEFAULT_MAX_STATES,
) -> FsmConfig:
    """Build the starting machine for a query: adopt the best similar past
    success (when convincing and still valid) and attach every retrieved
    failure's constraints."""
    base = default_config.clone()
    if pool is None or len(pool) == 0:
        return base
    query_embedding = embed(query, embedder)
    results = retrieve_top_k(pool, query_embedding, k, "ALL")

    best_success = next((res for res in results if res.record.outcome == SUCCESS), None)
    if best_success is not None and best_success.similarity >= sim_threshold:
        candidate = best_success.record.config_snapshot.clone()
        if validate_config(candidate, max_states=max_states).ok:
            logger.info(
                "warm start from %s (similarity %.3f)", best_success.record.id, best_success.similarity
            )
            base = candidate
        else:
            logger.warning("stale prior %s fails validation; using default", best_success.record.id)

    seen = {p.key() for p in base.negative_constraints}
    for res in results:
        if res.record.outcome != FAILURE:
            continue
        for pattern in res.record.failure_constraints:
            if pattern.key() not in seen:
                seen.add(pattern.key())
                base.negative_constraints.append(
                    ForbiddenPattern.from_dict(pattern.to_dict(), "$.failure_constraints")
                )
    return base
