"""statemorph: a self-revising finite-state-machine orchestrator.

A research task runs on an explicit machine of agent phases. A critic judges
each run; failures trigger a constrained repair loop limited to four atomic
edits (add state, delete state, modify transition, revise instruction), and
finished episodes are distilled into a persistent experience pool that warm
starts similar future tasks.
"""

from .backends import BackendSet, Cassette, ChatReply, ChatRequest, HashingEmbedder, ScriptRule, ScriptedChatBackend
from .config import (
    ConditionSpec,
    ForbiddenPattern,
    FsmConfig,
    StateDef,
    TransitionRule,
    deserialize_config,
    serialize_config,
    structurally_equal,
)
from .critic import FailureTag, Verdict, critique, reflect
from .defaults import default_config
from .engine import RunLimits, execute_state, route, run
from .evolve import EvolveLimits, EvolutionOutcome, apply_freeform_rewrite, evolve, propose_ops
from .harness import HarnessSettings, run_bench, run_single, run_sweep
from .memory import (
    ExperiencePool,
    ExperienceRecord,
    RetrievalResult,
    add_record,
    embed,
    retrieve_top_k,
    warm_start,
)
from .ops import AtomicOp, OpLogEntry, apply_op, undo
from .trajectory import StepRecord, ToolCall, Trajectory
from .validate import ValidationReport, validate_config

__version__ = "0.1.0"

__all__ = [
    "AtomicOp",
    "BackendSet",
    "Cassette",
    "ChatReply",
    "ChatRequest",
    "ConditionSpec",
    "EvolveLimits",
    "EvolutionOutcome",
    "ExperiencePool",
    "ExperienceRecord",
    "FailureTag",
    "ForbiddenPattern",
    "FsmConfig",
    "HarnessSettings",
    "HashingEmbedder",
    "OpLogEntry",
    "RetrievalResult",
    "RunLimits",
    "ScriptRule",
    "ScriptedChatBackend",
    "StateDef",
    "StepRecord",
    "ToolCall",
    "Trajectory",
    "TransitionRule",
    "ValidationReport",
    "Verdict",
    "add_record",
    "apply_freeform_rewrite",
    "apply_op",
    "critique",
    "default_config",
    "deserialize_config",
    "embed",
    "evolve",
    "execute_state",
    "propose_ops",
    "reflect",
    "retrieve_top_k",
    "route",
    "run",
    "run_bench",
    "run_single",
    "run_sweep",
    "serialize_config",
    "structurally_equal",
    "undo",
    "validate_config",
    "warm_start",
]
