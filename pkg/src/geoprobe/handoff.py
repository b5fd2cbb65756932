"""Structured intent handoff with sandboxed, tokenized permissions.

An intent tensor is the strict wire payload a router hands to a
specialist agent: authorization block (scoped permissions, keyed-hash
signature, expiry window), session context, and strongly typed task
parameters. Nothing generative happens downstream of the handoff — the
broker resolves the execution vector to a registered agent, and every
action the agent takes must pass an authorization gate that re-checks
signature, expiry, and scope, leaving an audit line either way.

Signatures are HMAC-SHA256 over the canonical serialization (sorted
keys, no whitespace) of the tensor with the signature field blanked, so
any byte-level mutation of a signed tensor invalidates it. Clocks are
always injected; nothing reads wall time ambiently, which keeps expiry
behavior reproducible.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import Mapping, Protocol, Sequence

from .errors import RoutingError, SchemaError, TypeFieldError, VersionError

__all__ = [
    "AuthToken",
    "SessionContext",
    "TargetEntity",
    "StrictConstraints",
    "TaskParams",
    "IntentStateTensor",
    "Authorization",
    "AuditLine",
    "Computation",
    "AgentOutput",
    "ExecutionReceipt",
    "PermissionGate",
    "PermissionDenied",
    "AgentRegistry",
    "Broker",
    "parse_tensor",
    "tensor_to_wire",
    "canonical_tensor_bytes",
    "sign_tensor",
    "verify_signature",
    "authorize",
    "build_receipt",
]

SUPPORTED_VERSIONS = ("DAH_v1.2",)

ALLOW = "OK"
DENY_BAD_SIGNATURE = "BAD_SIGNATURE"
DENY_EXPIRED = "EXPIRED"
DENY_OUT_OF_SCOPE = "OUT_OF_SCOPE"
DENY_REPLAY = "REPLAY"


@dataclass(frozen=True)
class AuthToken:
    user_id: str
    session_token: str
    atomic_permissions: tuple[str, ...]
    cryptographic_signature: str
    expiration_window_seconds: int


@dataclass(frozen=True)
class SessionContext:
    session_depth: int
    semantic_history_vectors: tuple[str, ...]
    user_preference_profile: Mapping[str, str]


@dataclass(frozen=True)
class TargetEntity:
    entity_name: str
    lei_code: str
    resolution_confidence: float


@dataclass(frozen=True)
class StrictConstraints:
    portfolio_value_usd: float
    target_annualized_yield: float
    max_asset_turnover_ratio: float
    rebalancing_algorithm: str


@dataclass(frozen=True)
class TaskParams:
    target_entity: TargetEntity
    execution_vector: str
    strict_constraints: StrictConstraints
    expected_output_modalities: tuple[str, ...]


@dataclass(frozen=True)
class IntentStateTensor:
    protocol_version: str
    tensor_id: str
    timestamp: str
    u_auth: AuthToken
    c_context: SessionContext
    p_params: TaskParams

    @property
    def issued_at(self) -> datetime:
        return _parse_instant(self.timestamp)

    @property
    def expires_at(self) -> datetime:
        return self.issued_at + timedelta(seconds=self.u_auth.expiration_window_seconds)


def _parse_instant(text: str) -> datetime:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


# --------------------------------------------------------------------------
# Wire codec

def _get(data: Mapping, path: str):
    node = data
    for part in path.split("."):
        if not isinstance(node, Mapping) or part not in node:
            raise SchemaError(f"intent tensor missing required field: {path!r}")
        node = node[part]
    return node


def _number(data: Mapping, path: str, *, minimum=None, maximum=None) -> float:
    value = _get(data, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeFieldError(f"{path} must be a number, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise TypeFieldError(f"{path} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise TypeFieldError(f"{path} must be <= {maximum}, got {value}")
    return float(value)


def _integer(data: Mapping, path: str, *, minimum=None) -> int:
    value = _get(data, path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeFieldError(f"{path} must be an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise TypeFieldError(f"{path} must be >= {minimum}, got {value}")
    return value


def _string(data: Mapping, path: str) -> str:
    value = _get(data, path)
    if not isinstance(value, str):
        raise TypeFieldError(f"{path} must be a string, got {type(value).__name__}")
    return value


def _string_list(data: Mapping, path: str) -> tuple[str, ...]:
    value = _get(data, path)
    if not isinstance(value, Sequence) or isinstance(value, str):
        raise TypeFieldError(f"{path} must be a list of strings")
    for i, item in enumerate(value):
        if not isinstance(item, str):
            raise TypeFieldError(f"{path}[{i}] must be a string")
    return tuple(value)


def parse_tensor(doc: str | Mapping) -> IntentStateTensor:
    """Parse and validate an intent tensor wire document."""
    if isinstance(doc, str):
        try:
            data = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"intent tensor is not valid JSON: {exc}") from exc
    else:
        data = doc
    if not isinstance(data, Mapping):
        raise SchemaError("intent tensor must be a JSON object")

    version = _string(data, "protocol_version")
    if version not in SUPPORTED_VERSIONS:
        raise VersionError(
            f"unknown protocol_version {version!r}; supported: {', '.join(SUPPORTED_VERSIONS)}"
        )

    tensor_id = _string(data, "tensor_id")
    timestamp = _string(data, "timestamp")
    try:
        _parse_instant(timestamp)
    except ValueError as exc:
        raise TypeFieldError(f"timestamp is not a valid instant: {exc}") from exc

    auth = AuthToken(
        user_id=_string(data, "u_auth.user_id"),
        session_token=_string(data, "u_auth.session_token"),
        atomic_permissions=_string_list(data, "u_auth.atomic_permissions"),
        cryptographic_signature=_string(data, "u_auth.cryptographic_signature"),
        expiration_window_seconds=_integer(data, "u_auth.expiration_window_seconds", minimum=1),
    )

    profile_raw = _get(data, "c_context.user_preference_profile")
    if not isinstance(profile_raw, Mapping):
        raise TypeFieldError("c_context.user_preference_profile must be an object")
    for k, v in profile_raw.items():
        if not isinstance(v, str):
            raise TypeFieldError(f"c_context.user_preference_profile[{k!r}] must be a string")
    context = SessionContext(
        session_depth=_integer(data, "c_context.session_depth", minimum=0),
        semantic_history_vectors=_string_list(data, "c_context.semantic_history_vectors"),
        user_preference_profile=dict(profile_raw),
    )

    params = TaskParams(
        target_entity=TargetEntity(
            entity_name=_string(data, "p_params.target_entity.entity_name"),
            lei_code=_string(data, "p_params.target_entity.lei_code"),
            resolution_confidence=_number(
                data, "p_params.target_entity.resolution_confidence", minimum=0.0, maximum=1.0
            ),
        ),
        execution_vector=_string(data, "p_params.execution_vector"),
        strict_constraints=StrictConstraints(
            portfolio_value_usd=_number(
                data, "p_params.strict_constraints.portfolio_value_usd", minimum=0.0
            ),
            target_annualized_yield=_number(
                data, "p_params.strict_constraints.target_annualized_yield",
                minimum=0.0, maximum=1.0,
            ),
            max_asset_turnover_ratio=_number(
                data, "p_params.strict_constraints.max_asset_turnover_ratio",
                minimum=0.0, maximum=1.0,
            ),
            rebalancing_algorithm=_string(
                data, "p_params.strict_constraints.rebalancing_algorithm"
            ),
        ),
        expected_output_modalities=_string_list(data, "p_params.expected_output_modalities"),
    )
    if params.strict_constraints.portfolio_value_usd <= 0.0:
        raise TypeFieldError("p_params.strict_constraints.portfolio_value_usd must be > 0")

    return IntentStateTensor(version, tensor_id, timestamp, auth, context, params)


def tensor_to_wire(tensor: IntentStateTensor) -> dict:
    """Wire form with the exact published key set and nesting."""
    return {
        "protocol_version": tensor.protocol_version,
        "tensor_id": tensor.tensor_id,
        "timestamp": tensor.timestamp,
        "u_auth": {
            "user_id": tensor.u_auth.user_id,
            "session_token": tensor.u_auth.session_token,
            "atomic_permissions": list(tensor.u_auth.atomic_permissions),
            "cryptographic_signature": tensor.u_auth.cryptographic_signature,
            "expiration_window_seconds": tensor.u_auth.expiration_window_seconds,
        },
        "c_context": {
            "session_depth": tensor.c_context.session_depth,
            "semantic_history_vectors": list(tensor.c_context.semantic_history_vectors),
            "user_preference_profile": dict(tensor.c_context.user_preference_profile),
        },
        "p_params": {
            "target_entity": {
                "entity_name": tensor.p_params.target_entity.entity_name,
                "lei_code": tensor.p_params.target_entity.lei_code,
                "resolution_confidence": tensor.p_params.target_entity.resolution_confidence,
            },
            "execution_vector": tensor.p_params.execution_vector,
            "strict_constraints": {
                "portfolio_value_usd": tensor.p_params.strict_constraints.portfolio_value_usd,
                "target_annualized_yield": tensor.p_params.strict_constraints.target_annualized_yield,
                "max_asset_turnover_ratio": tensor.p_params.strict_constraints.max_asset_turnover_ratio,
                "rebalancing_algorithm": tensor.p_params.strict_constraints.rebalancing_algorithm,
            },
            "expected_output_modalities": list(tensor.p_params.expected_output_modalities),
        },
    }


def canonical_tensor_bytes(tensor: IntentStateTensor) -> bytes:
    """Canonical serialization: sorted keys, compact separators, UTF-8."""
    return json.dumps(
        tensor_to_wire(tensor), sort_keys=True, separators=(",", ":")
    ).encode()


def _signing_payload(tensor: IntentStateTensor) -> bytes:
    unsigned = replace(
        tensor, u_auth=replace(tensor.u_auth, cryptographic_signature="")
    )
    return canonical_tensor_bytes(unsigned)


def sign_tensor(tensor: IntentStateTensor, broker_key: bytes) -> IntentStateTensor:
    """Return a copy of the tensor carrying a fresh keyed-hash signature."""
    digest = hmac.new(broker_key, _signing_payload(tensor), hashlib.sha256).hexdigest()
    return replace(tensor, u_auth=replace(tensor.u_auth, cryptographic_signature=digest))


def verify_signature(tensor: IntentStateTensor, broker_key: bytes) -> bool:
    expected = hmac.new(broker_key, _signing_payload(tensor), hashlib.sha256).hexdigest()
    return hmac.compare_digest(expected, tensor.u_auth.cryptographic_signature)


# --------------------------------------------------------------------------
# Authorization

@dataclass(frozen=True)
class Authorization:
    allowed: bool
    reason: str

    def __bool__(self) -> bool:
        return self.allowed


def authorize(
    tensor: IntentStateTensor,
    requested_action: str,
    now: datetime,
    broker_key: bytes,
) -> Authorization:
    """Decide one action against the tensor's permission token.

    Allows only when the signature verifies, the presentation instant
    falls inside the expiry window, and the action is one of the granted
    scopes. Denials are values with distinguishable reasons, not errors.
    """
    if not verify_signature(tensor, broker_key):
        return Authorization(False, DENY_BAD_SIGNATURE)
    if now.tzinfo is None:
        now = now.replace(tzinfo=timezone.utc)
    if now >= tensor.expires_at:
        return Authorization(False, DENY_EXPIRED)
    if requested_action not in tensor.u_auth.atomic_permissions:
        return Authorization(False, DENY_OUT_OF_SCOPE)
    return Authorization(True, ALLOW)


# --------------------------------------------------------------------------
# Broker and receipts

@dataclass(frozen=True)
class AuditLine:
    action: str
    allowed: bool
    reason: str

    def to_wire(self) -> dict:
        return {"action": self.action, "allowed": self.allowed, "reason": self.reason}


@dataclass(frozen=True)
class Computation:
    """One deterministic computation an agent performed, with its outputs.

    Receipt fields must trace back to one of these by id; anything on a
    receipt that no computation produced counts as a fabricated claim.
    """

    computation_id: str
    operation: str
    inputs: dict
    outputs: dict

    def to_wire(self) -> dict:
        return {
            "computation_id": self.computation_id,
            "operation": self.operation,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }


class PermissionDenied(Exception):
    def __init__(self, action: str, reason: str):
        self.action = action
        self.reason = reason
        super().__init__(f"action {action!r} denied: {reason}")


class PermissionGate:
    """Per-handoff authorization checkpoint handed to the agent.

    Agents cannot act around it: every action goes through require(),
    which re-runs the full authorization decision and records an audit
    line whether it passes or not.
    """

    def __init__(self, tensor: IntentStateTensor, broker_key: bytes, now: datetime):
        self._tensor = tensor
        self._key = broker_key
        self._now = now
        self.audit: list[AuditLine] = []

    def require(self, action: str) -> None:
        decision = authorize(self._tensor, action, self._now, self._key)
        self.audit.append(AuditLine(action, decision.allowed, decision.reason))
        if not decision.allowed:
            raise PermissionDenied(action, decision.reason)


@dataclass(frozen=True)
class AgentOutput:
    computations: tuple[Computation, ...]
    weights: tuple[float, ...] | None = None
    achieved_yield: float | None = None
    variance: float | None = None
    supply_chain_ref: str | None = None
    traces: Mapping[str, str] | None = None  # receipt field -> computation id


class SpecialistAgent(Protocol):
    required_scopes: tuple[str, ...]

    def execute(self, tensor: IntentStateTensor, gate: PermissionGate) -> AgentOutput: ...


@dataclass(frozen=True)
class ExecutionReceipt:
    status: str  # EXECUTED | DENIED
    tensor_id: str
    execution_vector: str
    weights: tuple[float, ...] | None
    achieved_yield: float | None
    variance: float | None
    supply_chain_ref: str | None
    deny_reason: str | None
    traces: dict
    audit: tuple[AuditLine, ...]
    computation_log: tuple[Computation, ...]

    def to_wire(self) -> dict:
        return {
            "status": self.status,
            "tensor_id": self.tensor_id,
            "execution_vector": self.execution_vector,
            "weights": list(self.weights) if self.weights is not None else None,
            "achieved_yield": self.achieved_yield,
            "variance": self.variance,
            "supply_chain_ref": self.supply_chain_ref,
            "deny_reason": self.deny_reason,
            "traces": dict(self.traces),
            "audit": [line.to_wire() for line in self.audit],
            "computation_log": [c.to_wire() for c in self.computation_log],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_wire(), sort_keys=True, separators=(",", ":"))


def build_receipt(
    tensor: IntentStateTensor,
    audit: Sequence[AuditLine],
    output: AgentOutput | None = None,
    deny_reason: str | None = None,
) -> ExecutionReceipt:
    """Assemble the structured result of a handoff.

    An executed receipt carries the agent's numbers plus the trace map
    binding each numeric field to the computation that produced it; a
    denied receipt carries no numeric payload at all.
    """
    if output is None:
        return ExecutionReceipt(
            status="DENIED",
            tensor_id=tensor.tensor_id,
            execution_vector=tensor.p_params.execution_vector,
            weights=None,
            achieved_yield=None,
            variance=None,
            supply_chain_ref=None,
            deny_reason=deny_reason or "unspecified",
            traces={},
            audit=tuple(audit),
            computation_log=(),
        )
    return ExecutionReceipt(
        status="EXECUTED",
        tensor_id=tensor.tensor_id,
        execution_vector=tensor.p_params.execution_vector,
        weights=output.weights,
        achieved_yield=output.achieved_yield,
        variance=output.variance,
        supply_chain_ref=output.supply_chain_ref,
        deny_reason=None,
        traces=dict(output.traces or {}),
        audit=tuple(audit),
        computation_log=output.computations,
    )


class AgentRegistry:
    def __init__(self):
        self._agents: dict[str, SpecialistAgent] = {}

    def register(self, execution_vector: str, agent: SpecialistAgent) -> None:
        self._agents[execution_vector] = agent

    def resolve(self, execution_vector: str) -> SpecialistAgent:
        try:
            return self._agents[execution_vector]
        except KeyError:
            raise RoutingError(
                f"no specialist agent registered for execution vector "
                f"{execution_vector!r}"
            ) from None


class Broker:
    """Routes intent tensors to registered agents under authorization.

    Each broker session enforces single-use tensor ids: replaying a
    tensor id yields a DENIED receipt without reaching any agent.
    """

    def __init__(self, broker_key: bytes, registry: AgentRegistry):
        self.broker_key = broker_key
        self.registry = registry
        self._seen_tensor_ids: set[str] = set()
        self._replay_lock = threading.Lock()

    def handoff(self, tensor: IntentStateTensor, now: datetime) -> ExecutionReceipt:
        with self._replay_lock:
            if tensor.tensor_id in self._seen_tensor_ids:
                return build_receipt(tensor, audit=(), deny_reason=DENY_REPLAY)
            self._seen_tensor_ids.add(tensor.tensor_id)

        agent = self.registry.resolve(tensor.p_params.execution_vector)
        gate = PermissionGate(tensor, self.broker_key, now)
        try:
            for scope in agent.required_scopes:
                gate.require(scope)
        except PermissionDenied as denied:
            return build_receipt(tensor, gate.audit, deny_reason=denied.reason)

        # The pre-flight above proves the declared scopes; the agent still
        # re-checks through the same gate on every action it takes.
        run_gate = PermissionGate(tensor, self.broker_key, now)
        try:
            output = agent.execute(tensor, run_gate)
        except PermissionDenied as denied:
            return build_receipt(tensor, run_gate.audit, deny_reason=denied.reason)
        return build_receipt(tensor, run_gate.audit, output=output)
