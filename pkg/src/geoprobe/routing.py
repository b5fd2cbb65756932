"""Probe routing: the three-way deterministic state machine and arbitration.

Every evaluated probe lands in exactly one of three buckets:

* HUMAN_ARBITRATION — the verifier flagged a contradiction, or the
  isomorphism score fell below the lower threshold (topological
  collapse). Automated processing of that packet halts until a human
  verdict (or a replayed one) arrives; nothing ever feeds such output
  back into another engine for judging.
* AGENT_FALLBACK — intent partially preserved; score in [delta, epsilon).
* ACCEPT — score at or above epsilon.

The boundaries are closed on the fallback side at delta and closed on
the accept side at epsilon, so the three predicates partition [0, 1].
"""

from __future__ import annotations

import enum
import hashlib
import json
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

from .attribution import IarModel, Severity, calibrate_gamma
from .errors import DecisionConflictError, GeoprobeError, UnknownPacketError
from .graphs import (
    DEFAULT_CONFIDENCE_FLOOR,
    EditCosts,
    KnowledgeGraph,
    graph_to_wire,
    iso_score,
    parse_verifier_report,
    report_to_graph,
    report_to_wire,
)
from .ledger import Ledger
from .oracle import ProbeEngine

__all__ = [
    "RouteDecision",
    "Thresholds",
    "IntentPacket",
    "EvaluationResult",
    "ArbitrationDecision",
    "ArbitrationQueue",
    "route",
    "evaluate_probe",
    "execute_probe",
    "apply_replay",
    "pseudo_embedding",
]


class RouteDecision(enum.Enum):
    ACCEPT = "ACCEPT"
    AGENT_FALLBACK = "AGENT_FALLBACK"
    HUMAN_ARBITRATION = "HUMAN_ARBITRATION"


@dataclass(frozen=True)
class Thresholds:
    delta: float
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta < self.epsilon <= 1.0:
            raise ValueError(
                f"thresholds must satisfy 0 <= delta < epsilon <= 1, "
                f"got delta={self.delta}, epsilon={self.epsilon}"
            )


@dataclass(frozen=True)
class IntentPacket:
    packet_id: str
    prompt_vector: tuple[float, ...]
    context_depth: int
    g_true: KnowledgeGraph
    timestamp: str

    def __post_init__(self) -> None:
        if self.context_depth < 0:
            raise ValueError("context_depth must be >= 0")


@dataclass(frozen=True)
class EvaluationResult:
    packet_id: str
    isomorphism_score: float
    entropy_estimate: float
    critical_anomaly: bool
    route_decision: RouteDecision

    def __post_init__(self) -> None:
        if self.critical_anomaly and self.route_decision is not RouteDecision.HUMAN_ARBITRATION:
            raise ValueError("anomalous results must route to human arbitration")

    def to_wire(self) -> dict:
        return {
            "packet_id": self.packet_id,
            "isomorphism_score": self.isomorphism_score,
            "entropy_estimate": self.entropy_estimate,
            "critical_anomaly": self.critical_anomaly,
            "route_decision": self.route_decision.value,
        }


@dataclass(frozen=True)
class ArbitrationDecision:
    packet_id: str
    severity: Severity
    arbiter_id: str
    note: str
    decided_at: str

    def to_wire(self) -> dict:
        return {
            "packet_id": self.packet_id,
            "severity": self.severity.value,
            "arbiter_id": self.arbiter_id,
            "note": self.note,
            "decided_at": self.decided_at,
        }


def route(iso: float, anomaly: bool, thresholds: Thresholds) -> RouteDecision:
    """Total routing function: exactly one branch fires for any input."""
    if anomaly or iso < thresholds.delta:
        return RouteDecision.HUMAN_ARBITRATION
    if iso < thresholds.epsilon:
        return RouteDecision.AGENT_FALLBACK
    return RouteDecision.ACCEPT


def pseudo_embedding(text: str, dim: int = 8) -> tuple[float, ...]:
    """Hash-derived unit vector standing in for a real prompt embedding."""
    digest = hashlib.sha256(text.encode()).digest()
    raw = []
    for i in range(dim):
        chunk = digest[(4 * i) % len(digest): (4 * i) % len(digest) + 4]
        raw.append(int.from_bytes(chunk, "big") / 2**32 - 0.5)
    norm = sum(v * v for v in raw) ** 0.5 or 1.0
    return tuple(v / norm for v in raw)


def _inputs_digest(packet: IntentPacket, thresholds: Thresholds, costs: EditCosts) -> str:
    payload = {
        "packet_id": packet.packet_id,
        "prompt_vector": list(packet.prompt_vector),
        "context_depth": packet.context_depth,
        "g_true": graph_to_wire(packet.g_true),
        "timestamp": packet.timestamp,
        "thresholds": [thresholds.delta, thresholds.epsilon],
        "costs": [
            costs.node_insert, costs.node_delete, costs.node_substitute,
            costs.edge_insert, costs.edge_delete, costs.edge_substitute,
        ],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def evaluate_probe(
    packet: IntentPacket,
    engine: ProbeEngine,
    thresholds: Thresholds,
    costs: EditCosts | None = None,
    *,
    aliases: Mapping[str, str] | None = None,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
    features: Mapping[str, float] | None = None,
    packet_meta: Mapping | None = None,
) -> tuple[EvaluationResult, dict]:
    """Probe the engine once, route the outcome, and build the ledger entry.

    Pure apart from the engine call (which is itself deterministic for
    the simulator). Engine output that fails to parse is not a crash: it
    routes to human arbitration as a malformed generation.
    """
    costs = costs or EditCosts()
    reply = engine.probe(packet.packet_id)
    logprobs = reply.token_logprobs
    entropy = (-sum(logprobs) / len(logprobs)) if logprobs else 0.0

    anomaly_reason = None
    try:
        report = parse_verifier_report(reply.raw_document, confidence_floor)
        g_gen = report_to_graph(report, aliases)
        iso = iso_score(g_gen, packet.g_true, costs)
        verifier_anomaly = report.critical_anomaly
        if verifier_anomaly:
            anomaly_reason = report.anomaly_reason
        report_wire = report_to_wire(report)
    except GeoprobeError as exc:
        iso = 0.0
        verifier_anomaly = True
        anomaly_reason = f"malformed generation: {exc}"
        report_wire = None

    decision = route(iso, verifier_anomaly, thresholds)
    if decision is RouteDecision.HUMAN_ARBITRATION and anomaly_reason is None:
        anomaly_reason = "isomorphism score below delta threshold"
    result = EvaluationResult(
        packet_id=packet.packet_id,
        isomorphism_score=iso,
        entropy_estimate=entropy,
        critical_anomaly=decision is RouteDecision.HUMAN_ARBITRATION,
        route_decision=decision,
    )
    entry = {
        "packet_id": packet.packet_id,
        "timestamp": packet.timestamp,
        "inputs_digest": _inputs_digest(packet, thresholds, costs),
        "seed_trace": reply.seed_trace,
        "report": report_wire,
        "anomaly_reason": anomaly_reason,
        "result": result.to_wire(),
    }
    if features is not None:
        entry["features"] = dict(features)
    if packet_meta is not None:
        entry.update(packet_meta)
    return result, entry


def execute_probe(
    packet: IntentPacket,
    engine: ProbeEngine,
    thresholds: Thresholds,
    costs: EditCosts | None = None,
    ledger: Ledger | None = None,
    *,
    aliases: Mapping[str, str] | None = None,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
    features: Mapping[str, float] | None = None,
    packet_meta: Mapping | None = None,
) -> EvaluationResult:
    """Probe, route, and record: the entry lands in the ledger atomically
    with its inputs digest and seed trace."""
    result, entry = evaluate_probe(
        packet,
        engine,
        thresholds,
        costs,
        aliases=aliases,
        confidence_floor=confidence_floor,
        features=features,
        packet_meta=packet_meta,
    )
    if ledger is not None:
        ledger.append("evaluation", entry)
    return result


class ArbitrationQueue:
    """Pending human-arbitration items derived from a ledger.

    An evaluation routed to HUMAN_ARBITRATION stays pending until exactly
    one decision record references it; duplicates are conflicts. The
    queue never mutates evaluation records — decisions are appended as
    their own records. Decision writes are serialized so concurrent
    submissions cannot both pass the conflict check.
    """

    def __init__(self, ledger: Ledger):
        self.ledger = ledger
        self._write_lock = threading.Lock()

    def _decided(self) -> set[str]:
        return {r["packet_id"] for r in self.ledger.of_kind("decision")}

    def pending(self) -> list[dict]:
        decided = self._decided()
        return [
            r
            for r in self.ledger.of_kind("evaluation")
            if r["result"]["route_decision"] == RouteDecision.HUMAN_ARBITRATION.value
            and r["packet_id"] not in decided
        ]

    def find(self, packet_id: str) -> dict | None:
        for r in self.ledger.of_kind("evaluation"):
            if r["packet_id"] == packet_id:
                return r
        return None

    def decision_for(self, packet_id: str) -> dict | None:
        for r in self.ledger.of_kind("decision"):
            if r["packet_id"] == packet_id:
                return r
        return None

    def submit(self, decision: ArbitrationDecision, model: IarModel, eta: float = 0.1) -> IarModel:
        """Record a human verdict and recalibrate the penalty weight.

        Returns the updated model. Raises UnknownPacketError when the
        packet has no pending arbitration entry and DecisionConflictError
        when a decision already exists.
        """
        with self._write_lock:
            entry = self.find(decision.packet_id)
            if entry is None or entry["result"]["route_decision"] != RouteDecision.HUMAN_ARBITRATION.value:
                raise UnknownPacketError(
                    f"no arbitration entry for packet {decision.packet_id!r}"
                )
            if self.decision_for(decision.packet_id) is not None:
                raise DecisionConflictError(
                    f"decision already recorded for packet {decision.packet_id!r}"
                )
            updated = calibrate_gamma(model, decision.severity, eta)
            self.ledger.append(
                "decision", {**decision.to_wire(), "gamma_after": updated.gamma}
            )
            return updated


def apply_replay(
    queue: ArbitrationQueue,
    replay_entries: Sequence[Mapping],
    model: IarModel,
    eta: float = 0.1,
    default_decided_at: str = "1970-01-01T00:00:00Z",
) -> tuple[IarModel, list[ArbitrationDecision]]:
    """Apply a recorded decision sequence for headless runs.

    Each entry carries a severity and optionally a packet_id; entries
    without one resolve to the oldest pending item at application time,
    so a replay file written without knowledge of concrete packet ids
    still lands deterministically. The end state is identical to
    submitting the same decisions interactively.
    """
    applied = []
    for i, item in enumerate(replay_entries):
        severity = Severity(item["severity"])
        packet_id = item.get("packet_id")
        if packet_id is None:
            pending = queue.pending()
            if not pending:
                raise UnknownPacketError(
                    f"replay entry {i} has no packet_id and the queue is empty"
                )
            packet_id = pending[0]["packet_id"]
        decision = ArbitrationDecision(
            packet_id=packet_id,
            severity=severity,
            arbiter_id=str(item.get("arbiter_id", "replay")),
            note=str(item.get("note", "")),
            decided_at=str(item.get("decided_at", default_decided_at)),
        )
        model = queue.submit(decision, model, eta)
        applied.append(decision)
    return model, applied
