"""Seeded simulated generative engine.

The simulator holds a ground-truth knowledge graph, a pool of decoy
(hallucinated) facts, and a clock. Each probe re-emits every ground-truth
relation independently with probability equal to the confidence curve at
the current clock; a dropped relation is replaced by a decoy with
probability equal to the perturbation sensitivity, or silently omitted.
Emitted entities are the endpoints of emitted relations, so isolated
ground-truth entities never appear in output — keep fixtures free of
them when exact reproduction at time zero matters.

The white-box channel synthesizes one log-probability per ground-truth
fact attempt: ln(retention probability) plus a small seeded jitter,
clipped to zero, so the mean surprisal of a response tracks the same
decay law the black-box channel exhibits.

All randomness derives from SHA-256 of (seed, packet_id), making every
response a pure function of (corpus state, packet id, seed).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .decay import DecayParams, EntropyTrajectory, confidence_at
from .graphs import Entity, KnowledgeGraph, Relation, VerifierReport, report_to_wire

__all__ = [
    "CorpusState",
    "OracleResponse",
    "EngineReply",
    "ProbeEngine",
    "SimulatedEngine",
    "RemoteEngineStub",
    "generate",
    "logprob_entropy",
    "advance_clock",
    "derive_seed",
]

_MIN_RETENTION_FOR_LOG = 1e-12
_LOGPROB_JITTER = 0.05


@dataclass(frozen=True)
class CorpusState:
    """Immutable snapshot of the simulated retrieval corpus."""

    ground_truth: KnowledgeGraph
    decoy_entities: tuple[Entity, ...]
    decoy_relations: tuple[Relation, ...]
    clock: float
    params: DecayParams
    trajectory: EntropyTrajectory

    def __post_init__(self) -> None:
        truth_ids = set(self.ground_truth.entities)
        decoy_ids = {e.entity_id for e in self.decoy_entities}
        overlap = truth_ids & decoy_ids
        if overlap:
            raise ValueError(f"decoy entities collide with ground truth: {sorted(overlap)}")
        known = truth_ids | decoy_ids
        for r in self.decoy_relations:
            for endpoint in (r.source, r.target):
                if endpoint not in known:
                    raise ValueError(
                        f"decoy relation references unknown entity {endpoint!r}"
                    )


@dataclass(frozen=True)
class OracleResponse:
    report: VerifierReport
    token_logprobs: tuple[float, ...]
    seed_trace: str

    def __post_init__(self) -> None:
        if any(lp > 0.0 for lp in self.token_logprobs):
            raise ValueError("token log-probabilities must be <= 0")


def derive_seed(seed: int, packet_id: str) -> int:
    """Stable per-packet seed: SHA-256 of the master seed and packet id."""
    digest = hashlib.sha256(f"{seed}|{packet_id}".encode()).hexdigest()
    return int(digest[:16], 16)


def generate(corpus: CorpusState, packet_id: str, seed: int) -> OracleResponse:
    """Emit one simulated response for a probe packet.

    Deterministic given (corpus, packet_id, seed). The report flags a
    critical anomaly when two emitted decoys claim different targets for
    the same (source, relation_type) slot — a self-contradiction.
    """
    truth = corpus.ground_truth
    if len(truth.relations) == 0:
        raise ValueError("corpus ground truth has no relations to probe")
    child_seed = derive_seed(seed, packet_id)
    rng = np.random.default_rng(child_seed)
    seed_trace = f"{seed}/{packet_id}#{child_seed:016x}"

    p = min(1.0, max(0.0, confidence_at(corpus.params, corpus.trajectory, corpus.clock)))
    decoy_prob = corpus.params.entropy_sensitivity
    decoy_map = {e.entity_id: e for e in corpus.decoy_entities}

    emitted: list[tuple[Relation, bool]] = []  # (relation, is_decoy)
    available = list(range(len(corpus.decoy_relations)))
    logprobs: list[float] = []
    base_lp = math.log(max(p, _MIN_RETENTION_FOR_LOG))
    for relation in truth.relations:
        retained = rng.random() < p
        logprobs.append(min(0.0, base_lp + rng.uniform(-_LOGPROB_JITTER, _LOGPROB_JITTER)))
        if retained:
            emitted.append((relation, False))
        elif available and rng.random() < decoy_prob:
            idx = available.pop(int(rng.integers(len(available))))
            emitted.append((corpus.decoy_relations[idx], True))

    entities: dict[str, Entity] = {}
    for relation, _ in emitted:
        for endpoint in (relation.source, relation.target):
            if endpoint not in entities:
                entities[endpoint] = (
                    truth.entities.get(endpoint) or decoy_map[endpoint]
                )

    anomaly_reason = None
    slots: dict[tuple[str, str], set[str]] = {}
    for relation, is_decoy in emitted:
        if not is_decoy:
            continue
        key = (relation.source, relation.relation_type)
        targets = slots.setdefault(key, set())
        targets.add(relation.target)
        if len(targets) > 1 and anomaly_reason is None:
            anomaly_reason = (
                f"contradictory claims for {relation.source!r} "
                f"via {relation.relation_type!r}"
            )

    seen_triples: set[tuple[str, str, str]] = set()
    unique_relations = []
    for relation, _ in emitted:
        if relation.triple not in seen_triples:
            seen_triples.add(relation.triple)
            unique_relations.append(relation)

    report = VerifierReport(
        extracted_entities=tuple(entities.values()),
        extracted_relations=tuple(unique_relations),
        critical_anomaly=anomaly_reason is not None,
        anomaly_reason=anomaly_reason,
    )
    return OracleResponse(report, tuple(logprobs), seed_trace)


def logprob_entropy(response: OracleResponse) -> float:
    """Mean surprisal of the response tokens, in nats."""
    if len(response.token_logprobs) == 0:
        raise ValueError("response carries no token log-probabilities")
    return -math.fsum(response.token_logprobs) / len(response.token_logprobs)


def advance_clock(corpus: CorpusState, dt: float) -> CorpusState:
    """Pure clock transition; the original state is untouched."""
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return dataclasses.replace(corpus, clock=corpus.clock + dt)


@dataclass(frozen=True)
class EngineReply:
    """What any probe target hands back: a raw document plus logprobs."""

    raw_document: str
    token_logprobs: tuple[float, ...]
    seed_trace: str


class ProbeEngine(Protocol):
    def probe(self, packet_id: str) -> EngineReply: ...


class SimulatedEngine:
    """Default probe target: the seeded simulator defined above."""

    def __init__(self, corpus: CorpusState, master_seed: int):
        self.corpus = corpus
        self.master_seed = master_seed

    def probe(self, packet_id: str) -> EngineReply:
        response = generate(self.corpus, packet_id, self.master_seed)
        raw = json.dumps(report_to_wire(response.report), sort_keys=True, separators=(",", ":"))
        return EngineReply(raw, response.token_logprobs, response.seed_trace)


class RemoteEngineStub:
    """Interface stub for probing a remote engine over HTTP.

    Declared wire contract (not exercised anywhere in this package):

        POST {base_url}/probe
        request body:  {"packet_id": str, "seed": int}
        response body: the verifier output document (extracted_entities,
                       extracted_relations, critical_anomaly,
                       anomaly_reason) plus "token_logprobs": [float].

    Instances exist so deployments can register a remote target in place
    of the simulator; calling probe() raises until a transport is wired.
    """

    def __init__(self, base_url: str, timeout_seconds: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_seconds = timeout_seconds

    def probe(self, packet_id: str) -> EngineReply:
        raise NotImplementedError(
            f"remote probing of {self.base_url} is a declared interface only"
        )
