"""End-to-end probe campaign execution.

A campaign sweeps the configured prompt list across the time grid,
probing the simulated engine ``reps_per_cell`` times per (prompt, t)
cell. Each probe gets its own seed derived from the master seed and its
packet id, so results are independent of execution order and the whole
run is reproducible byte for byte from (config, master seed).

After the probe sweep the optional replay file is applied to the
arbitration queue, verified observations are labeled (ACCEPT routes are
positives; arbitrated packets whose human verdict confirms a
hallucination are negatives; unverified fallback results are excluded),
and the attribution weights are fitted on those observations only.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attribution import (
    IarModel,
    LabeledObservation,
    Severity,
    fit,
)
from .config import BASE_INSTANT, CampaignConfig, CorpusDocument, load_corpus
from .decay import fit_decay_rate
from .errors import GeoprobeError
from .ledger import Ledger
from .oracle import CorpusState, SimulatedEngine, advance_clock
from .routing import (
    ArbitrationQueue,
    IntentPacket,
    RouteDecision,
    apply_replay,
    evaluate_probe,
    pseudo_embedding,
)

__all__ = ["CampaignResult", "run_campaign", "label_observations"]

# Severities whose human verdict confirms the flagged output really was a
# hallucination; BENIGN verdicts leave the observation unverified either way.
_HALLUCINATION_SEVERITIES = {Severity.FATAL.value, Severity.PARTIAL.value}


@dataclass(frozen=True)
class CampaignResult:
    ledger: Ledger
    model: IarModel | None
    fit_skipped_reason: str | None
    per_t: tuple[dict, ...]
    lambda_hat: float | None
    route_histogram: dict[str, int]
    gamma_trajectory: tuple[float, ...]
    observation_count: int


def _packet_features(master_seed: int, packet_id: str, schema: tuple[str, ...]) -> dict[str, float]:
    digest = hashlib.sha256(f"{master_seed}|{packet_id}|features".encode()).hexdigest()
    rng = np.random.default_rng(int(digest[:16], 16))
    features = {}
    for name in schema:
        # Densities are unbounded above; everything else reads as a share.
        high = 2.0 if "density" in name else 1.0
        features[name] = float(rng.uniform(0.0, high))
    return features


def _build_corpus_state(config: CampaignConfig, corpus: CorpusDocument) -> CorpusState:
    return CorpusState(
        ground_truth=corpus.ground_truth,
        decoy_entities=corpus.decoy_entities,
        decoy_relations=corpus.decoy_relations,
        clock=0.0,
        params=config.decay,
        trajectory=config.trajectory,
    )


def run_campaign(config: CampaignConfig, ledger_path=None) -> CampaignResult:
    """Execute the full probe grid and fit the attribution model.

    ``ledger_path`` (optional) persists the ledger as JSONL while the
    campaign runs; omit it for an in-memory run.
    """
    corpus = load_corpus(config.corpus_path)
    base_state = _build_corpus_state(config, corpus)
    ledger = Ledger(ledger_path)

    grid: list[tuple[IntentPacket, SimulatedEngine, dict]] = []
    for t in config.t_grid:
        state = advance_clock(base_state, t)
        engine = SimulatedEngine(state, config.master_seed)
        for p_idx, prompt in enumerate(config.prompts):
            vector = pseudo_embedding(prompt)
            for rep in range(config.reps_per_cell):
                packet_id = f"p{p_idx:02d}-t{t:g}-r{rep:03d}"
                packet = IntentPacket(
                    packet_id=packet_id,
                    prompt_vector=vector,
                    context_depth=0,
                    g_true=corpus.ground_truth,
                    timestamp=BASE_INSTANT,
                )
                meta = {"t": t, "prompt_index": p_idx, "rep": rep}
                grid.append((packet, engine, meta))

    def run_one(item) -> dict:
        packet, engine, meta = item
        features = _packet_features(config.master_seed, packet.packet_id, config.feature_schema)
        _, entry = evaluate_probe(
            packet,
            engine,
            config.thresholds,
            config.edit_costs,
            aliases=corpus.aliases,
            confidence_floor=config.confidence_floor,
            features=features,
            packet_meta=meta,
        )
        return entry

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            entries = list(pool.map(run_one, grid))
    else:
        entries = [run_one(item) for item in grid]

    # Appends happen in grid order regardless of worker scheduling, so the
    # ledger bytes depend only on (config, master seed).
    for entry in entries:
        ledger.append("evaluation", entry)

    gamma_trajectory = [config.gamma]
    model = IarModel.zeros(config.gamma, config.feature_schema)
    if config.replay_path is not None:
        replay_entries = json.loads(config.replay_path.read_text())
        queue = ArbitrationQueue(ledger)
        model, applied = apply_replay(
            queue, replay_entries, model, config.eta, default_decided_at=BASE_INSTANT
        )
        for record in ledger.of_kind("decision"):
            gamma_trajectory.append(record["gamma_after"])

    observations = label_observations(ledger, config.feature_schema)
    fitted = None
    fit_skipped = None
    if observations:
        fitted = fit(observations, config.fit, start=model)
    else:
        fit_skipped = "no verified observations to fit on"

    per_t, lambda_hat = summarize_decay(ledger, config.t_grid)
    histogram = {d.value: 0 for d in RouteDecision}
    for record in ledger.of_kind("evaluation"):
        histogram[record["result"]["route_decision"]] += 1

    return CampaignResult(
        ledger=ledger,
        model=fitted,
        fit_skipped_reason=fit_skipped,
        per_t=tuple(per_t),
        lambda_hat=lambda_hat,
        route_histogram=histogram,
        gamma_trajectory=tuple(gamma_trajectory),
        observation_count=len(observations),
    )


def label_observations(ledger: Ledger, schema: tuple[str, ...]) -> list[LabeledObservation]:
    """Extract verified training observations from a campaign ledger.

    ACCEPT evaluations are positive labels. HUMAN_ARBITRATION evaluations
    whose decision confirms a hallucination (FATAL or PARTIAL) are
    negative. Everything else — fallback routes, undecided arbitrations,
    BENIGN verdicts — is unverified and excluded.
    """
    decisions = {r["packet_id"]: r for r in ledger.of_kind("decision")}
    observations = []
    for record in ledger.of_kind("evaluation"):
        features_map = record.get("features")
        if features_map is None:
            continue
        features = tuple(float(features_map[name]) for name in schema)
        ged = min(1.0, max(0.0, 1.0 - record["result"]["isomorphism_score"]))
        routing = record["result"]["route_decision"]
        if routing == RouteDecision.ACCEPT.value:
            observations.append(LabeledObservation(features, ged, True))
        elif routing == RouteDecision.HUMAN_ARBITRATION.value:
            decision = decisions.get(record["packet_id"])
            if decision is not None and decision["severity"] in _HALLUCINATION_SEVERITIES:
                observations.append(LabeledObservation(features, ged, False))
    return observations


def summarize_decay(ledger: Ledger, t_grid: tuple[float, ...]) -> tuple[list[dict], float | None]:
    """Per-t mean scores plus the recovered forgetting rate.

    The rate comes from the log-linear fit of mean isomorphism score
    against t; it is None when any per-t mean is nonpositive (log
    undefined) or fewer than three t values exist.
    """
    by_t: dict[float, list] = {t: [] for t in t_grid}
    accepts: dict[float, int] = {t: 0 for t in t_grid}
    for record in ledger.of_kind("evaluation"):
        t = record.get("t")
        if t is None or t not in by_t:
            continue
        by_t[t].append(record["result"]["isomorphism_score"])
        if record["result"]["route_decision"] == RouteDecision.ACCEPT.value:
            accepts[t] += 1
    per_t = []
    samples = []
    for t in t_grid:
        scores = by_t[t]
        mean = math.fsum(scores) / len(scores) if scores else 0.0
        per_t.append(
            {
                "t": t,
                "probes": len(scores),
                "mean_iso_score": mean,
                "accept_fraction": (accepts[t] / len(scores)) if scores else 0.0,
            }
        )
        samples.append((t, mean))
    lambda_hat = None
    if len(samples) >= 3 and all(s > 0 for _, s in samples):
        try:
            lambda_hat = fit_decay_rate(samples)
        except (ValueError, GeoprobeError):
            lambda_hat = None
    return per_t, lambda_hat
