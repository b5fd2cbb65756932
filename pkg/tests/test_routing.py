"""Routing state machine, probe execution, ledger, and arbitration."""

import json
import math

import numpy as np
import pytest

from geoprobe.attribution import IarModel, Severity
from geoprobe.campaign import run_campaign
from geoprobe.config import load_config, load_corpus
from geoprobe.decay import DecayParams, EntropyTrajectory
from geoprobe.errors import DecisionConflictError, UnknownPacketError
from geoprobe.graphs import EditCosts
from geoprobe.ledger import Ledger
from geoprobe.oracle import CorpusState, EngineReply, SimulatedEngine
from geoprobe.routing import (
    ArbitrationDecision,
    ArbitrationQueue,
    EvaluationResult,
    IntentPacket,
    RouteDecision,
    Thresholds,
    apply_replay,
    evaluate_probe,
    execute_probe,
    pseudo_embedding,
    route,
)
from conftest import FIXTURES, make_campaign_config

TH = Thresholds(0.4, 0.8)


def fixture_state(clock: float) -> CorpusState:
    corpus = load_corpus(FIXTURES / "corpus.json")
    return CorpusState(
        ground_truth=corpus.ground_truth,
        decoy_entities=corpus.decoy_entities,
        decoy_relations=corpus.decoy_relations,
        clock=clock,
        params=DecayParams(1.0, 0.05, 0.9, 50000),
        trajectory=EntropyTrajectory(3.25, 0.03),
    )


def make_packet(packet_id: str, g_true) -> IntentPacket:
    return IntentPacket(
        packet_id=packet_id,
        prompt_vector=pseudo_embedding("what does acme offer"),
        context_depth=0,
        g_true=g_true,
        timestamp="2026-01-01T00:00:00Z",
    )


class TestRoute:
    def test_accept_above_epsilon(self):
        assert route(0.85, False, TH) is RouteDecision.ACCEPT

    def test_anomaly_always_wins(self):
        assert route(0.99, True, TH) is RouteDecision.HUMAN_ARBITRATION

    def test_delta_boundary_goes_to_fallback(self):
        assert route(0.4, False, TH) is RouteDecision.AGENT_FALLBACK

    def test_epsilon_boundary_goes_to_accept(self):
        assert route(0.8, False, TH) is RouteDecision.ACCEPT

    def test_below_delta_goes_to_human(self):
        assert route(np.nextafter(0.4, 0.0), False, TH) is RouteDecision.HUMAN_ARBITRATION

    def test_totality_over_dense_grid(self):
        grid = list(np.linspace(0.0, 1.0, 501)) + [
            0.4, 0.8, np.nextafter(0.4, 0), np.nextafter(0.8, 0)
        ]
        for iso in grid:
            for anomaly in (False, True):
                decision = route(float(iso), anomaly, TH)
                assert isinstance(decision, RouteDecision)
                if anomaly:
                    assert decision is RouteDecision.HUMAN_ARBITRATION

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            Thresholds(0.8, 0.4)
        with pytest.raises(ValueError):
            Thresholds(0.5, 0.5)
        with pytest.raises(ValueError):
            Thresholds(-0.1, 0.5)


class TestEvaluationResultInvariant:
    def test_anomaly_requires_human_route(self):
        with pytest.raises(ValueError):
            EvaluationResult("p", 0.9, 0.1, True, RouteDecision.ACCEPT)


class TestExecuteProbe:
    def test_time_zero_accepts_with_perfect_score(self):
        state = fixture_state(0.0)
        engine = SimulatedEngine(state, master_seed=7)
        result = execute_probe(make_packet("pkt-0", state.ground_truth), engine, TH)
        assert result.route_decision is RouteDecision.ACCEPT
        assert result.isomorphism_score == 1.0
        assert not result.critical_anomaly

    def test_all_decoy_output_routes_to_human(self):
        state = fixture_state(30000.0)
        engine = SimulatedEngine(state, master_seed=7)
        result = execute_probe(make_packet("pkt-d", state.ground_truth), engine, TH)
        assert result.route_decision is RouteDecision.HUMAN_ARBITRATION
        assert result.isomorphism_score < TH.delta

    def test_deterministic_result(self):
        state = fixture_state(14.0)
        engine = SimulatedEngine(state, master_seed=3)
        packet = make_packet("pkt-r", state.ground_truth)
        assert execute_probe(packet, engine, TH) == execute_probe(packet, engine, TH)

    def test_malformed_output_routes_to_human(self):
        class GarbageEngine:
            def probe(self, packet_id):
                return EngineReply("{{{this is not json", (-0.2,), "trace")

        state = fixture_state(0.0)
        result, entry = evaluate_probe(
            make_packet("pkt-bad", state.ground_truth), GarbageEngine(), TH
        )
        assert result.route_decision is RouteDecision.HUMAN_ARBITRATION
        assert result.critical_anomaly
        assert "malformed generation" in entry["anomaly_reason"]
        assert entry["report"] is None

    def test_ledger_entry_recorded_atomically(self, tmp_path):
        state = fixture_state(0.0)
        engine = SimulatedEngine(state, master_seed=7)
        ledger = Ledger(tmp_path / "ledger.jsonl")
        execute_probe(
            make_packet("pkt-l", state.ground_truth),
            engine,
            TH,
            EditCosts(),
            ledger,
            features={"semantic_alignment": 0.5},
        )
        assert len(ledger) == 1
        record = ledger.records[0]
        assert record["kind"] == "evaluation"
        assert record["inputs_digest"]
        assert record["seed_trace"]
        assert record["features"] == {"semantic_alignment": 0.5}
        on_disk = (tmp_path / "ledger.jsonl").read_text().strip()
        assert json.loads(on_disk) == record


class TestLedger:
    def test_sequence_strictly_increases(self, tmp_path):
        ledger = Ledger(tmp_path / "l.jsonl")
        for i in range(5):
            ledger.append("evaluation", {"packet_id": f"p{i}"})
        seqs = [r["seq"] for r in ledger.records]
        assert seqs == [1, 2, 3, 4, 5]

    def test_reload_from_disk(self, tmp_path):
        path = tmp_path / "l.jsonl"
        first = Ledger(path)
        first.append("evaluation", {"packet_id": "a"})
        first.append("decision", {"packet_id": "a", "severity": "FATAL", "gamma_after": 1.1})
        again = Ledger(path)
        assert again.records == first.records
        again.append("evaluation", {"packet_id": "b"})
        assert again.records[-1]["seq"] == 3

    def test_records_are_never_mutated(self, tmp_path):
        path = tmp_path / "l.jsonl"
        ledger = Ledger(path)
        ledger.append("evaluation", {"packet_id": "a", "result": {"route_decision": "ACCEPT"}})
        before = ledger.to_bytes()
        ledger.append("decision", {"packet_id": "a", "severity": "BENIGN", "gamma_after": 0.9})
        after = ledger.to_bytes()
        assert after.startswith(before)


class TestArbitrationQueue:
    def _seeded_queue(self, tmp_path):
        tmp_path.mkdir(parents=True, exist_ok=True)
        ledger = Ledger(tmp_path / "l.jsonl")
        state = fixture_state(30000.0)
        engine = SimulatedEngine(state, master_seed=9)
        for i in range(3):
            execute_probe(
                make_packet(f"pkt-{i}", state.ground_truth), engine, TH, EditCosts(), ledger
            )
        return ArbitrationQueue(ledger)

    def test_submit_fatal_updates_gamma_and_queue(self, tmp_path):
        queue = self._seeded_queue(tmp_path)
        pending = queue.pending()
        assert len(pending) == 3
        model = IarModel.zeros(2.0)
        decision = ArbitrationDecision(
            pending[0]["packet_id"], Severity.FATAL, "arb-1", "fabricated", "2026-01-02T00:00:00Z"
        )
        updated = queue.submit(decision, model, eta=0.1)
        assert abs(updated.gamma - 2.2) < 1e-12
        assert len(queue.pending()) == 2
        record = queue.decision_for(decision.packet_id)
        assert record["severity"] == "FATAL"
        assert abs(record["gamma_after"] - 2.2) < 1e-12

    def test_duplicate_decision_conflicts(self, tmp_path):
        queue = self._seeded_queue(tmp_path)
        packet_id = queue.pending()[0]["packet_id"]
        model = IarModel.zeros(1.0)
        decision = ArbitrationDecision(packet_id, Severity.BENIGN, "a", "", "2026-01-02T00:00:00Z")
        queue.submit(decision, model)
        with pytest.raises(DecisionConflictError):
            queue.submit(decision, model)

    def test_unknown_packet_rejected(self, tmp_path):
        queue = self._seeded_queue(tmp_path)
        model = IarModel.zeros(1.0)
        with pytest.raises(UnknownPacketError):
            queue.submit(
                ArbitrationDecision("nope", Severity.FATAL, "a", "", "2026-01-02T00:00:00Z"),
                model,
            )

    def test_replay_matches_interactive_submission(self, tmp_path):
        queue_a = self._seeded_queue(tmp_path / "a")
        queue_b = self._seeded_queue(tmp_path / "b")
        entries = [
            {"severity": "FATAL", "arbiter_id": "replay", "note": "n1"},
            {"severity": "BENIGN", "arbiter_id": "replay", "note": "n2"},
        ]
        model_a, applied = apply_replay(
            queue_a, entries, IarModel.zeros(1.0), 0.1, default_decided_at="2026-01-03T00:00:00Z"
        )
        model_b = IarModel.zeros(1.0)
        for decision in applied:
            model_b = queue_b.submit(decision, model_b, 0.1)
        assert queue_a.ledger.to_bytes() == queue_b.ledger.to_bytes()
        assert model_a.gamma == model_b.gamma


class TestRunCampaign:
    def test_cardinality(self, tmp_path):
        config = load_config(make_campaign_config(tmp_path, prompts=("a", "b"), t_grid=(0, 5, 40), reps=5))
        result = run_campaign(config)
        assert sum(result.route_histogram.values()) == 2 * 3 * 5
        assert len(list(result.ledger.of_kind("evaluation"))) == 30

    def test_byte_identical_reruns(self, tmp_path):
        config = load_config(make_campaign_config(tmp_path, reps=4, fit_iterations=10))
        first = run_campaign(config, tmp_path / "l1.jsonl")
        second = run_campaign(config, tmp_path / "l2.jsonl")
        assert (tmp_path / "l1.jsonl").read_bytes() == (tmp_path / "l2.jsonl").read_bytes()
        assert first.route_histogram == second.route_histogram

    def test_worker_count_does_not_change_ledger(self, tmp_path):
        serial = load_config(make_campaign_config(tmp_path, reps=4, fit_iterations=0))
        parallel = load_config(
            make_campaign_config(tmp_path, reps=4, fit_iterations=0, workers=4, out_name="out2")
        )
        run_campaign(serial, tmp_path / "serial.jsonl")
        run_campaign(parallel, tmp_path / "parallel.jsonl")
        assert (tmp_path / "serial.jsonl").read_bytes() == (tmp_path / "parallel.jsonl").read_bytes()

    def test_accept_fraction_declines_with_time(self, tmp_path):
        config = load_config(make_campaign_config(tmp_path, reps=20, fit_iterations=10))
        result = run_campaign(config)
        by_t = {row["t"]: row for row in result.per_t}
        assert by_t[40.0]["accept_fraction"] < by_t[0.0]["accept_fraction"]

    def test_seed_changes_ledger(self, tmp_path):
        a = load_config(make_campaign_config(tmp_path, reps=3, fit_iterations=0, master_seed=1))
        b = load_config(
            make_campaign_config(tmp_path, reps=3, fit_iterations=0, master_seed=2, out_name="out2")
        )
        run_campaign(a, tmp_path / "a.jsonl")
        run_campaign(b, tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() != (tmp_path / "b.jsonl").read_bytes()


class TestPseudoEmbedding:
    def test_unit_norm_and_determinism(self):
        v1 = pseudo_embedding("prompt text")
        v2 = pseudo_embedding("prompt text")
        assert v1 == v2
        assert abs(math.fsum(x * x for x in v1) - 1.0) < 1e-9
        assert pseudo_embedding("other") != v1
