"""Intent tensor codec, tokenized permissions, broker, and the MVO agent."""

import json
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from geoprobe.errors import (
    InfeasibleTargetError,
    ModelError,
    RoutingError,
    SchemaError,
    TypeFieldError,
    VersionError,
)
from geoprobe.finquant import (
    FINQUANT_VECTOR,
    FinQuantAgent,
    MarketModel,
    load_market_model,
    mvo_solve,
    tier2_supply_chain_fixture,
)
from geoprobe.handoff import (
    DENY_BAD_SIGNATURE,
    DENY_EXPIRED,
    DENY_OUT_OF_SCOPE,
    DENY_REPLAY,
    AgentOutput,
    AgentRegistry,
    Broker,
    authorize,
    canonical_tensor_bytes,
    parse_tensor,
    sign_tensor,
    tensor_to_wire,
    verify_signature,
)
from conftest import BROKER_KEY

ISSUED = datetime(2026, 4, 2, 10, 0, 0, tzinfo=timezone.utc)


def signed_tensor(tensor_doc, key=BROKER_KEY, **field_updates):
    data = json.loads(json.dumps(tensor_doc))
    for path, value in field_updates.items():
        node = data
        parts = path.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return sign_tensor(parse_tensor(data), key)


def finquant_registry(market_doc):
    registry = AgentRegistry()
    registry.register(FINQUANT_VECTOR, FinQuantAgent(load_market_model(market_doc)))
    return registry


class TestParseTensor:
    def test_published_payload_values(self, tensor_doc):
        tensor = parse_tensor(tensor_doc)
        assert tensor.p_params.strict_constraints.portfolio_value_usd == 10000000.00
        assert tensor.p_params.strict_constraints.target_annualized_yield == 0.08
        assert tensor.u_auth.expiration_window_seconds == 300
        assert tensor.u_auth.atomic_permissions == (
            "READ_PORTFOLIO_STATE",
            "EXECUTE_MVO_SIMULATION",
        )
        assert tensor.p_params.target_entity.lei_code == "5493006MHB84DD0ZWV18"

    def test_missing_auth_block_named(self, tensor_doc):
        doc = dict(tensor_doc)
        del doc["u_auth"]
        with pytest.raises(SchemaError, match="u_auth"):
            parse_tensor(doc)

    def test_missing_nested_field_named(self, tensor_doc):
        doc = json.loads(json.dumps(tensor_doc))
        del doc["p_params"]["strict_constraints"]["target_annualized_yield"]
        with pytest.raises(SchemaError, match="target_annualized_yield"):
            parse_tensor(doc)

    def test_yield_as_string_is_type_error(self, tensor_doc):
        doc = json.loads(json.dumps(tensor_doc))
        doc["p_params"]["strict_constraints"]["target_annualized_yield"] = "0.08"
        with pytest.raises(TypeFieldError, match="target_annualized_yield"):
            parse_tensor(doc)

    def test_bool_rejected_as_number(self, tensor_doc):
        doc = json.loads(json.dumps(tensor_doc))
        doc["p_params"]["target_entity"]["resolution_confidence"] = True
        with pytest.raises(TypeFieldError):
            parse_tensor(doc)

    def test_unknown_version(self, tensor_doc):
        doc = dict(tensor_doc)
        doc["protocol_version"] = "DAH_v9.9"
        with pytest.raises(VersionError):
            parse_tensor(doc)

    def test_nonpositive_portfolio_rejected(self, tensor_doc):
        doc = json.loads(json.dumps(tensor_doc))
        doc["p_params"]["strict_constraints"]["portfolio_value_usd"] = 0
        with pytest.raises(TypeFieldError):
            parse_tensor(doc)

    def test_roundtrip_canonical_fixed_point(self, tensor_doc):
        rng = np.random.default_rng(31)
        for _ in range(25):
            doc = json.loads(json.dumps(tensor_doc))
            doc["tensor_id"] = f"req_{rng.integers(1e9):09d}"
            doc["c_context"]["session_depth"] = int(rng.integers(0, 20))
            doc["p_params"]["strict_constraints"]["portfolio_value_usd"] = float(
                np.round(rng.uniform(1e4, 1e8), 2)
            )
            doc["p_params"]["strict_constraints"]["target_annualized_yield"] = float(
                np.round(rng.uniform(0.01, 0.2), 4)
            )
            tensor = parse_tensor(doc)
            again = parse_tensor(tensor_to_wire(tensor))
            assert canonical_tensor_bytes(again) == canonical_tensor_bytes(tensor)
            assert again == tensor


class TestSignatures:
    def test_sign_then_verify(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        assert verify_signature(tensor, BROKER_KEY)

    def test_fixture_signature_is_valid(self, tensor_doc):
        assert verify_signature(parse_tensor(tensor_doc), BROKER_KEY)

    def test_wrong_key_fails(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        assert not verify_signature(tensor, b"other-key")

    def test_any_field_mutation_invalidates(self, tensor_doc):
        mutations = {
            "tensor_id": "req_tampered",
            "timestamp": "2026-04-02T10:00:01Z",
            "c_context.session_depth": 5,
            "p_params.strict_constraints.portfolio_value_usd": 10000000.01,
            "p_params.execution_vector": "other_vector",
        }
        for path, value in mutations.items():
            tensor = signed_tensor(tensor_doc)
            wire = tensor_to_wire(tensor)
            node = wire
            parts = path.split(".")
            for part in parts[:-1]:
                node = node[part]
            node[parts[-1]] = value
            assert not verify_signature(parse_tensor(wire), BROKER_KEY), path


class TestAuthorize:
    def test_out_of_scope_action_denied(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        decision = authorize(tensor, "EXECUTE_TRADE", ISSUED + timedelta(seconds=10), BROKER_KEY)
        assert not decision.allowed
        assert decision.reason == DENY_OUT_OF_SCOPE

    def test_expired_presentation_denied(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        decision = authorize(
            tensor, "READ_PORTFOLIO_STATE", ISSUED + timedelta(seconds=301), BROKER_KEY
        )
        assert decision.reason == DENY_EXPIRED

    def test_exactly_at_window_edge_denied(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        decision = authorize(
            tensor, "READ_PORTFOLIO_STATE", ISSUED + timedelta(seconds=300), BROKER_KEY
        )
        assert decision.reason == DENY_EXPIRED

    def test_inside_window_allowed(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        decision = authorize(
            tensor, "READ_PORTFOLIO_STATE", ISSUED + timedelta(seconds=299), BROKER_KEY
        )
        assert decision.allowed

    def test_tampered_body_is_bad_signature_even_when_expired(self, tensor_doc):
        tensor = signed_tensor(tensor_doc)
        wire = tensor_to_wire(tensor)
        wire["c_context"]["session_depth"] = 9
        tampered = parse_tensor(wire)
        decision = authorize(
            tampered, "READ_PORTFOLIO_STATE", ISSUED + timedelta(seconds=9999), BROKER_KEY
        )
        assert decision.reason == DENY_BAD_SIGNATURE


class TestMvoSolve:
    def test_two_asset_hand_solution(self, market_doc):
        market = load_market_model(market_doc)
        weights = mvo_solve(market, 0.08)
        assert np.allclose(weights, [0.5, 0.5], atol=1e-12)
        assert abs(weights.sum() - 1.0) < 1e-9
        assert abs(market.expected_returns @ weights - 0.08) < 1e-9

    def test_single_asset_at_its_own_yield(self):
        market = MarketModel(("only",), np.array([0.07]), np.array([[0.02]]))
        assert np.allclose(mvo_solve(market, 0.07), [1.0])

    def test_infeasible_target(self, market_doc):
        market = load_market_model(market_doc)
        with pytest.raises(InfeasibleTargetError):
            mvo_solve(market, 0.2)
        with pytest.raises(InfeasibleTargetError):
            mvo_solve(market, 0.01)

    def test_non_positive_definite_rejected(self):
        with pytest.raises(ModelError):
            MarketModel(("a", "b"), np.array([0.1, 0.2]), np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ModelError):
            MarketModel(("a", "b"), np.array([0.1, 0.2]), np.array([[1.0, 0.1], [0.2, 1.0]]))

    def test_identical_returns_falls_back_to_budget_solve(self):
        market = MarketModel(
            ("a", "b"), np.array([0.05, 0.05]), np.array([[0.04, 0.0], [0.0, 0.01]])
        )
        weights = mvo_solve(market, 0.05)
        assert abs(weights.sum() - 1.0) < 1e-9
        # Min variance with budget only: weights inverse to variances.
        assert np.allclose(weights, [0.2, 0.8], atol=1e-9)

    def test_random_instances_meet_constraints_and_beat_feasible_points(self):
        rng = np.random.default_rng(61)
        for _ in range(25):
            n = 4
            a = rng.normal(size=(n, n))
            sigma = a @ a.T + n * np.eye(n) * 0.1
            sigma = (sigma + sigma.T) / 2.0
            mu = rng.uniform(0.02, 0.15, size=n)
            market = MarketModel(tuple(f"a{i}" for i in range(n)), mu, sigma)
            target = float(rng.uniform(mu.min(), mu.max()))
            w = mvo_solve(market, target)
            assert abs(w.sum() - 1.0) < 1e-9
            assert abs(mu @ w - target) < 1e-9
            best = w @ sigma @ w
            # Random feasible competitors: w + null-space directions of [mu; 1].
            basis = np.linalg.svd(np.vstack([mu, np.ones(n)]))[2][2:].T
            for _ in range(100):
                z = rng.normal(size=basis.shape[1])
                competitor = w + basis @ z
                assert abs(competitor.sum() - 1.0) < 1e-6
                assert abs(mu @ competitor - target) < 1e-6
                assert best <= competitor @ sigma @ competitor + 1e-9


class TestBrokerHandoff:
    def test_executed_receipt_with_audit_trail(self, tensor_doc, market_doc):
        tensor = signed_tensor(tensor_doc)
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        receipt = broker.handoff(tensor, ISSUED + timedelta(seconds=30))
        assert receipt.status == "EXECUTED"
        assert np.allclose(receipt.weights, [0.5, 0.5])
        assert abs(sum(receipt.weights) - 1.0) < 1e-9
        assert abs(receipt.achieved_yield - 0.08) < 1e-9
        assert len(receipt.audit) == 2  # one line per agent action
        assert all(line.allowed for line in receipt.audit)
        assert receipt.supply_chain_ref.startswith("supply-chain:")

    def test_unknown_execution_vector(self, tensor_doc, market_doc):
        tensor = signed_tensor(tensor_doc, **{"p_params.execution_vector": "do_other_things"})
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        with pytest.raises(RoutingError):
            broker.handoff(tensor, ISSUED + timedelta(seconds=30))

    def test_replay_rejected(self, tensor_doc, market_doc):
        tensor = signed_tensor(tensor_doc)
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        first = broker.handoff(tensor, ISSUED + timedelta(seconds=30))
        second = broker.handoff(tensor, ISSUED + timedelta(seconds=31))
        assert first.status == "EXECUTED"
        assert second.status == "DENIED"
        assert second.deny_reason == DENY_REPLAY

    def test_expired_tensor_denied(self, tensor_doc, market_doc):
        tensor = signed_tensor(tensor_doc)
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        receipt = broker.handoff(tensor, ISSUED + timedelta(seconds=301))
        assert receipt.status == "DENIED"
        assert receipt.deny_reason == DENY_EXPIRED
        assert receipt.weights is None and receipt.achieved_yield is None

    def test_hostile_agent_cannot_act_out_of_scope(self, tensor_doc, market_doc):
        executed = []

        class HostileAgent:
            required_scopes = ("READ_PORTFOLIO_STATE",)

            def execute(self, tensor, gate):
                gate.require("READ_PORTFOLIO_STATE")
                executed.append("read")
                gate.require("EXECUTE_TRADE")  # never granted
                executed.append("trade")  # must be unreachable
                return AgentOutput(computations=())

        registry = AgentRegistry()
        registry.register(FINQUANT_VECTOR, HostileAgent())
        broker = Broker(BROKER_KEY, registry)
        receipt = broker.handoff(signed_tensor(tensor_doc), ISSUED + timedelta(seconds=5))
        assert receipt.status == "DENIED"
        assert receipt.deny_reason == DENY_OUT_OF_SCOPE
        assert executed == ["read"]
        denied_lines = [line for line in receipt.audit if not line.allowed]
        assert len(denied_lines) == 1
        assert denied_lines[0].action == "EXECUTE_TRADE"
        # Soundness: every executed action has a logged allow.
        assert sum(1 for line in receipt.audit if line.allowed) == len(executed)

    def test_receipts_are_deterministic(self, tensor_doc, market_doc):
        def run():
            broker = Broker(BROKER_KEY, finquant_registry(market_doc))
            receipts = []
            for i in range(20):
                tensor = signed_tensor(tensor_doc, tensor_id=f"req_{i:04d}")
                receipts.append(broker.handoff(tensor, ISSUED + timedelta(seconds=60)).to_json())
            return receipts

        assert run() == run()

    def test_receipt_fields_trace_to_computations(self, tensor_doc, market_doc):
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        receipt = broker.handoff(signed_tensor(tensor_doc), ISSUED + timedelta(seconds=60))
        log = {c.computation_id: c for c in receipt.computation_log}
        wire = receipt.to_wire()
        for field in ("weights", "achieved_yield", "variance", "supply_chain_ref"):
            assert field in receipt.traces, field
            computation = log[receipt.traces[field]]
            assert computation.outputs[field] == wire[field]

    def test_denied_receipt_has_no_numeric_payload(self, tensor_doc, market_doc):
        raw = tensor_to_wire(signed_tensor(tensor_doc))
        raw["u_auth"]["cryptographic_signature"] = "00" * 32
        broken = parse_tensor(raw)
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        receipt = broker.handoff(broken, ISSUED + timedelta(seconds=5))
        assert receipt.status == "DENIED"
        assert receipt.deny_reason == DENY_BAD_SIGNATURE
        assert receipt.weights is None
        assert receipt.variance is None
        assert receipt.computation_log == ()


class TestSupplyChainFixture:
    def test_fixture_graph_is_consistent(self):
        graph = tier2_supply_chain_fixture()
        assert len(graph.entities) == 5
        assert len(graph.relations) == 5

    def test_agent_reports_fixture_reference(self, tensor_doc, market_doc):
        broker = Broker(BROKER_KEY, finquant_registry(market_doc))
        receipt = broker.handoff(signed_tensor(tensor_doc), ISSUED + timedelta(seconds=5))
        read = next(c for c in receipt.computation_log if c.operation == "read_portfolio_state")
        assert read.outputs["supply_chain_ref"] == receipt.supply_chain_ref
