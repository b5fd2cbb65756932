"""HTTP service exposing the arbitration queue and campaign metrics.

Endpoints (JSON throughout, shapes mirror the ledger records):

    GET  /queue                     pending arbitration entries, oldest first
    GET  /packets/{id}              evaluation entry, both graphs, diff sets
    POST /packets/{id}/decision     record a severity verdict (409 on repeat)
    GET  /metrics                   route histogram, current gamma, pending count

The service holds the live ledger: decisions append through the same
serialized writer the campaign used, and gamma recalibrates on every
verdict exactly as a replay file would. Displayed numbers are all
computed here so the browser console never becomes a second judging
surface. An optional static bearer token (GEOPROBE_SERVICE_TOKEN) gates
mutating and reading access alike.
"""

from __future__ import annotations

import os
from datetime import datetime, timezone
from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .attribution import IarModel, Severity
from .config import CampaignConfig, load_corpus
from .errors import DecisionConflictError, UnknownPacketError
from .graphs import graph_diff, graph_to_wire, parse_verifier_report, report_to_graph
from .ledger import Ledger
from .routing import ArbitrationDecision, ArbitrationQueue, RouteDecision

__all__ = ["create_app", "ServiceState"]


class DecisionBody(BaseModel):
    severity: str = Field(description="BENIGN | PARTIAL | FATAL")
    arbiter_id: str = "console"
    note: str = ""
    decided_at: str | None = None


class ServiceState:
    def __init__(self, config: CampaignConfig, ledger: Ledger):
        self.config = config
        self.ledger = ledger
        self.queue = ArbitrationQueue(ledger)
        self.corpus = load_corpus(config.corpus_path)
        self.model = self._rebuild_model()

    def _rebuild_model(self) -> IarModel:
        # gamma evolves with every recorded decision; the last decision's
        # gamma_after is the current value.
        gamma = self.config.gamma
        for record in self.ledger.of_kind("decision"):
            gamma = record["gamma_after"]
        return IarModel.zeros(gamma, self.config.feature_schema)

    def histogram(self) -> dict:
        counts = {d.value: 0 for d in RouteDecision}
        for record in self.ledger.of_kind("evaluation"):
            counts[record["result"]["route_decision"]] += 1
        return counts


def _queue_row(entry: dict) -> dict:
    return {
        "seq": entry["seq"],
        "packet_id": entry["packet_id"],
        "timestamp": entry.get("timestamp"),
        "t": entry.get("t"),
        "isomorphism_score": entry["result"]["isomorphism_score"],
        "entropy_estimate": entry["result"]["entropy_estimate"],
        "anomaly_reason": entry.get("anomaly_reason"),
        "route_decision": entry["result"]["route_decision"],
    }


def create_app(config: CampaignConfig, ledger: Ledger) -> FastAPI:
    state = ServiceState(config, ledger)
    app = FastAPI(title="geoprobe arbitration service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def check_token(request: Request) -> None:
        expected = os.environ.get("GEOPROBE_SERVICE_TOKEN")
        if not expected:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {expected}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    @app.get("/queue")
    def get_queue(_: None = Depends(check_token)) -> dict:
        pending = [_queue_row(e) for e in state.queue.pending()]
        return {"pending": pending, "count": len(pending)}

    @app.get("/packets/{packet_id}")
    def get_packet(packet_id: str, _: None = Depends(check_token)) -> dict:
        entry = state.queue.find(packet_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown packet {packet_id!r}")
        g_true = state.corpus.ground_truth
        diff = None
        g_gen_wire = None
        if entry.get("report") is not None:
            report = parse_verifier_report(entry["report"], confidence_floor=0.0)
            g_gen = report_to_graph(report, state.corpus.aliases)
            g_gen_wire = graph_to_wire(g_gen)
            diff = graph_diff(g_true, g_gen)
        decision = state.queue.decision_for(packet_id)
        return {
            "entry": entry,
            "g_true": graph_to_wire(g_true),
            "g_gen": g_gen_wire,
            "diff": diff,
            "decision": decision,
        }

    @app.post("/packets/{packet_id}/decision")
    def post_decision(packet_id: str, body: DecisionBody, _: None = Depends(check_token)) -> dict:
        try:
            severity = Severity(body.severity)
        except ValueError:
            raise HTTPException(
                status_code=422,
                detail=f"severity must be one of BENIGN, PARTIAL, FATAL; got {body.severity!r}",
            )
        decided_at = body.decided_at or datetime.now(timezone.utc).isoformat()
        decision = ArbitrationDecision(
            packet_id=packet_id,
            severity=severity,
            arbiter_id=body.arbiter_id,
            note=body.note,
            decided_at=decided_at,
        )
        try:
            state.model = state.queue.submit(decision, state.model, state.config.eta)
        except UnknownPacketError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DecisionConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "packet_id": packet_id,
            "severity": severity.value,
            "gamma": state.model.gamma,
            "pending_count": len(state.queue.pending()),
        }

    @app.get("/metrics")
    def get_metrics(_: None = Depends(check_token)) -> dict:
        evaluations = list(state.ledger.of_kind("evaluation"))
        return {
            "route_histogram": state.histogram(),
            "gamma": state.model.gamma,
            "pending_count": len(state.queue.pending()),
            "total_probes": len(evaluations),
            "decided_count": len(list(state.ledger.of_kind("decision"))),
        }

    return app
