/**
 * Seeded in-memory service fixture.
 *
 * Implements the full API contract with three pending arbitration items
 * and the engine's exact γ calibration rule (FATAL ×(1+η),
 * BENIGN ×max(1−η, 0.5), PARTIAL unchanged; duplicate decisions
 * conflict). Tests run the console against this; the browser build talks
 * to the real service instead.
 */

import {
  ArbitrationApi,
  ConflictError,
  DecisionBody,
  DecisionRecord,
  DecisionResult,
  GraphWire,
  Metrics,
  NotFoundError,
  PacketDetail,
  QueueRow,
} from "./api.js";

const GROUND_TRUTH: GraphWire = {
  entities: [
    { entity_id: "a", entity_type: "T", attributes: {} },
    { entity_id: "b", entity_type: "T", attributes: {} },
    { entity_id: "c", entity_type: "T", attributes: {} },
  ],
  relations: [
    { source_entity: "a", target_entity: "b", relation_type: "r", confidence_score: 1.0 },
    { source_entity: "b", target_entity: "c", relation_type: "s", confidence_score: 1.0 },
  ],
};

// Generated graph missing node c and edge b->c: one missing entity and
// one missing relation marker in the diff view.
const GENERATED: GraphWire = {
  entities: [
    { entity_id: "a", entity_type: "T", attributes: {} },
    { entity_id: "b", entity_type: "T", attributes: {} },
  ],
  relations: [
    { source_entity: "a", target_entity: "b", relation_type: "r", confidence_score: 0.9 },
  ],
};

function pendingRow(seq: number, packetId: string, timestamp: string, iso: number): QueueRow {
  return {
    seq,
    packet_id: packetId,
    timestamp,
    t: 40.0,
    isomorphism_score: iso,
    entropy_estimate: 2.1,
    anomaly_reason: "isomorphism score below delta threshold",
    route_decision: "HUMAN_ARBITRATION",
  };
}

export class ServiceFixture implements ArbitrationApi {
  gamma: number;
  private readonly eta: number;
  private pending: QueueRow[];
  private readonly decisions = new Map<string, DecisionRecord>();
  private readonly totalProbes = 30;
  failNextFetch = false;

  constructor(gamma = 2.0, eta = 0.1) {
    this.gamma = gamma;
    this.eta = eta;
    // Deliberately unordered; the console must sort oldest-first.
    this.pending = [
      pendingRow(14, "p00-t40-r002", "2026-01-01T00:02:00Z", 0.21),
      pendingRow(5, "p00-t40-r000", "2026-01-01T00:00:00Z", 0.15),
      pendingRow(9, "p00-t40-r001", "2026-01-01T00:01:00Z", 0.33),
    ];
  }

  private maybeFail(): void {
    if (this.failNextFetch) {
      this.failNextFetch = false;
      throw new Error("connection refused");
    }
  }

  async fetchQueue(): Promise<{ pending: QueueRow[]; count: number }> {
    this.maybeFail();
    const rows = this.pending.filter((row) => !this.decisions.has(row.packet_id));
    return { pending: rows, count: rows.length };
  }

  async fetchPacket(packetId: string): Promise<PacketDetail> {
    this.maybeFail();
    const row = this.pending.find((item) => item.packet_id === packetId);
    if (!row) throw new NotFoundError(`unknown packet '${packetId}'`);
    return {
      entry: { packet_id: packetId, seq: row.seq, result: { route_decision: row.route_decision } },
      g_true: GROUND_TRUTH,
      g_gen: GENERATED,
      diff: {
        missing_entities: ["c"],
        fabricated_entities: [],
        mismatched_entities: [],
        missing_relations: [["b", "c", "s"]],
        fabricated_relations: [],
        mismatched_relations: [],
      },
      decision: this.decisions.get(packetId) ?? null,
    };
  }

  async submitDecision(packetId: string, body: DecisionBody): Promise<DecisionResult> {
    const row = this.pending.find((item) => item.packet_id === packetId);
    if (!row) throw new NotFoundError(`unknown packet '${packetId}'`);
    if (this.decisions.has(packetId)) {
      throw new ConflictError(`decision already recorded for packet '${packetId}'`);
    }
    if (body.severity === "FATAL") {
      this.gamma *= 1 + this.eta;
    } else if (body.severity === "BENIGN") {
      this.gamma *= Math.max(1 - this.eta, 0.5);
    }
    this.decisions.set(packetId, {
      packet_id: packetId,
      severity: body.severity,
      arbiter_id: body.arbiter_id ?? "console",
      note: body.note ?? "",
      decided_at: "2026-01-02T00:00:00Z",
      gamma_after: this.gamma,
    });
    const remaining = this.pending.filter((item) => !this.decisions.has(item.packet_id));
    return {
      packet_id: packetId,
      severity: body.severity,
      gamma: this.gamma,
      pending_count: remaining.length,
    };
  }

  async fetchMetrics(): Promise<Metrics> {
    this.maybeFail();
    const remaining = this.pending.filter((item) => !this.decisions.has(item.packet_id));
    return {
      route_histogram: {
        ACCEPT: 18,
        AGENT_FALLBACK: 9,
        HUMAN_ARBITRATION: this.pending.length,
      },
      gamma: this.gamma,
      pending_count: remaining.length,
      total_probes: this.totalProbes,
      decided_count: this.decisions.size,
    };
  }

  /** Simulate another coordinator deciding a packet out from under us. */
  decideElsewhere(packetId: string, severity: "BENIGN" | "PARTIAL" | "FATAL"): void {
    void this.submitDecision(packetId, { severity, arbiter_id: "other-client" });
  }
}
