/**
 * Typed client for the arbitration service HTTP API.
 *
 * The console consumes exactly these four endpoints and nothing else;
 * every number it displays comes from a response body, never from local
 * computation.
 */

export interface QueueRow {
  seq: number;
  packet_id: string;
  timestamp: string | null;
  t: number | null;
  isomorphism_score: number;
  entropy_estimate: number;
  anomaly_reason: string | null;
  route_decision: string;
}

export interface QueueResponse {
  pending: QueueRow[];
  count: number;
}

export interface EntityWire {
  entity_id: string;
  entity_type: string;
  attributes: Record<string, string>;
}

export interface RelationWire {
  source_entity: string;
  target_entity: string;
  relation_type: string;
  confidence_score: number;
}

export interface GraphWire {
  entities: EntityWire[];
  relations: RelationWire[];
}

export interface DiffSets {
  missing_entities: string[];
  fabricated_entities: string[];
  mismatched_entities: string[];
  missing_relations: [string, string, string][];
  fabricated_relations: [string, string, string][];
  mismatched_relations: [string, string][];
}

export interface DecisionRecord {
  packet_id: string;
  severity: string;
  arbiter_id: string;
  note: string;
  decided_at: string;
  gamma_after: number;
}

export interface PacketDetail {
  entry: Record<string, unknown> & { packet_id: string };
  g_true: GraphWire;
  g_gen: GraphWire | null;
  diff: DiffSets | null;
  decision: DecisionRecord | null;
}

export interface Metrics {
  route_histogram: Record<string, number>;
  gamma: number;
  pending_count: number;
  total_probes: number;
  decided_count: number;
}

export interface DecisionBody {
  severity: "BENIGN" | "PARTIAL" | "FATAL";
  arbiter_id?: string;
  note?: string;
}

export interface DecisionResult {
  packet_id: string;
  severity: string;
  gamma: number;
  pending_count: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** A decision already exists for this packet (HTTP 409). */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
  }
}

export class NotFoundError extends ApiError {
  constructor(message: string) {
    super(message, 404);
  }
}

export interface ArbitrationApi {
  fetchQueue(): Promise<QueueResponse>;
  fetchPacket(packetId: string): Promise<PacketDetail>;
  submitDecision(packetId: string, body: DecisionBody): Promise<DecisionResult>;
  fetchMetrics(): Promise<Metrics>;
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 409) throw new ConflictError(detail);
  if (response.status === 404) throw new NotFoundError(detail);
  throw new ApiError(detail, response.status);
}

export class HttpArbitrationApi implements ArbitrationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly bearerToken?: string,
  ) {}

  private headers(json = false): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.bearerToken) headers["Authorization"] = `Bearer ${this.bearerToken}`;
    return headers;
  }

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async fetchQueue(): Promise<QueueResponse> {
    const response = await fetch(this.url("/queue"), { headers: this.headers() });
    await raiseForStatus(response);
    return response.json();
  }

  async fetchPacket(packetId: string): Promise<PacketDetail> {
    const response = await fetch(this.url(`/packets/${encodeURIComponent(packetId)}`), {
      headers: this.headers(),
    });
    await raiseForStatus(response);
    return response.json();
  }

  async submitDecision(packetId: string, body: DecisionBody): Promise<DecisionResult> {
    const response = await fetch(
      this.url(`/packets/${encodeURIComponent(packetId)}/decision`),
      { method: "POST", headers: this.headers(true), body: JSON.stringify(body) },
    );
    await raiseForStatus(response);
    return response.json();
  }

  async fetchMetrics(): Promise<Metrics> {
    const response = await fetch(this.url("/metrics"), { headers: this.headers() });
    await raiseForStatus(response);
    return response.json();
  }
}
