/**
 * Console state machine, UI-framework-free.
 *
 * Owns the fetched state (queue rows, metrics, open packet) and the
 * mutations around decision submission: validation, conflict handling,
 * and refreshing the γ readout afterwards. The browser layer only wires
 * DOM events to these methods and re-renders the returned strings.
 */

import {
  ArbitrationApi,
  ConflictError,
  DecisionBody,
  Metrics,
  PacketDetail,
  QueueRow,
} from "./api.js";
import { renderBanner, renderDetail, renderMetricsBar, renderQueue } from "./views.js";

export type Severity = "BENIGN" | "PARTIAL" | "FATAL";

export interface SubmitOutcome {
  ok: boolean;
  conflict: boolean;
  validationError: string | null;
  gamma: number | null;
}

export class ConsoleController {
  rows: QueueRow[] = [];
  metrics: Metrics | null = null;
  detail: PacketDetail | null = null;
  banner: string | null = null;
  conflicted = new Set<string>();

  constructor(
    private readonly api: ArbitrationApi,
    private readonly arbiterId: string = "console",
  ) {}

  /** Reload queue and metrics. Failures raise the banner, keep stale rows. */
  async refresh(): Promise<void> {
    try {
      const [queue, metrics] = await Promise.all([
        this.api.fetchQueue(),
        this.api.fetchMetrics(),
      ]);
      // Oldest first; sequence numbers are assigned in arrival order.
      this.rows = [...queue.pending].sort((a, b) => a.seq - b.seq);
      this.metrics = metrics;
      this.banner = null;
    } catch (error) {
      this.banner = `service unreachable: ${(error as Error).message}`;
    }
  }

  async open(packetId: string): Promise<PacketDetail | null> {
    try {
      this.detail = await this.api.fetchPacket(packetId);
      if (this.detail.decision) {
        // Decided elsewhere between fetch and open.
        this.conflicted.add(packetId);
      }
      return this.detail;
    } catch (error) {
      this.banner = `could not load packet: ${(error as Error).message}`;
      return null;
    }
  }

  validate(severity: Severity | null, note: string): string | null {
    if (!severity) return "select a severity";
    if (severity === "FATAL" && note.trim() === "") {
      return "a note is required for FATAL verdicts";
    }
    return null;
  }

  async submit(packetId: string, severity: Severity | null, note: string): Promise<SubmitOutcome> {
    const validationError = this.validate(severity, note);
    if (validationError) {
      return { ok: false, conflict: false, validationError, gamma: null };
    }
    const body: DecisionBody = {
      severity: severity as Severity,
      arbiter_id: this.arbiterId,
      note,
    };
    try {
      const result = await this.api.submitDecision(packetId, body);
      this.rows = this.rows.filter((row) => row.packet_id !== packetId);
      if (this.detail?.entry.packet_id === packetId) this.detail = null;
      this.metrics = await this.api.fetchMetrics();
      return { ok: true, conflict: false, validationError: null, gamma: result.gamma };
    } catch (error) {
      if (error instanceof ConflictError) {
        this.conflicted.add(packetId);
        await this.refresh();
        return { ok: false, conflict: true, validationError: null, gamma: null };
      }
      this.banner = `decision failed: ${(error as Error).message}`;
      return { ok: false, conflict: false, validationError: null, gamma: null };
    }
  }

  queueHtml(): string {
    return renderQueue(this.rows, this.conflicted);
  }

  metricsHtml(): string {
    return renderMetricsBar(this.metrics);
  }

  detailHtml(): string {
    return this.detail ? renderDetail(this.detail) : "";
  }

  bannerHtml(): string {
    return renderBanner(this.banner);
  }
}
