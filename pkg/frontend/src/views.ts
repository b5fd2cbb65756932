/**
 * HTML string rendering.
 *
 * Pure functions from fetched data to markup, so every view is testable
 * without a DOM. Counts shown in headers are the lengths of the diff
 * sets the server sent — the console never recomputes them.
 */

import type { DiffSets, GraphWire, Metrics, PacketDetail, QueueRow } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const fmt = (value: number): string => value.toFixed(4);

export function renderGamma(metrics: Metrics | null): string {
  if (!metrics) return `<span class="gamma" id="gamma-readout">γ = —</span>`;
  return `<span class="gamma" id="gamma-readout">γ = ${fmt(metrics.gamma)}</span>`;
}

export function renderMetricsBar(metrics: Metrics | null): string {
  if (!metrics) return `<div class="metrics">loading…</div>`;
  const histogram = Object.entries(metrics.route_histogram)
    .map(([route, count]) => `${escapeHtml(route)}: ${count}`)
    .join(" · ");
  return (
    `<div class="metrics">${renderGamma(metrics)}` +
    ` <span class="pending">pending: ${metrics.pending_count}</span>` +
    ` <span class="histogram">${histogram}</span></div>`
  );
}

export function renderQueue(rows: QueueRow[], conflicted: ReadonlySet<string>): string {
  if (rows.length === 0) {
    return `<div class="empty-state">no pending arbitrations</div>`;
  }
  const body = rows
    .map((row) => {
      const conflict = conflicted.has(row.packet_id)
        ? ` <span class="conflict-flag">already decided elsewhere</span>`
        : "";
      return (
        `<tr class="queue-row" data-packet-id="${escapeHtml(row.packet_id)}">` +
        `<td>${row.seq}</td>` +
        `<td class="packet-id">${escapeHtml(row.packet_id)}${conflict}</td>` +
        `<td>${escapeHtml(row.timestamp ?? "")}</td>` +
        `<td>${row.t ?? ""}</td>` +
        `<td>${fmt(row.isomorphism_score)}</td>` +
        `<td>${fmt(row.entropy_estimate)}</td>` +
        `<td>${escapeHtml(row.anomaly_reason ?? "")}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="queue"><thead><tr>` +
    `<th>seq</th><th>packet</th><th>received</th><th>t</th>` +
    `<th>iso score</th><th>entropy</th><th>anomaly</th>` +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

function relationLine(triple: [string, string, string], marker: string): string {
  const [source, target, relationType] = triple;
  return (
    `<li class="${marker}">` +
    `${escapeHtml(source)} —${escapeHtml(relationType)}→ ${escapeHtml(target)}</li>`
  );
}

export function renderDiff(diff: DiffSets): string {
  const total =
    diff.missing_entities.length +
    diff.fabricated_entities.length +
    diff.mismatched_entities.length +
    diff.missing_relations.length +
    diff.fabricated_relations.length +
    diff.mismatched_relations.length;
  if (total === 0) {
    return `<div class="zero-diff">generated graph matches ground truth exactly</div>`;
  }
  const sections: string[] = [];
  if (diff.missing_entities.length || diff.missing_relations.length) {
    sections.push(
      `<section class="diff-missing"><h4>missing from generation ` +
        `(${diff.missing_entities.length} entities, ${diff.missing_relations.length} relations)</h4><ul>` +
        diff.missing_entities
          .map((id) => `<li class="missing-entity">${escapeHtml(id)}</li>`)
          .join("") +
        diff.missing_relations.map((t) => relationLine(t, "missing-relation")).join("") +
        `</ul></section>`,
    );
  }
  if (diff.fabricated_entities.length || diff.fabricated_relations.length) {
    sections.push(
      `<section class="diff-fabricated"><h4>fabricated ` +
        `(${diff.fabricated_entities.length} entities, ${diff.fabricated_relations.length} relations)</h4><ul>` +
        diff.fabricated_entities
          .map((id) => `<li class="fabricated-entity">${escapeHtml(id)}</li>`)
          .join("") +
        diff.fabricated_relations.map((t) => relationLine(t, "fabricated-relation")).join("") +
        `</ul></section>`,
    );
  }
  if (diff.mismatched_entities.length || diff.mismatched_relations.length) {
    sections.push(
      `<section class="diff-mismatched"><h4>mismatched labels ` +
        `(${diff.mismatched_entities.length} entities, ${diff.mismatched_relations.length} relation slots)</h4><ul>` +
        diff.mismatched_entities
          .map((id) => `<li class="mismatched-entity">${escapeHtml(id)}</li>`)
          .join("") +
        diff.mismatched_relations
          .map(
            ([source, target]) =>
              `<li class="mismatched-relation">${escapeHtml(source)} → ${escapeHtml(target)}</li>`,
          )
          .join("") +
        `</ul></section>`,
    );
  }
  return `<div class="diff">${sections.join("")}</div>`;
}

function renderGraph(graph: GraphWire, title: string): string {
  const entities = graph.entities
    .map((e) => `<li>${escapeHtml(e.entity_id)} <em>(${escapeHtml(e.entity_type)})</em></li>`)
    .join("");
  const relations = graph.relations
    .map((r) =>
      relationLine([r.source_entity, r.target_entity, r.relation_type], "graph-relation"),
    )
    .join("");
  return (
    `<div class="graph-panel"><h4>${escapeHtml(title)}</h4>` +
    `<ul class="entities">${entities}</ul><ul class="relations">${relations}</ul></div>`
  );
}

export function renderDetail(detail: PacketDetail): string {
  const header = `<h3>packet ${escapeHtml(detail.entry.packet_id)}</h3>`;
  const conflictNotice = detail.decision
    ? `<div class="conflict-notice">already decided: ${escapeHtml(detail.decision.severity)} ` +
      `by ${escapeHtml(detail.decision.arbiter_id)} at ${escapeHtml(detail.decision.decided_at)}</div>`
    : "";
  const graphs = detail.g_gen
    ? `<div class="side-by-side">${renderGraph(detail.g_true, "ground truth")}` +
      `${renderGraph(detail.g_gen, "generated")}</div>`
    : `<div class="side-by-side">${renderGraph(detail.g_true, "ground truth")}` +
      `<div class="graph-panel malformed">generation was malformed; no graph extracted</div></div>`;
  const diff = detail.diff ? renderDiff(detail.diff) : "";
  const form = detail.decision
    ? ""
    : `<form class="decision-form" data-packet-id="${escapeHtml(detail.entry.packet_id)}">` +
      `<label><input type="radio" name="severity" value="BENIGN"> BENIGN</label>` +
      `<label><input type="radio" name="severity" value="PARTIAL"> PARTIAL</label>` +
      `<label><input type="radio" name="severity" value="FATAL"> FATAL</label>` +
      `<input type="text" name="note" placeholder="note (required for FATAL)">` +
      `<button type="submit">submit decision</button>` +
      `<span class="inline-error" hidden></span></form>`;
  return `<div class="detail">${header}${conflictNotice}${graphs}${diff}${form}</div>`;
}

export function renderBanner(message: string | null): string {
  if (!message) return "";
  return (
    `<div class="banner error">${escapeHtml(message)} ` +
    `<button class="retry" type="button">retry</button></div>`
  );
}
