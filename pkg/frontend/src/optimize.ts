import { h } from "./dom.js";
import { formatCents, num } from "./format.js";
import type {
  ApiErrorBody,
  LineIds,
  OptimizeDrawsPayload,
  OptimizeMapPayload,
  OptimizePayload,
  OptimizeQuery,
} from "./types.js";

function lineSlots(line: LineIds): [string, string][] {
  return [
    ["G", line.goalie],
    ["C", line.center],
    ["L", line.left],
    ["R", line.right],
    ["D1", line.defense[0] ?? ""],
    ["D2", line.defense[1] ?? ""],
  ];
}

function renderLine(line: LineIds, pinned: string[]): HTMLElement {
  const row = h("div", { class: "lineup" });
  for (const [slot, pid] of lineSlots(line)) {
    const chip = h(
      "span",
      { class: "slot", "data-slot": slot, "data-player": pid },
      h("b", {}, slot),
      " ",
      pid,
    );
    if (pinned.includes(pid)) chip.classList.add("pinned");
    row.append(chip);
  }
  return row;
}

function statRow(label: string, field: string, text: string): HTMLElement {
  return h(
    "div",
    { class: "stat" },
    h("span", { class: "stat-label" }, label),
    h("span", { "data-field": field, class: "numcell" }, text),
  );
}

function renderMapResult(payload: OptimizeMapPayload, pinned: string[]): HTMLElement {
  return h(
    "div",
    { class: "result-card", "data-mode": "map" },
    renderLine(payload.line, pinned),
    statRow("cost", "cost", formatCents(payload.cost_cents)),
    statRow("score", "score", num(payload.score)),
    statRow(`P(beats ${payload.reference})`, "prob", num(payload.prob_vs_reference)),
  );
}

function renderDrawsResult(
  payload: OptimizeDrawsPayload,
  pinned: string[],
): HTMLElement {
  return h(
    "div",
    { class: "result-card", "data-mode": "draws" },
    renderLine(payload.modal_line, pinned),
    statRow("modal line cost", "cost", formatCents(payload.cost_cents)),
    statRow("modal line frequency", "modal-freq", num(payload.modal_line_frequency)),
    statRow("draws used", "n-draws", num(payload.n_draws_used)),
    statRow("mean", "mean", num(payload.summary.mean)),
    statRow("q05", "q05", num(payload.summary.q05)),
    statRow("q95", "q95", num(payload.summary.q95)),
  );
}

/**
 * Optimizer response card. Every number cell is the payload value verbatim
 * except money, which is the exact cents as dollars. Pinned players get the
 * `pinned` class.
 */
export function renderOptimizeResult(
  payload: OptimizePayload,
  pinned: string[],
): HTMLElement {
  return payload.mode === "map"
    ? renderMapResult(payload, pinned)
    : renderDrawsResult(payload, pinned);
}

/** Infeasible is a normal answer to a hard budget, not an error toast. */
export function renderInfeasible(body: ApiErrorBody): HTMLElement {
  return h(
    "div",
    { class: "result-card infeasible", "data-state": "infeasible", role: "status" },
    h("p", { class: "infeasible-title" }, "no legal line fits this budget"),
    h("p", { "data-field": "detail" }, body.detail),
  );
}

/** 4xx responses other than infeasible, shown inline with the reason. */
export function renderQueryError(body: ApiErrorBody | null, status: number): HTMLElement {
  return h(
    "div",
    { class: "result-card query-error", role: "alert" },
    h("p", {}, body ? `${body.error} (${status})` : `request failed (${status})`),
    h("p", { "data-field": "detail" }, body ? body.detail : ""),
  );
}

export interface HistoryEntry {
  query: OptimizeQuery;
  payload: OptimizePayload;
}

/** Strip of past optimizer answers, newest first, for side-by-side reading. */
export function renderHistory(entries: HistoryEntry[]): HTMLElement {
  const strip = h("div", { class: "history" });
  for (let i = entries.length - 1; i >= 0; i--) {
    const entry = entries[i];
    if (!entry) continue;
    const headline =
      entry.payload.mode === "map"
        ? num(entry.payload.prob_vs_reference)
        : num(entry.payload.summary.mean);
    strip.append(
      h(
        "div",
        { class: "history-entry", "data-index": String(i) },
        h("span", { class: "history-budget" }, formatCents(entry.query.budget_cents)),
        h("span", { class: "history-mode" }, entry.payload.mode),
        h("span", { class: "history-value numcell" }, headline),
      ),
    );
  }
  return strip;
}
