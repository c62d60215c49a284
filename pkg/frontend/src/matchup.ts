import { h } from "./dom.js";
import { num } from "./format.js";
import type { ComparePayload, MatchupPayload } from "./types.js";

/**
 * Scoring-probability histogram. One bar per bin; the bar label is the
 * payload count verbatim, the title carries the verbatim edges. Heights
 * scale to the tallest bin (style only, no data math).
 */
export function renderHistogram(payload: MatchupPayload): HTMLElement {
  const root = h("div", { class: "histogram" });
  if (payload.histogram === null) {
    root.append(h("p", {}, "point estimate only; no posterior draws in this model"));
    return root;
  }
  const { counts, edges } = payload.histogram;
  const tallest = Math.max(1, ...counts);
  for (let i = 0; i < counts.length; i++) {
    const count = counts[i] as number;
    const bar = h(
      "div",
      {
        class: "bar",
        "data-bin": String(i),
        title: `[${num(edges[i] as number)}, ${num(edges[i + 1] as number)}]`,
      },
      h("span", { class: "bar-count numcell" }, num(count)),
    );
    bar.style.height = `${Math.round((100 * count) / tallest)}%`;
    root.append(bar);
  }
  return root;
}

/** Mean and quantile summary, every number verbatim from the payload. */
export function renderMatchupSummary(payload: MatchupPayload): HTMLElement {
  const root = h(
    "div",
    { class: "matchup-summary" },
    h("span", { class: "stat-label" }, "P(home scores next)"),
    h("span", { "data-field": "prob-mean", class: "numcell" }, num(payload.prob_mean)),
  );
  if (payload.quantiles !== null) {
    root.append(
      h("span", { "data-field": "q05", class: "numcell" }, num(payload.quantiles.q05)),
      h("span", { "data-field": "q50", class: "numcell" }, num(payload.quantiles.q50)),
      h("span", { "data-field": "q95", class: "numcell" }, num(payload.quantiles.q95)),
    );
  }
  if (payload.n_draws !== undefined) {
    root.append(
      h("span", { "data-field": "n-draws", class: "numcell" }, num(payload.n_draws)),
    );
  }
  return root;
}

/**
 * Better-than heatmap: cell (i, j) is the verbatim probability that player
 * i outrates player j. Background opacity tracks the value (style only).
 */
export function renderHeatmap(payload: ComparePayload): HTMLTableElement {
  const head = h("tr", {}, h("th", {}));
  for (const id of payload.ids) {
    head.append(h("th", { "data-col": id }, id));
  }
  const table = h("table", { class: "heatmap" }, h("thead", {}, head));
  const body = h("tbody", {});
  for (let i = 0; i < payload.ids.length; i++) {
    const row = h("tr", {}, h("th", { "data-row": payload.ids[i] as string }, payload.ids[i] as string));
    for (let j = 0; j < payload.ids.length; j++) {
      const value = (payload.matrix[i] as number[])[j] as number;
      const cell = h(
        "td",
        {
          "data-cell": `${payload.ids[i]}|${payload.ids[j]}`,
          class: "numcell",
        },
        num(value),
      );
      cell.style.backgroundColor = `rgba(31, 119, 180, ${value.toFixed(3)})`;
      row.append(cell);
    }
    body.append(row);
  }
  table.append(body);
  return table;
}
