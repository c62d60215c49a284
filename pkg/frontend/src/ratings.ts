import { h } from "./dom.js";
import { formatCents, num } from "./format.js";
import type { PlayerRating, RatingsPayload } from "./types.js";

export type SortKey = "id" | "position" | "beta" | "salary_cents" | "pm";

export interface RatingsView {
  sortKey: SortKey;
  descending: boolean;
  nonzeroOnly: boolean;
}

export const DEFAULT_VIEW: RatingsView = {
  sortKey: "beta",
  descending: true,
  nonzeroOnly: false,
};

/** Rows in display order: filtered, then stably sorted on the view key. */
export function visibleRows(
  payload: RatingsPayload,
  view: RatingsView,
): PlayerRating[] {
  const rows = payload.players.filter((p) => !view.nonzeroOnly || p.beta !== 0);
  const keyed = rows.map((player, index) => ({ player, index }));
  const sign = view.descending ? -1 : 1;
  keyed.sort((a, b) => {
    const x = a.player[view.sortKey];
    const y = b.player[view.sortKey];
    if (x < y) return -sign;
    if (x > y) return sign;
    return a.index - b.index; // stable on ties
  });
  return keyed.map((k) => k.player);
}

const COLUMNS: [SortKey, string][] = [
  ["id", "player"],
  ["position", "pos"],
  ["beta", "effect"],
  ["salary_cents", "salary"],
  ["pm", "plus-minus"],
];

/**
 * Sortable roster table. Effect and plus-minus cells carry the payload
 * numbers verbatim; salary is the exact cents reformatted as dollars.
 */
export function renderRatings(
  payload: RatingsPayload,
  view: RatingsView,
  onSort?: (key: SortKey) => void,
): HTMLTableElement {
  const head = h("tr", {});
  for (const [key, label] of COLUMNS) {
    const th = h("th", { "data-sort": key }, label);
    if (view.sortKey === key) {
      th.classList.add(view.descending ? "sorted-desc" : "sorted-asc");
    }
    if (onSort) th.addEventListener("click", () => onSort(key));
    head.append(th);
  }
  const table = h("table", { class: "ratings" }, h("thead", {}, head));
  const body = h("tbody", {});
  for (const p of visibleRows(payload, view)) {
    body.append(
      h(
        "tr",
        { "data-player": p.id },
        h("td", { "data-field": "id" }, p.id),
        h("td", { "data-field": "position" }, p.position),
        h("td", { "data-field": "beta", class: "numcell" }, num(p.beta)),
        h("td", { "data-field": "salary", class: "numcell" }, formatCents(p.salary_cents)),
        h("td", { "data-field": "pm", class: "numcell" }, num(p.pm)),
      ),
    );
  }
  table.append(body);
  return table;
}

/** Team rows under the roster; alphas rendered verbatim. */
export function renderTeams(payload: RatingsPayload): HTMLElement {
  const list = h("ul", { class: "teams" });
  for (const t of payload.teams) {
    list.append(
      h(
        "li",
        { "data-team": t.id },
        h("span", { "data-field": "team-id" }, t.id),
        " ",
        h("span", { "data-field": "alpha", class: "numcell" }, num(t.alpha)),
      ),
    );
  }
  return list;
}
