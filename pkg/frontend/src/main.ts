import { ApiError, Client } from "./api.js";
import { clear, h } from "./dom.js";
import { formatCents } from "./format.js";
import {
  buildMatchupQuery,
  canPlace,
  firstOpenSlot,
  SLOT_LABELS,
  submissionErrors,
} from "./lines.js";
import {
  renderHeatmap,
  renderHistogram,
  renderMatchupSummary,
} from "./matchup.js";
import { debounce, TokenGate } from "./net.js";
import {
  renderHistory,
  renderInfeasible,
  renderOptimizeResult,
  renderQueryError,
} from "./optimize.js";
import type { HistoryEntry } from "./optimize.js";
import {
  DEFAULT_VIEW,
  renderRatings,
  renderTeams,
  visibleRows,
} from "./ratings.js";
import type { RatingsView, SortKey } from "./ratings.js";
import {
  buildOptimizeQuery,
  feasibleBudgetBounds,
  initialState,
  optimizeQueryErrors,
  toggleExclude,
  togglePin,
} from "./state.js";
import type { BoardState } from "./state.js";
import type { PlayerRating, RatingsPayload } from "./types.js";
import { decodeState, encodeState } from "./url.js";

const OPTIMIZE_DEBOUNCE_MS = 250;

interface Page {
  client: Client;
  state: BoardState;
  ratings: RatingsPayload | null;
  roster: Map<string, PlayerRating>;
  view: RatingsView;
  history: HistoryEntry[];
  matchupSide: "home" | "away";
  optimizeGate: TokenGate;
  matchupGate: TokenGate;
  compareGate: TokenGate;
}

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing page element #${id}`);
  return el;
}

function syncUrl(page: Page): void {
  const query = encodeState(page.state);
  const api = new URLSearchParams(window.location.search).get("api");
  const merged = new URLSearchParams(query);
  if (api) merged.set("api", api);
  history.replaceState(null, "", `${window.location.pathname}?${merged}`);
}

function setStatus(id: string, text: string): void {
  const el = byId(id);
  clear(el);
  el.append(text);
}

// ---------------------------------------------------------------- ratings

function redrawRatings(page: Page): void {
  if (!page.ratings) return;
  const host = byId("ratings-table");
  clear(host);
  host.append(
    renderRatings(page.ratings, page.view, (key: SortKey) => {
      if (page.view.sortKey === key) {
        page.view = { ...page.view, descending: !page.view.descending };
      } else {
        page.view = { ...page.view, sortKey: key, descending: true };
      }
      redrawRatings(page);
    }),
  );
  const teams = byId("ratings-teams");
  clear(teams);
  teams.append(renderTeams(page.ratings));
}

// --------------------------------------------------------------- optimize

function redrawChips(page: Page): void {
  if (!page.ratings) return;
  const host = byId("optimize-chips");
  clear(host);
  for (const p of visibleRows(page.ratings, { ...DEFAULT_VIEW, nonzeroOnly: false })) {
    const chip = h(
      "button",
      { class: "chip", "data-player": p.id, title: `${p.position} ${formatCents(p.salary_cents)}` },
      p.id,
    );
    if (page.state.pinned.includes(p.id)) chip.classList.add("pinned");
    if (page.state.excluded.includes(p.id)) chip.classList.add("excluded");
    chip.addEventListener("click", () => {
      page.state = togglePin(page.state, p.id);
      afterOptimizeStateChange(page);
    });
    chip.addEventListener("contextmenu", (ev) => {
      ev.preventDefault();
      page.state = toggleExclude(page.state, p.id);
      afterOptimizeStateChange(page);
    });
    host.append(chip);
  }
}

function runOptimize(page: Page): void {
  const errors = optimizeQueryErrors(page.state, page.roster);
  const errorHost = byId("optimize-errors");
  clear(errorHost);
  if (errors.length > 0) {
    for (const message of errors) errorHost.append(h("p", { class: "error" }, message));
    return;
  }
  const query = buildOptimizeQuery(page.state);
  const token = page.optimizeGate.issue();
  const host = byId("optimize-result");
  page.client
    .optimize(page.state.model, query)
    .then((payload) => {
      if (!page.optimizeGate.isLatest(token)) return;
      page.state = { ...page.state, lastOptimize: payload };
      page.history.push({ query, payload });
      clear(host);
      host.append(renderOptimizeResult(payload, page.state.pinned));
      const strip = byId("optimize-history");
      clear(strip);
      strip.append(renderHistory(page.history));
    })
    .catch((err) => {
      if (!page.optimizeGate.isLatest(token)) return;
      clear(host);
      if (err instanceof ApiError && err.body && err.body.error === "InfeasibleRoster") {
        host.append(renderInfeasible(err.body));
      } else if (err instanceof ApiError) {
        host.append(renderQueryError(err.body, err.status));
      } else {
        host.append(h("p", { class: "error" }, String(err)));
      }
    });
}

const debouncedOptimize = debounce((page: Page) => runOptimize(page), OPTIMIZE_DEBOUNCE_MS);

function afterOptimizeStateChange(page: Page): void {
  redrawChips(page);
  setStatus("budget-label", formatCents(page.state.budgetCents));
  syncUrl(page);
  debouncedOptimize(page);
}

function wireBudgetControls(page: Page): void {
  const slider = byId("budget") as HTMLInputElement;
  slider.addEventListener("input", () => {
    page.state = { ...page.state, budgetCents: Number(slider.value) };
    afterOptimizeStateChange(page);
  });
  const mode = byId("optimize-mode") as HTMLSelectElement;
  mode.addEventListener("change", () => {
    page.state = { ...page.state, mode: mode.value === "draws" ? "draws" : "map" };
    afterOptimizeStateChange(page);
  });
}

function applyBudgetBounds(page: Page): void {
  const slider = byId("budget") as HTMLInputElement;
  const bounds = page.ratings ? feasibleBudgetBounds(page.ratings.players) : null;
  if (bounds) {
    slider.min = String(bounds.loCents);
    slider.max = String(bounds.hiCents);
    slider.step = "100";
    setStatus(
      "budget-bounds",
      `legal lines cost ${formatCents(bounds.loCents)} to ${formatCents(bounds.hiCents)}`,
    );
    if (page.state.budgetCents === 0) {
      page.state.budgetCents = Math.round((bounds.loCents + bounds.hiCents) / 2);
    }
    page.state.budgetCents = Math.min(
      Math.max(page.state.budgetCents, bounds.loCents),
      bounds.hiCents,
    );
  }
  slider.value = String(page.state.budgetCents);
  setStatus("budget-label", formatCents(page.state.budgetCents));
  const mode = byId("optimize-mode") as HTMLSelectElement;
  mode.value = page.state.mode;
}

// ---------------------------------------------------------------- matchup

function slotHost(side: "home" | "away", index: number): HTMLElement {
  return byId(`${side}-slot-${index}`);
}

function redrawBoard(page: Page): void {
  for (const side of ["home", "away"] as const) {
    const line = page.state[side];
    for (let i = 0; i < 6; i++) {
      const host = slotHost(side, i);
      clear(host);
      const pid = line[i];
      host.append(h("b", {}, SLOT_LABELS[i] ?? ""), " ", pid ?? "·");
      host.classList.toggle("filled", pid !== null);
    }
  }
  const errors = submissionErrors(page.roster, page.state.home, page.state.away);
  const run = byId("run-matchup") as HTMLButtonElement;
  run.disabled = errors.length > 0;
  run.title = errors.length > 0 ? (errors[0] as string) : "";
}

function placeOnBoard(page: Page, side: "home" | "away", index: number, pid: string): void {
  const same = page.state[side];
  const other = page.state[side === "home" ? "away" : "home"];
  const verdict = canPlace(page.roster, same, other, index, pid);
  if (!verdict.ok) {
    setStatus("matchup-errors", verdict.reason);
    return;
  }
  setStatus("matchup-errors", "");
  const next = same.slice();
  next[index] = pid;
  page.state = { ...page.state, [side]: next };
  redrawBoard(page);
  syncUrl(page);
}

function wireSlots(page: Page): void {
  for (const side of ["home", "away"] as const) {
    for (let i = 0; i < 6; i++) {
      const host = slotHost(side, i);
      host.addEventListener("click", () => {
        const line = page.state[side].slice();
        if (line[i] !== null) {
          line[i] = null;
          page.state = { ...page.state, [side]: line };
          redrawBoard(page);
          syncUrl(page);
        }
      });
      host.addEventListener("dragover", (ev) => ev.preventDefault());
      host.addEventListener("drop", (ev) => {
        ev.preventDefault();
        const pid = ev.dataTransfer?.getData("text/plain");
        if (pid) placeOnBoard(page, side, i, pid);
      });
    }
  }
  const sideSelect = byId("matchup-side") as HTMLSelectElement;
  sideSelect.addEventListener("change", () => {
    page.matchupSide = sideSelect.value === "away" ? "away" : "home";
  });
  byId("run-matchup").addEventListener("click", () => runMatchup(page));
}

function redrawBench(page: Page): void {
  const bench = byId("matchup-bench");
  clear(bench);
  for (const p of page.roster.values()) {
    const chip = h(
      "button",
      { class: "chip", draggable: "true", "data-player": p.id, title: p.position },
      p.id,
    );
    chip.addEventListener("dragstart", (ev) => {
      ev.dataTransfer?.setData("text/plain", p.id);
    });
    chip.addEventListener("click", () => {
      const side = page.matchupSide;
      const other = page.state[side === "home" ? "away" : "home"];
      const index = firstOpenSlot(page.roster, page.state[side], other, p.id);
      if (index < 0) {
        setStatus("matchup-errors", `no open legal ${p.position} slot on ${side} for ${p.id}`);
        return;
      }
      placeOnBoard(page, side, index, p.id);
    });
    bench.append(chip);
  }
}

function runMatchup(page: Page): void {
  const bins = Number((byId("matchup-bins") as HTMLInputElement).value) || 20;
  let query;
  try {
    query = buildMatchupQuery(page.roster, page.state.home, page.state.away, bins);
  } catch (err) {
    setStatus("matchup-errors", String(err instanceof Error ? err.message : err));
    return;
  }
  const token = page.matchupGate.issue();
  page.client
    .matchup(page.state.model, query)
    .then((payload) => {
      if (!page.matchupGate.isLatest(token)) return;
      const host = byId("matchup-result");
      clear(host);
      host.append(renderMatchupSummary(payload), renderHistogram(payload));
    })
    .catch((err) => {
      if (!page.matchupGate.isLatest(token)) return;
      setStatus(
        "matchup-errors",
        err instanceof ApiError ? err.message : String(err),
      );
    });
}

// ---------------------------------------------------------------- compare

function redrawCompareOptions(page: Page): void {
  const select = byId("compare-ids") as HTMLSelectElement;
  clear(select);
  for (const p of page.roster.values()) {
    const option = h("option", { value: p.id }, p.id) as HTMLOptionElement;
    option.selected = page.state.compareIds.includes(p.id);
    select.append(option);
  }
}

function wireCompare(page: Page): void {
  const select = byId("compare-ids") as HTMLSelectElement;
  byId("run-compare").addEventListener("click", () => {
    const ids = Array.from(select.selectedOptions).map((o) => o.value);
    page.state = { ...page.state, compareIds: ids };
    syncUrl(page);
    if (ids.length < 2) {
      setStatus("compare-errors", "pick at least two players to compare");
      return;
    }
    setStatus("compare-errors", "");
    const token = page.compareGate.issue();
    page.client
      .compare(page.state.model, ids)
      .then((payload) => {
        if (!page.compareGate.isLatest(token)) return;
        const host = byId("compare-result");
        clear(host);
        host.append(renderHeatmap(payload));
      })
      .catch((err) => {
        if (!page.compareGate.isLatest(token)) return;
        setStatus(
          "compare-errors",
          err instanceof ApiError ? err.message : String(err),
        );
      });
  });
}

// --------------------------------------------------------------- startup

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? `${window.location.protocol}//${window.location.hostname}:8787`;
  const client = new Client(base);

  let health;
  try {
    health = await client.health();
  } catch (err) {
    setStatus("health", `cannot reach API at ${base}: ${String(err)}`);
    return;
  }
  const fallback = health.models[0];
  if (fallback === undefined) {
    setStatus("health", "API is up but serves no models");
    return;
  }
  setStatus("health", `API ${health.status}, models: ${health.models.join(", ")}`);

  const page: Page = {
    client,
    state: decodeState(window.location.search, fallback),
    ratings: null,
    roster: new Map(),
    view: { ...DEFAULT_VIEW },
    history: [],
    matchupSide: "home",
    optimizeGate: new TokenGate(),
    matchupGate: new TokenGate(),
    compareGate: new TokenGate(),
  };
  if (!health.models.includes(page.state.model)) {
    page.state = { ...page.state, model: fallback };
  }

  const picker = byId("model") as HTMLSelectElement;
  clear(picker);
  for (const name of health.models) {
    picker.append(h("option", { value: name }, name));
  }
  picker.value = page.state.model;
  picker.addEventListener("change", () => {
    page.state = { ...initialState(picker.value), model: picker.value };
    void loadModel(page);
  });

  const filter = byId("ratings-nonzero") as HTMLInputElement;
  filter.addEventListener("change", () => {
    page.view = { ...page.view, nonzeroOnly: filter.checked };
    redrawRatings(page);
  });

  wireSlots(page);
  wireCompare(page);
  wireBudgetControls(page);
  await loadModel(page);
}

async function loadModel(page: Page): Promise<void> {
  const ratings = await page.client.ratings(page.state.model);
  page.ratings = ratings;
  page.roster = new Map(ratings.players.map((p) => [p.id, p]));
  redrawRatings(page);
  redrawChips(page);
  redrawBench(page);
  redrawCompareOptions(page);
  applyBudgetBounds(page);
  redrawBoard(page);
  syncUrl(page);
  runOptimize(page);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => void boot());
  } else {
    void boot();
  }
}
