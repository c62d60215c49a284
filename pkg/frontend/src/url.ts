import { initialState } from "./state.js";
import type { BoardState } from "./state.js";

/**
 * Board state to/from a query string, so every what-if scenario is a
 * shareable link. The last optimizer response is derived, not encoded.
 */

function packSlots(slots: (string | null)[]): string {
  return slots.map((pid) => pid ?? "").join(",");
}

function unpackSlots(text: string): (string | null)[] {
  const slots = text.split(",").map((pid) => (pid === "" ? null : pid));
  while (slots.length < 6) slots.push(null);
  return slots.slice(0, 6);
}

export function encodeState(state: BoardState): string {
  const params = new URLSearchParams();
  params.set("model", state.model);
  params.set("budget", String(state.budgetCents));
  params.set("mode", state.mode);
  if (state.maxDraws !== null) params.set("draws", String(state.maxDraws));
  if (state.pinned.length > 0) params.set("pin", state.pinned.join(","));
  if (state.excluded.length > 0) params.set("exclude", state.excluded.join(","));
  if (state.home.some((pid) => pid !== null)) params.set("home", packSlots(state.home));
  if (state.away.some((pid) => pid !== null)) params.set("away", packSlots(state.away));
  if (state.compareIds.length > 0) params.set("compare", state.compareIds.join(","));
  return params.toString();
}

export function decodeState(query: string, fallbackModel: string): BoardState {
  const params = new URLSearchParams(query);
  const state = initialState(params.get("model") ?? fallbackModel);
  const budget = Number(params.get("budget") ?? "0");
  if (Number.isSafeInteger(budget) && budget >= 0) state.budgetCents = budget;
  if (params.get("mode") === "draws") state.mode = "draws";
  const draws = params.get("draws");
  if (draws !== null && Number.isSafeInteger(Number(draws)) && Number(draws) > 0) {
    state.maxDraws = Number(draws);
  }
  const list = (key: string) =>
    (params.get(key) ?? "").split(",").filter((pid) => pid !== "");
  state.pinned = list("pin");
  state.excluded = list("exclude");
  state.compareIds = list("compare");
  const home = params.get("home");
  if (home !== null) state.home = unpackSlots(home);
  const away = params.get("away");
  if (away !== null) state.away = unpackSlots(away);
  return state;
}
