import type {
  OptimizePayload,
  OptimizeQuery,
  PlayerRating,
  Position,
} from "./types.js";

/** How many of each position a legal line carries. */
export const POSITION_NEED: Record<Position, number> = {
  G: 1,
  C: 1,
  L: 1,
  R: 1,
  D: 2,
};

/** Everything the page needs to reproduce a what-if scenario. */
export interface BoardState {
  model: string;
  budgetCents: number;
  mode: "map" | "draws";
  maxDraws: number | null;
  pinned: string[];
  excluded: string[];
  home: (string | null)[];
  away: (string | null)[];
  compareIds: string[];
  lastOptimize: OptimizePayload | null;
}

export function initialState(model: string): BoardState {
  return {
    model,
    budgetCents: 0,
    mode: "map",
    maxDraws: null,
    pinned: [],
    excluded: [],
    home: [null, null, null, null, null, null],
    away: [null, null, null, null, null, null],
    compareIds: [],
    lastOptimize: null,
  };
}

export interface BudgetBounds {
  loCents: number;
  hiCents: number;
}

/** Cheapest and priciest position-legal line costs, from roster salaries. */
export function feasibleBudgetBounds(players: PlayerRating[]): BudgetBounds | null {
  const byPos = new Map<Position, number[]>();
  for (const p of players) {
    const group = byPos.get(p.position) ?? [];
    group.push(p.salary_cents);
    byPos.set(p.position, group);
  }
  let lo = 0;
  let hi = 0;
  for (const [pos, need] of Object.entries(POSITION_NEED) as [Position, number][]) {
    const salaries = (byPos.get(pos) ?? []).slice().sort((a, b) => a - b);
    if (salaries.length < need) {
      return null;
    }
    for (let k = 0; k < need; k++) {
      lo += salaries[k] as number;
      hi += salaries[salaries.length - 1 - k] as number;
    }
  }
  return { loCents: lo, hiCents: hi };
}

/** Pin a player, dropping any exclusion on them; pinning twice unpins. */
export function togglePin(state: BoardState, id: string): BoardState {
  const pinned = state.pinned.includes(id)
    ? state.pinned.filter((p) => p !== id)
    : [...state.pinned, id].sort();
  return { ...state, pinned, excluded: state.excluded.filter((p) => p !== id) };
}

/** Exclude a player, dropping any pin on them; excluding twice readmits. */
export function toggleExclude(state: BoardState, id: string): BoardState {
  const excluded = state.excluded.includes(id)
    ? state.excluded.filter((p) => p !== id)
    : [...state.excluded, id].sort();
  return { ...state, excluded, pinned: state.pinned.filter((p) => p !== id) };
}

/**
 * Violations that would make the server reject the optimize query; the
 * panel refuses to send while any remain. Mirrors the server's rules:
 * non-negative budget, pins and excludes disjoint, pins within the
 * per-position slot counts, all ids on the roster.
 */
export function optimizeQueryErrors(
  state: BoardState,
  roster: Map<string, PlayerRating>,
): string[] {
  const errors: string[] = [];
  if (!Number.isSafeInteger(state.budgetCents) || state.budgetCents < 0) {
    errors.push("budget must be a non-negative whole number of cents");
  }
  const clash = state.pinned.filter((id) => state.excluded.includes(id));
  for (const id of clash) {
    errors.push(`${id} is both pinned and excluded`);
  }
  for (const id of [...state.pinned, ...state.excluded]) {
    if (!roster.has(id)) {
      errors.push(`${id} is not on the roster`);
    }
  }
  const pinnedPerPos = new Map<Position, string[]>();
  for (const id of state.pinned) {
    const entry = roster.get(id);
    if (!entry) continue;
    const group = pinnedPerPos.get(entry.position) ?? [];
    group.push(id);
    pinnedPerPos.set(entry.position, group);
  }
  for (const [pos, ids] of pinnedPerPos) {
    if (ids.length > POSITION_NEED[pos]) {
      errors.push(
        `too many pinned at ${pos}: ${ids.join(", ")} for ${POSITION_NEED[pos]} slot(s)`,
      );
    }
  }
  return errors;
}

export function buildOptimizeQuery(state: BoardState): OptimizeQuery {
  const query: OptimizeQuery = {
    budget_cents: state.budgetCents,
    mode: state.mode,
  };
  if (state.pinned.length > 0) query.pinned = state.pinned;
  if (state.excluded.length > 0) query.excluded = state.excluded;
  if (state.mode === "draws" && state.maxDraws !== null) {
    query.max_draws = state.maxDraws;
  }
  return query;
}
