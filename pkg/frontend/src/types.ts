/** Wire types for the icepartial HTTP/JSON API, shaped to match payloads exactly. */

export type Position = "G" | "C" | "L" | "R" | "D";

/** One skater or goalie per position: G, C, L, R each take one, D takes two. */
export const SLOT_POSITIONS: readonly Position[] = ["G", "C", "L", "R", "D", "D"];

export interface PlayerRating {
  id: string;
  position: Position;
  beta: number;
  salary_cents: number;
  pm: number;
}

export interface TeamRating {
  id: string;
  alpha: number;
}

export interface RatingsPayload {
  players: PlayerRating[];
  teams: TeamRating[];
  source: string;
}

export interface ComparePayload {
  ids: string[];
  matrix: number[][];
  n_draws: number;
}

export interface MatchupQuery {
  home: string[];
  away: string[];
  bins: number;
}

export interface MatchupPayload {
  mode: string;
  prob_mean: number;
  quantiles: { q05: number; q50: number; q95: number } | null;
  histogram: { counts: number[]; edges: number[] } | null;
  n_draws?: number;
}

/** Six player ids keyed by slot; defense holds exactly two. */
export interface LineIds {
  goalie: string;
  center: string;
  left: string;
  right: string;
  defense: string[];
}

export interface OptimizeQuery {
  budget_cents: number;
  mode: "map" | "draws";
  pinned?: string[];
  excluded?: string[];
  max_draws?: number;
}

export interface OptimizeMapPayload {
  mode: "map";
  line: LineIds;
  cost_cents: number;
  score: number;
  prob_vs_reference: number;
  reference: string;
  source: string;
}

export interface OptimizeDrawsPayload {
  mode: "draws";
  modal_line: LineIds;
  modal_line_frequency: number;
  cost_cents: number;
  n_draws_used: number;
  reference: string;
  summary: { mean: number; q05: number; q95: number };
}

export type OptimizePayload = OptimizeMapPayload | OptimizeDrawsPayload;

export interface ApiErrorBody {
  error: string;
  code: string;
  detail: string;
}

export interface HealthPayload {
  status: string;
  models: string[];
}
