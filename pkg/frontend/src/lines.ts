import { SLOT_POSITIONS } from "./types.js";
import type { MatchupQuery, PlayerRating } from "./types.js";

/** Slot labels in display order: goalie, center, left, right, two defense. */
export const SLOT_LABELS = ["G", "C", "L", "R", "D1", "D2"] as const;

export type PlaceResult = { ok: true } | { ok: false; reason: string };

/**
 * Whether a player may occupy slot `slotIndex` of one line, given the other
 * five slots of that line and all six of the opposing line. Position must
 * match the slot and no player may appear twice on the board.
 */
export function canPlace(
  roster: Map<string, PlayerRating>,
  sameLine: (string | null)[],
  otherLine: (string | null)[],
  slotIndex: number,
  playerId: string,
): PlaceResult {
  const entry = roster.get(playerId);
  if (!entry) {
    return { ok: false, reason: `${playerId} is not on the roster` };
  }
  const wanted = SLOT_POSITIONS[slotIndex];
  if (wanted === undefined) {
    return { ok: false, reason: `no slot ${slotIndex}; lines have 6 slots` };
  }
  if (entry.position !== wanted) {
    return {
      ok: false,
      reason: `${playerId} plays ${entry.position}, slot ${SLOT_LABELS[slotIndex]} needs ${wanted}`,
    };
  }
  for (let i = 0; i < sameLine.length; i++) {
    if (i !== slotIndex && sameLine[i] === playerId) {
      return { ok: false, reason: `${playerId} is already on this line` };
    }
  }
  if (otherLine.includes(playerId)) {
    return { ok: false, reason: `${playerId} is already on the opposing line` };
  }
  return { ok: true };
}

/** First empty slot the player could legally take, or -1. */
export function firstOpenSlot(
  roster: Map<string, PlayerRating>,
  sameLine: (string | null)[],
  otherLine: (string | null)[],
  playerId: string,
): number {
  for (let i = 0; i < SLOT_POSITIONS.length; i++) {
    if (sameLine[i] === null && canPlace(roster, sameLine, otherLine, i, playerId).ok) {
      return i;
    }
  }
  return -1;
}

/**
 * Why the board cannot be submitted yet: unfilled slots first, then any
 * rule violation re-checked against the final assignment. Empty means ready.
 */
export function submissionErrors(
  roster: Map<string, PlayerRating>,
  home: (string | null)[],
  away: (string | null)[],
): string[] {
  const errors: string[] = [];
  const sides: [string, (string | null)[], (string | null)[]][] = [
    ["home", home, away],
    ["away", away, home],
  ];
  for (const [name, line, other] of sides) {
    for (let i = 0; i < SLOT_POSITIONS.length; i++) {
      const pid = line[i];
      if (pid === null || pid === undefined) {
        errors.push(`${name} slot ${SLOT_LABELS[i]} is empty`);
        continue;
      }
      const placed = canPlace(roster, line, other, i, pid);
      if (!placed.ok) {
        errors.push(`${name}: ${placed.reason}`);
      }
    }
  }
  return errors;
}

/** Matchup request from a complete, rule-clean board. Throws otherwise. */
export function buildMatchupQuery(
  roster: Map<string, PlayerRating>,
  home: (string | null)[],
  away: (string | null)[],
  bins: number,
): MatchupQuery {
  const errors = submissionErrors(roster, home, away);
  if (errors.length > 0) {
    throw new Error(`line not submittable: ${errors[0]}`);
  }
  return {
    home: home.map((pid) => pid as string),
    away: away.map((pid) => pid as string),
    bins,
  };
}
