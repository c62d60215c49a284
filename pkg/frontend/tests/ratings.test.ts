import { describe, expect, it } from "vitest";

import { formatCents } from "../src/format.js";
import { DEFAULT_VIEW, renderRatings, renderTeams, visibleRows } from "../src/ratings.js";
import type { RatingsPayload } from "../src/types.js";
import { fixture } from "./helpers.js";

const payload = fixture<RatingsPayload>("ratings");

function cellText(row: Element, field: string): string {
  const cell = row.querySelector(`[data-field="${field}"]`);
  if (!cell) throw new Error(`row has no ${field} cell`);
  return cell.textContent ?? "";
}

describe("ratings table is the payload, verbatim", () => {
  it("every row's effect and plus-minus cells equal the API numbers exactly", () => {
    const table = renderRatings(payload, { ...DEFAULT_VIEW });
    const byId = new Map(payload.players.map((p) => [p.id, p]));
    const rows = Array.from(table.querySelectorAll("tbody tr"));
    expect(rows).toHaveLength(payload.players.length);
    for (const row of rows) {
      const id = row.getAttribute("data-player") ?? "";
      const p = byId.get(id);
      expect(p).toBeDefined();
      if (!p) continue;
      expect(cellText(row, "beta")).toBe(String(p.beta));
      expect(cellText(row, "pm")).toBe(String(p.pm));
      expect(cellText(row, "position")).toBe(p.position);
      expect(cellText(row, "salary")).toBe(formatCents(p.salary_cents));
    }
  });

  it("team rows carry the alphas verbatim", () => {
    const list = renderTeams(payload);
    for (const t of payload.teams) {
      const item = list.querySelector(`[data-team="${t.id}"]`);
      expect(item).not.toBeNull();
      expect(item?.querySelector('[data-field="alpha"]')?.textContent).toBe(
        String(t.alpha),
      );
    }
  });
});

describe("nonzero filter", () => {
  it("shows exactly the nonzero-effect set", () => {
    const table = renderRatings(payload, { ...DEFAULT_VIEW, nonzeroOnly: true });
    const shown = new Set(
      Array.from(table.querySelectorAll("tbody tr")).map(
        (row) => row.getAttribute("data-player") ?? "",
      ),
    );
    const expected = new Set(
      payload.players.filter((p) => p.beta !== 0).map((p) => p.id),
    );
    expect(shown).toEqual(expected);
    expect(expected.size).toBeGreaterThan(0); // fixture league has real effects
    expect(expected.size).toBeLessThan(payload.players.length);
  });
});

describe("sorting", () => {
  it("sort by salary matches numeric order", () => {
    const rows = visibleRows(payload, {
      sortKey: "salary_cents",
      descending: false,
      nonzeroOnly: false,
    });
    const salaries = rows.map((p) => p.salary_cents);
    expect(salaries).toEqual([...salaries].sort((a, b) => a - b));

    const table = renderRatings(payload, {
      sortKey: "salary_cents",
      descending: false,
      nonzeroOnly: false,
    });
    const rendered = Array.from(table.querySelectorAll("tbody tr")).map(
      (row) => row.getAttribute("data-player"),
    );
    expect(rendered).toEqual(rows.map((p) => p.id));
  });

  it("ties keep payload order (stable sort)", () => {
    const rows = visibleRows(payload, {
      sortKey: "beta",
      descending: false,
      nonzeroOnly: false,
    });
    // zero-effect players tie on the sort key; their relative order must
    // match the payload's
    const zerosShown = rows.filter((p) => p.beta === 0).map((p) => p.id);
    const zerosPayload = payload.players
      .filter((p) => p.beta === 0)
      .map((p) => p.id);
    expect(zerosShown).toEqual(zerosPayload);
  });

  it("descending flips the comparator but not tie order", () => {
    const asc = visibleRows(payload, {
      sortKey: "pm",
      descending: false,
      nonzeroOnly: false,
    });
    const desc = visibleRows(payload, {
      sortKey: "pm",
      descending: true,
      nonzeroOnly: false,
    });
    expect(asc.map((p) => p.pm)).toEqual(
      [...asc.map((p) => p.pm)].sort((a, b) => a - b),
    );
    expect(desc.map((p) => p.pm)).toEqual(
      [...desc.map((p) => p.pm)].sort((a, b) => b - a),
    );
    const pmOf = (id: string) => payload.players.find((p) => p.id === id)?.pm;
    const tiedDesc = desc.filter((p, i) => desc[i + 1]?.pm === p.pm);
    for (const p of tiedDesc) {
      const next = desc[desc.indexOf(p) + 1];
      if (!next) continue;
      const i = payload.players.findIndex((q) => q.id === p.id);
      const j = payload.players.findIndex((q) => q.id === next.id);
      expect(pmOf(p.id)).toBe(pmOf(next.id));
      expect(i).toBeLessThan(j);
    }
  });
});
