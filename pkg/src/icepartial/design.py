"""Goal events and the signed indicator design matrix.

Each goal becomes one row: +1 entries for the home team and the six home
players on the ice, -1 for the away side. The response records which side
scored (+1 home, -1 away). Side information stays in the response; the
design encoding never depends on who scored.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse

from icepartial.errors import (
    EmptyInput,
    InconsistentPosition,
    MalformedEvent,
    UnknownColumn,
    UnknownPlayer,
)

POSITIONS = ("G", "C", "L", "R", "D")
INTERCEPT_ID = "(intercept)"

EVENT_HEADER = (
    ["goal_id", "season", "home_team", "away_team", "side"]
    + [f"h{i}" for i in range(1, 7)]
    + [f"a{i}" for i in range(1, 7)]
    + ["hpos", "apos"]
)


@dataclass(frozen=True)
class GoalEvent:
    """One goal: the teams, the twelve players on the ice, and who scored."""

    goal_id: str
    season: str
    home_team: str
    away_team: str
    scoring_side: int  # +1 home scored, -1 away scored
    home_players: tuple[tuple[str, str], ...]  # six (player_id, position) pairs
    away_players: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if self.scoring_side not in (+1, -1):
            raise MalformedEvent(0, f"scoring side must be +1 or -1, got {self.scoring_side}")
        if self.home_team == self.away_team:
            raise MalformedEvent(0, f"home and away teams both {self.home_team!r}")
        for label, group in (("home", self.home_players), ("away", self.away_players)):
            if len(group) != 6:
                raise MalformedEvent(0, f"{label} side has {len(group)} players, expected 6")
            ids = [p for p, _ in group]
            if len(set(ids)) != 6:
                raise MalformedEvent(0, f"duplicate player id on {label} side")
            tags = [t for _, t in group]
            for t in tags:
                if t not in POSITIONS:
                    raise MalformedEvent(0, f"unknown position tag {t!r} on {label} side")
            if tags.count("G") != 1:
                raise MalformedEvent(0, f"{label} side must have exactly one goalie")
        shared = {p for p, _ in self.home_players} & {p for p, _ in self.away_players}
        if shared:
            # a shared id would cancel to a zero design entry, breaking the
            # 12-nonzeros-per-row invariant
            raise MalformedEvent(0, f"player {sorted(shared)[0]!r} appears on both sides")


def parse_goals(stream: Iterable[str] | str | Path) -> list[GoalEvent]:
    """Parse a goal-event CSV into a list of events.

    Accepts a path or any iterable of text lines. Raises MalformedEvent with
    the offending row number on any contract violation; raises EmptyInput
    when the stream has no header at all. A header-only file is a valid
    empty list.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, newline="") as fh:
            return parse_goals(fh)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("no rows in goal-event stream") from None
    if [h.strip() for h in header] != EVENT_HEADER:
        raise MalformedEvent(0, f"bad header: expected {','.join(EVENT_HEADER)}")

    events: list[GoalEvent] = []
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(EVENT_HEADER):
            raise MalformedEvent(lineno, f"expected {len(EVENT_HEADER)} fields, got {len(row)}")
        goal_id, season, home_team, away_team, side = (f.strip() for f in row[:5])
        home_ids = [f.strip() for f in row[5:11]]
        away_ids = [f.strip() for f in row[11:17]]
        hpos, apos = row[17].strip(), row[18].strip()
        if side not in ("H", "A"):
            raise MalformedEvent(lineno, f"side must be H or A, got {side!r}")
        if len(hpos) != 6 or len(apos) != 6:
            raise MalformedEvent(lineno, "hpos and apos must be 6-character strings")
        try:
            event = GoalEvent(
                goal_id=goal_id,
                season=season,
                home_team=home_team,
                away_team=away_team,
                scoring_side=+1 if side == "H" else -1,
                home_players=tuple(zip(home_ids, hpos)),
                away_players=tuple(zip(away_ids, apos)),
            )
        except MalformedEvent as exc:
            raise MalformedEvent(lineno, exc.reason) from None
        events.append(event)
    return events


def write_goals(events: Sequence[GoalEvent], path: str | Path) -> None:
    """Serialize events back to the goal-event CSV format (parse round-trips)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_HEADER)
        for ev in events:
            writer.writerow(_goal_row(ev))


def goals_to_csv_text(events: Sequence[GoalEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(EVENT_HEADER)
    for ev in events:
        writer.writerow(_goal_row(ev))
    return buf.getvalue()


def _goal_row(ev: GoalEvent) -> list[str]:
    return (
        [ev.goal_id, ev.season, ev.home_team, ev.away_team, "H" if ev.scoring_side == 1 else "A"]
        + [p for p, _ in ev.home_players]
        + [p for p, _ in ev.away_players]
        + ["".join(t for _, t in ev.home_players), "".join(t for _, t in ev.away_players)]
    )


@dataclass(frozen=True)
class ColumnDirectory:
    """Ordered mapping from design columns to team / player / pair identities.

    Column order: optional intercept, then teams, then players, then
    player-pair interaction columns. Ids within each block are sorted, so a
    directory is a pure function of the ids it covers.
    """

    teams: tuple[str, ...]
    players: tuple[tuple[str, str], ...]  # (player_id, position), sorted by id
    interactions: tuple[tuple[str, str], ...] = ()
    intercept: bool = False

    @property
    def n_cols(self) -> int:
        return int(self.intercept) + len(self.teams) + len(self.players) + len(self.interactions)

    @property
    def team_offset(self) -> int:
        return int(self.intercept)

    @property
    def player_offset(self) -> int:
        return int(self.intercept) + len(self.teams)

    @property
    def interaction_offset(self) -> int:
        return self.player_offset + len(self.players)

    def team_index(self, team_id: str) -> int:
        try:
            return self.team_offset + self._team_pos()[team_id]
        except KeyError:
            raise UnknownColumn(f"team {team_id!r} not in directory") from None

    def player_index(self, player_id: str) -> int:
        try:
            return self.player_offset + self._player_pos()[player_id]
        except KeyError:
            raise UnknownPlayer(f"player {player_id!r} not in directory") from None

    def position_of(self, player_id: str) -> str:
        return self.players[self.player_index(player_id) - self.player_offset][1]

    def has_player(self, player_id: str) -> bool:
        return player_id in self._player_pos()

    def column_ids(self) -> list[str]:
        """Namespaced string id per column, for export artifacts."""
        ids: list[str] = []
        if self.intercept:
            ids.append(INTERCEPT_ID)
        ids.extend(f"team:{t}" for t in self.teams)
        ids.extend(f"player:{p}" for p, _ in self.players)
        ids.extend(f"pair:{a}|{b}" for a, b in self.interactions)
        return ids

    # Lookup dicts are derived data, cached lazily on the frozen instance.
    def _team_pos(self) -> dict[str, int]:
        cached = self.__dict__.get("_team_cache")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.teams)}
            object.__setattr__(self, "_team_cache", cached)
        return cached

    def _player_pos(self) -> dict[str, int]:
        cached = self.__dict__.get("_player_cache")
        if cached is None:
            cached = {p: i for i, (p, _) in enumerate(self.players)}
            object.__setattr__(self, "_player_cache", cached)
        return cached


@dataclass
class SparseDesign:
    """Triplet-form signed design with its response and column directory."""

    n_rows: int
    rows: np.ndarray  # int32
    cols: np.ndarray  # int32
    vals: np.ndarray  # int8, each in {-1, 0, +1} (zeros never stored)
    response: np.ndarray  # int8, each +1 or -1
    directory: ColumnDirectory
    has_team_block: bool = True

    @property
    def n_cols(self) -> int:
        return self.directory.n_cols

    def to_csc(self) -> sparse.csc_array:
        return sparse.csc_array(
            (self.vals.astype(np.float64), (self.rows, self.cols)),
            shape=(self.n_rows, self.n_cols),
        )

    def to_csr(self) -> sparse.csr_array:
        return sparse.csr_array(
            (self.vals.astype(np.float64), (self.rows, self.cols)),
            shape=(self.n_rows, self.n_cols),
        )

    def folded_csr(self) -> sparse.csr_array:
        """diag(response) @ X, the estimator-side view. Sign-folding happens
        here and nowhere else."""
        folded = self.vals.astype(np.float64) * self.response[self.rows]
        return sparse.csr_array(
            (folded, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        )

    def validate(self) -> None:
        """Assert the construction invariants. Cheap; run on every build."""
        if self.n_rows == 0:
            raise EmptyInput("design has no rows")
        if not np.isin(self.vals, (-1, 1)).all():
            raise MalformedEvent(0, "design values outside {-1,+1}")
        if not np.isin(self.response, (-1, 1)).all():
            raise MalformedEvent(0, "response values outside {-1,+1}")
        d = self.directory
        order = np.lexsort((self.cols, self.rows))
        rows, cols, vals = self.rows[order], self.cols[order], self.vals[order]
        boundaries = np.flatnonzero(np.diff(rows)) + 1
        row_ids = np.unique(rows)
        if len(row_ids) != self.n_rows or row_ids[0] != 0 or row_ids[-1] != self.n_rows - 1:
            raise MalformedEvent(0, "some design row has no entries")
        for r, cs, vs in zip(
            row_ids, np.split(cols, boundaries), np.split(vals, boundaries)
        ):
            if len(np.unique(cs)) != len(cs):
                raise MalformedEvent(int(r), "duplicate column within a row")
            in_team = (cs >= d.team_offset) & (cs < d.player_offset)
            in_player = (cs >= d.player_offset) & (cs < d.interaction_offset)
            if self.has_team_block:
                if in_team.sum() != 2 or vs[in_team].sum() != 0:
                    raise MalformedEvent(int(r), "team block must hold one +1 and one -1")
            if in_player.sum() != 12 or vs[in_player].sum() != 0:
                raise MalformedEvent(int(r), "player block must hold six +1 and six -1")


def _collect_directory(
    events: Sequence[GoalEvent], include_teams: bool, intercept: bool
) -> ColumnDirectory:
    teams: set[str] = set()
    positions: dict[str, str] = {}
    for ev in events:
        teams.add(ev.home_team)
        teams.add(ev.away_team)
        for pid, pos in ev.home_players + ev.away_players:
            seen = positions.get(pid)
            if seen is None:
                positions[pid] = pos
            elif seen != pos:
                raise InconsistentPosition(
                    f"player {pid} tagged both {seen} and {pos} across events"
                )
    return ColumnDirectory(
        teams=tuple(sorted(teams)) if include_teams else (),
        players=tuple(sorted(positions.items())),
        interactions=(),
        intercept=intercept,
    )


def build_design(
    events: Sequence[GoalEvent],
    *,
    include_teams: bool = True,
    interactions: bool = False,
    intercept: bool = False,
) -> SparseDesign:
    """Build the signed indicator design from parsed events.

    With include_teams, each row carries +1/-1 team entries; with intercept
    instead, a single always-on +1 column stands in for the team block (the
    shared home-advantage parameter of the player-only model). Interactions
    add one column per observed skater pair; see expand_interactions.
    """
    if not events:
        raise EmptyInput("no events to build a design from")
    if include_teams and intercept:
        raise MalformedEvent(0, "choose team columns or a single intercept, not both")
    directory = _collect_directory(events, include_teams, intercept)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    response = np.empty(len(events), dtype=np.int8)
    for i, ev in enumerate(events):
        response[i] = ev.scoring_side
        if intercept:
            rows.append(i)
            cols.append(0)
            vals.append(+1)
        if include_teams:
            rows += [i, i]
            cols += [directory.team_index(ev.home_team), directory.team_index(ev.away_team)]
            vals += [+1, -1]
        for pid, _ in ev.home_players:
            rows.append(i)
            cols.append(directory.player_index(pid))
            vals.append(+1)
        for pid, _ in ev.away_players:
            rows.append(i)
            cols.append(directory.player_index(pid))
            vals.append(-1)

    design = SparseDesign(
        n_rows=len(events),
        rows=np.asarray(rows, dtype=np.int32),
        cols=np.asarray(cols, dtype=np.int32),
        vals=np.asarray(vals, dtype=np.int8),
        response=response,
        directory=directory,
        has_team_block=include_teams,
    )
    if interactions:
        design = expand_interactions(design, events)
    design.validate()
    return design


def expand_interactions(design: SparseDesign, events: Sequence[GoalEvent]) -> SparseDesign:
    """Add one column per unordered skater pair observed on the ice together.

    Goalies never participate in pairs. A pair's entry in a row is the product
    of the two players' entries there: +1 when they share a side, -1 across
    sides, absent when either player is off the ice.
    """
    if len(events) != design.n_rows:
        raise MalformedEvent(0, "events do not match design rows")
    observed: set[tuple[str, str]] = set()
    per_row_pairs: list[list[tuple[str, str, int]]] = []
    for ev in events:
        skaters = [(pid, +1) for pid, pos in ev.home_players if pos != "G"]
        skaters += [(pid, -1) for pid, pos in ev.away_players if pos != "G"]
        row_pairs: list[tuple[str, str, int]] = []
        for a in range(len(skaters)):
            for b in range(a + 1, len(skaters)):
                (pa, va), (pb, vb) = skaters[a], skaters[b]
                key = (pa, pb) if pa < pb else (pb, pa)
                observed.add(key)
                row_pairs.append((key[0], key[1], va * vb))
        per_row_pairs.append(row_pairs)

    new_directory = ColumnDirectory(
        teams=design.directory.teams,
        players=design.directory.players,
        interactions=tuple(sorted(observed)),
        intercept=design.directory.intercept,
    )
    pair_col = {
        pair: new_directory.interaction_offset + k
        for k, pair in enumerate(new_directory.interactions)
    }
    extra_rows: list[int] = []
    extra_cols: list[int] = []
    extra_vals: list[int] = []
    for i, row_pairs in enumerate(per_row_pairs):
        for a, b, v in row_pairs:
            extra_rows.append(i)
            extra_cols.append(pair_col[(a, b)])
            extra_vals.append(v)

    return SparseDesign(
        n_rows=design.n_rows,
        rows=np.concatenate([design.rows, np.asarray(extra_rows, dtype=np.int32)]),
        cols=np.concatenate([design.cols, np.asarray(extra_cols, dtype=np.int32)]),
        vals=np.concatenate([design.vals, np.asarray(extra_vals, dtype=np.int8)]),
        response=design.response,
        directory=new_directory,
        has_team_block=design.has_team_block,
    )


@dataclass
class PlusMinusResult:
    """Traditional on-ice goal differentials. Missing ids read as 0."""

    players: Mapping[str, int] = field(default_factory=lambda: defaultdict(int))
    teams: Mapping[str, int] = field(default_factory=lambda: defaultdict(int))


def plus_minus(events: Sequence[GoalEvent]) -> PlusMinusResult:
    """Raw plus-minus: +1 per goal your side scored while you were out there,
    -1 per goal against. Teams aggregate the same way over their games."""
    players: defaultdict[str, int] = defaultdict(int)
    teams: defaultdict[str, int] = defaultdict(int)
    for ev in events:
        s = ev.scoring_side
        teams[ev.home_team] += s
        teams[ev.away_team] -= s
        for pid, _ in ev.home_players:
            players[pid] += s
        for pid, _ in ev.away_players:
            players[pid] -= s
    return PlusMinusResult(players=players, teams=teams)


def iter_on_ice(event: GoalEvent) -> Iterator[tuple[str, str, int]]:
    """Yield (player_id, position, sign) for everyone on the ice."""
    for pid, pos in event.home_players:
        yield pid, pos, +1
    for pid, pos in event.away_players:
        yield pid, pos, -1


# ---------------------------------------------------------------------------
# Design artifact: directory.json + triplets.csv + response.csv in one folder.
# ---------------------------------------------------------------------------


def directory_to_dict(directory: ColumnDirectory) -> dict:
    return {
        "teams": list(directory.teams),
        "players": [list(p) for p in directory.players],
        "interactions": [list(p) for p in directory.interactions],
        "intercept": directory.intercept,
    }


def directory_from_dict(data: dict) -> ColumnDirectory:
    return ColumnDirectory(
        teams=tuple(data["teams"]),
        players=tuple((p, q) for p, q in data["players"]),
        interactions=tuple((a, b) for a, b in data["interactions"]),
        intercept=bool(data.get("intercept", False)),
    )


def save_design(design: SparseDesign, out_dir: str | Path) -> None:
    """Write a design artifact: directory.json, triplets.csv (row,col_id,value
    with namespaced column ids), and response.csv (row,side)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = directory_to_dict(design.directory)
    meta["has_team_block"] = design.has_team_block
    meta["n_rows"] = design.n_rows
    (out / "directory.json").write_text(json.dumps(meta, indent=1) + "\n")
    ids = design.directory.column_ids()
    with open(out / "triplets.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col_id", "value"])
        order = np.lexsort((design.cols, design.rows))
        for k in order:
            writer.writerow(
                [int(design.rows[k]), ids[int(design.cols[k])], int(design.vals[k])]
            )
    with open(out / "response.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "side"])
        for i in range(design.n_rows):
            writer.writerow([i, "H" if design.response[i] > 0 else "A"])


def load_design(in_dir: str | Path) -> SparseDesign:
    """Read a design artifact written by save_design. Round-trips exactly."""
    src = Path(in_dir)
    meta = json.loads((src / "directory.json").read_text())
    directory = directory_from_dict(meta)
    col_of = {cid: k for k, cid in enumerate(directory.column_ids())}
    n_rows = int(meta["n_rows"])
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    with open(src / "triplets.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["row", "col_id", "value"]:
            raise MalformedEvent(0, "bad triplets.csv header")
        for row in reader:
            r, cid, v = row
            if cid not in col_of:
                raise UnknownColumn(f"triplet references unknown column {cid!r}")
            rows.append(int(r))
            cols.append(col_of[cid])
            vals.append(int(v))
    response = np.zeros(n_rows, dtype=np.int8)
    seen = np.zeros(n_rows, dtype=bool)
    with open(src / "response.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["row", "side"]:
            raise MalformedEvent(0, "bad response.csv header")
        for row in reader:
            r, side = row
            i = int(r)
            if side not in ("H", "A") or not 0 <= i < n_rows or seen[i]:
                raise MalformedEvent(i, "bad or repeated response row")
            response[i] = 1 if side == "H" else -1
            seen[i] = True
    if not seen.all():
        raise MalformedEvent(0, "response.csv misses some rows")
    design = SparseDesign(
        n_rows=n_rows,
        rows=np.asarray(rows, dtype=np.int32),
        cols=np.asarray(cols, dtype=np.int32),
        vals=np.asarray(vals, dtype=np.int8),
        response=response,
        directory=directory,
        has_team_block=bool(meta.get("has_team_block", bool(directory.teams))),
    )
    design.validate()
    return design
