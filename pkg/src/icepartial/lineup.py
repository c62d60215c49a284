"""Turning fitted player effects into lineup decisions.

A line is one goalie, one center, one left wing, one right wing, and two
defensemen. Salaries are integer cents throughout; budget arithmetic never
touches floats. Line search is exact branch-and-bound over the five position
groups with an optimistic bound from per-group unconstrained maxima, and
ties in total effect break lexicographically on the canonical id tuple
(goalie, center, left, right, defense sorted ascending).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from icepartial.design import ColumnDirectory
from icepartial.errors import (
    DegenerateDesign,
    DimensionMismatch,
    EmptyInput,
    InconsistentPosition,
    InfeasibleRoster,
    InvalidConfig,
    OverlappingLines,
    UnknownPlayer,
)
from icepartial.gibbs import PosteriorDraws

LINE_SLOTS: dict[str, int] = {"G": 1, "C": 1, "L": 1, "R": 1, "D": 2}
ROSTER_HEADER = ["player_id", "position", "salary_usd"]


@dataclass(frozen=True)
class RosterEntry:
    player_id: str
    position: str
    salary_cents: int
    col_index: int  # column in the fitted directory

    def __post_init__(self):
        if self.position not in LINE_SLOTS:
            raise InvalidConfig(f"roster position must be one of GCLRD, got {self.position!r}")
        if self.salary_cents < 0:
            raise InvalidConfig(f"negative salary for {self.player_id}")


@dataclass(frozen=True)
class Line:
    goalie: str
    center: str
    left: str
    right: str
    defense: tuple[str, str]

    def __post_init__(self):
        d1, d2 = self.defense
        if d1 > d2:
            object.__setattr__(self, "defense", (d2, d1))
        ids = self.ids()
        if len(set(ids)) != 6:
            raise InvalidConfig(f"line repeats a player: {ids}")

    def ids(self) -> tuple[str, str, str, str, str, str]:
        return (self.goalie, self.center, self.left, self.right) + self.defense


@dataclass(frozen=True)
class LineQuery:
    budget_cents: int
    pinned: frozenset[str] = frozenset()
    excluded: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.budget_cents < 0:
            raise InvalidConfig("budget must be non-negative")
        clash = self.pinned & self.excluded
        if clash:
            raise InvalidConfig(f"players both pinned and excluded: {sorted(clash)}")


def parse_roster(
    stream: Iterable[str] | str | Path,
    directory: ColumnDirectory,
    *,
    skip_unknown: bool = False,
) -> list[RosterEntry]:
    """Read a roster CSV (player_id,position,salary_usd) against a directory.

    Salaries are parsed as exact decimals and stored as integer cents. Every
    roster player must exist in the directory with a matching position tag;
    skip_unknown instead drops players the directory never saw.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, newline="") as fh:
            return parse_roster(fh, directory, skip_unknown=skip_unknown)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("empty roster stream") from None
    if [h.strip() for h in header] != ROSTER_HEADER:
        raise InvalidConfig(f"bad roster header, expected {','.join(ROSTER_HEADER)}")
    entries: list[RosterEntry] = []
    seen: set[str] = set()
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != 3:
            raise InvalidConfig(f"roster row {lineno}: expected 3 fields")
        pid, pos, salary = (f.strip() for f in row)
        if pid in seen:
            raise InvalidConfig(f"roster row {lineno}: duplicate player {pid}")
        seen.add(pid)
        try:
            scaled = Decimal(salary) * 100
        except InvalidOperation:
            raise InvalidConfig(f"roster row {lineno}: bad salary {salary!r}") from None
        if scaled != scaled.to_integral_value():
            # salaries must be whole cents; rounding would break exact budget math
            raise InvalidConfig(f"roster row {lineno}: salary {salary!r} is not whole cents")
        cents = int(scaled)
        if skip_unknown and not directory.has_player(pid):
            continue
        col = directory.player_index(pid)
        tagged = directory.position_of(pid)
        if tagged != pos:
            raise InconsistentPosition(
                f"roster row {lineno}: {pid} listed as {pos} but events tag {tagged}"
            )
        entries.append(RosterEntry(pid, pos, cents, col))
    if not entries:
        raise EmptyInput("roster has a header but no usable players")
    return entries


def line_vector(directory: ColumnDirectory, home: Line, away: Line) -> np.ndarray:
    """Design-space vector for a matchup: +1 on home players, -1 on away.

    Team and interaction columns stay zero (a neutral-site, main-effects
    matchup). The two lines must either share no players or be the same six
    players (a mirror matchup, which cancels to the zero vector); partial
    overlap is an error.
    """
    home_set, away_set = set(home.ids()), set(away.ids())
    shared = home_set & away_set
    if shared and shared != home_set | away_set:
        raise OverlappingLines(f"lines share players: {sorted(shared)}")
    x = np.zeros(directory.n_cols)
    for pid in home.ids():
        x[directory.player_index(pid)] += 1.0
    for pid in away.ids():
        x[directory.player_index(pid)] -= 1.0
    return x


def line_from_ids(directory: ColumnDirectory, ids: Sequence[str]) -> Line:
    """Assemble a Line from six player ids, positions read from the directory."""
    ids = list(ids)
    if len(ids) != 6:
        raise InvalidConfig(f"a line needs exactly 6 players, got {len(ids)}")
    slots: dict[str, list[str]] = {pos: [] for pos in LINE_SLOTS}
    for pid in ids:
        slots[directory.position_of(pid)].append(pid)
    for pos, need in LINE_SLOTS.items():
        if len(slots[pos]) != need:
            raise InvalidConfig(
                f"line needs {need} at {pos}, got {len(slots[pos])}: {slots[pos]}"
            )
    return _line_from_slots(slots)


def matchup_prob(coeffs: np.ndarray, directory: ColumnDirectory, home: Line, away: Line) -> float:
    """Point probability that the home line scores next, under one coefficient vector."""
    return float(expit(line_vector(directory, home, away) @ np.asarray(coeffs)))


def matchup_distribution(draws: PosteriorDraws, home: Line, away: Line) -> np.ndarray:
    """Per-draw scoring probabilities for home vs away."""
    if draws.directory is None:
        raise InvalidConfig("draws carry no column directory")
    x = line_vector(draws.directory, home, away)
    return expit(draws.beta @ x)


def _by_position(
    roster: Sequence[RosterEntry], excluded: frozenset[str] = frozenset()
) -> dict[str, list[RosterEntry]]:
    groups: dict[str, list[RosterEntry]] = {pos: [] for pos in LINE_SLOTS}
    for entry in roster:
        if entry.player_id not in excluded:
            groups[entry.position].append(entry)
    for pos in groups:
        groups[pos].sort(key=lambda e: e.player_id)
    return groups


def _line_from_slots(slots: Mapping[str, list[str]]) -> Line:
    return Line(
        goalie=slots["G"][0],
        center=slots["C"][0],
        left=slots["L"][0],
        right=slots["R"][0],
        defense=tuple(sorted(slots["D"])),  # type: ignore[arg-type]
    )


def extreme_line(
    beta: np.ndarray, roster: Sequence[RosterEntry], *, best: bool = True
) -> Line:
    """Best (or worst) unconstrained line: per-position argmax (argmin) of the
    coefficient, ties broken by ascending player id."""
    groups = _by_position(roster)
    sign = -1.0 if best else 1.0
    chosen: dict[str, list[str]] = {}
    for pos, need in LINE_SLOTS.items():
        pool = groups[pos]
        if len(pool) < need:
            raise InfeasibleRoster(f"roster lacks {need} of position {pos}")
        ranked = sorted(pool, key=lambda e: (sign * beta[e.col_index], e.player_id))
        chosen[pos] = [e.player_id for e in ranked[:need]]
    return _line_from_slots(chosen)


def random_line(
    roster: Sequence[RosterEntry],
    rng: np.random.Generator,
    exclude: frozenset[str] = frozenset(),
) -> Line:
    """Uniform position-legal line, sampled without replacement."""
    groups = _by_position(roster, exclude)
    chosen: dict[str, list[str]] = {}
    for pos, need in LINE_SLOTS.items():
        pool = groups[pos]
        if len(pool) < need:
            raise InfeasibleRoster(f"too few eligible {pos} players")
        picks = rng.choice(len(pool), size=need, replace=False)
        chosen[pos] = [pool[int(i)].player_id for i in picks]
    return _line_from_slots(chosen)


def line_cost(roster: Sequence[RosterEntry], line: Line) -> int:
    salary = {e.player_id: e.salary_cents for e in roster}
    try:
        return sum(salary[pid] for pid in line.ids())
    except KeyError as exc:
        raise UnknownPlayer(f"player {exc.args[0]!r} not on roster") from None


def line_score(beta: np.ndarray, roster: Sequence[RosterEntry], line: Line) -> float:
    """Canonical total effect: summed left-to-right over the id tuple, so every
    search backend reports bit-identical scores."""
    col = {e.player_id: e.col_index for e in roster}
    total = 0.0
    for pid in line.ids():
        try:
            total += float(beta[col[pid]])
        except KeyError:
            raise UnknownPlayer(f"player {pid!r} not on roster") from None
    return total


def optimize_line(
    beta: np.ndarray,
    roster: Sequence[RosterEntry],
    query: LineQuery,
) -> Line | None:
    """Exact budget-constrained line optimization, or None when infeasible.

    Branch-and-bound over position groups ordered G, C, L, R, D-pair.
    Candidates within each group are sorted by coefficient descending (id
    ascending on ties); the bound adds each remaining group's unconstrained
    maximum. Equal-scoring lines resolve to the lexicographically smallest
    id tuple.
    """
    roster_ids = {e.player_id for e in roster}
    for pid in query.pinned | query.excluded:
        if pid not in roster_ids:
            raise UnknownPlayer(f"query references {pid!r}, not on roster")
    groups = _by_position(roster, query.excluded)

    pinned_by_pos: dict[str, list[RosterEntry]] = {pos: [] for pos in LINE_SLOTS}
    entry_of = {e.player_id: e for e in roster}
    for pid in sorted(query.pinned):
        entry = entry_of[pid]
        pinned_by_pos[entry.position].append(entry)
        if len(pinned_by_pos[entry.position]) > LINE_SLOTS[entry.position]:
            raise InvalidConfig(
                f"too many pinned players at position {entry.position}"
            )

    # Candidate selections per stage; each selection is a tuple of entries.
    stages: list[list[tuple[RosterEntry, ...]]] = []
    for pos, need in LINE_SLOTS.items():
        pinned_here = pinned_by_pos[pos]
        free = [e for e in groups[pos] if e.player_id not in query.pinned]
        take = need - len(pinned_here)
        if take < 0 or len(pinned_here) + len(free) < need:
            return None
        if take == 0:
            options = [tuple(pinned_here)]
        elif need == 1:
            options = [(e,) for e in free]
        else:  # defense pair, possibly with one pinned
            if take == 1:
                options = [tuple(pinned_here) + (e,) for e in free]
            else:
                options = [pair for pair in combinations(free, 2)]
        scored = [
            (sum(beta[e.col_index] for e in opt), sum(e.salary_cents for e in opt), opt)
            for opt in options
        ]
        scored.sort(key=lambda t: (-t[0], tuple(e.player_id for e in t[2])))
        stages.append([(s, c, opt) for s, c, opt in scored])

    if any(not stage for stage in stages):
        return None
    best_tail = [0.0] * (len(stages) + 1)
    min_cost_tail = [0] * (len(stages) + 1)
    for i in range(len(stages) - 1, -1, -1):
        best_tail[i] = best_tail[i + 1] + stages[i][0][0]
        min_cost_tail[i] = min_cost_tail[i + 1] + min(c for _, c, _ in stages[i])

    best_line: Line | None = None
    best_score = -np.inf
    best_ids: tuple[str, ...] = ()
    slack = 1e-9

    def visit(stage: int, chosen: list[tuple[RosterEntry, ...]], score: float, cost: int):
        nonlocal best_line, best_score, best_ids
        if cost + min_cost_tail[stage] > query.budget_cents:
            return
        if score + best_tail[stage] < best_score - slack * max(1.0, abs(best_score)):
            return
        if stage == len(stages):
            line = _line_from_slots(
                {
                    pos: [e.player_id for e in sel]
                    for pos, sel in zip(LINE_SLOTS, chosen)
                }
            )
            canonical = line_score(beta, roster, line)
            ids = line.ids()
            if canonical > best_score or (canonical == best_score and ids < best_ids):
                best_line, best_score, best_ids = line, canonical, ids
            return
        for opt_score, opt_cost, opt in stages[stage]:
            visit(stage + 1, chosen + [opt], score + opt_score, cost + opt_cost)

    visit(0, [], 0.0, 0)
    return best_line


@dataclass
class SweepRow:
    budget_cents: int
    feasible: bool
    mean: float | None = None
    q05: float | None = None
    q95: float | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    # per-draw optimization objectives, shape (n_draws, n_budgets); NaN where infeasible
    objectives: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def to_csv_text(self) -> str:
        lines = ["budget,mean,q05,q95,feasible"]
        for row in self.rows:
            if row.feasible:
                lines.append(
                    f"{row.budget_cents / 100:.2f},{row.mean!r},{row.q05!r},{row.q95!r},true"
                )
            else:
                lines.append(f"{row.budget_cents / 100:.2f},,,,false")
        return "\n".join(lines) + "\n"


def budget_sweep(
    draws: PosteriorDraws,
    roster: Sequence[RosterEntry],
    budgets: Sequence[int],
    rng: np.random.Generator,
    *,
    pinned: frozenset[str] = frozenset(),
    excluded: frozenset[str] = frozenset(),
    max_draws: int | None = None,
) -> SweepResult:
    """Posterior budget sweep: per draw and budget, optimize the line, then
    score it against a freshly sampled random opponent.

    Summaries are the mean and the 5/95 percent quantiles of the per-draw
    scoring probabilities. Budgets where no legal line exists are marked
    infeasible and skipped. max_draws subsamples the chain evenly.
    """
    if draws.directory is None:
        raise InvalidConfig("draws carry no column directory")
    budgets = [int(b) for b in budgets]
    if not budgets:
        raise InvalidConfig("no budgets to sweep")
    if sorted(budgets) != budgets:
        raise InvalidConfig("budgets must be ascending")

    beta_all = draws.beta
    if max_draws is not None and max_draws < beta_all.shape[0]:
        keep = np.linspace(0, beta_all.shape[0] - 1, max_draws).round().astype(int)
        beta_all = beta_all[np.unique(keep)]
    t = beta_all.shape[0]

    feasible = {
        b: optimize_line(beta_all[0], roster, LineQuery(b, pinned, excluded)) is not None
        for b in budgets
    }
    objectives = np.full((t, len(budgets)), np.nan)
    probs = np.full((t, len(budgets)), np.nan)
    for ti in range(t):
        beta = beta_all[ti]
        for bi, budget in enumerate(budgets):
            if not feasible[budget]:
                continue
            line = optimize_line(beta, roster, LineQuery(budget, pinned, excluded))
            assert line is not None  # feasibility is budget-monotone and beta-free
            objectives[ti, bi] = line_score(beta, roster, line)
            opponent = random_line(roster, rng, exclude=frozenset(line.ids()) | excluded)
            x = line_vector(draws.directory, line, opponent)
            probs[ti, bi] = float(expit(x @ beta))

    rows = []
    for bi, budget in enumerate(budgets):
        if not feasible[budget]:
            rows.append(SweepRow(budget_cents=budget, feasible=False))
        else:
            col = probs[:, bi]
            rows.append(
                SweepRow(
                    budget_cents=budget,
                    feasible=True,
                    mean=float(col.mean()),
                    q05=float(np.quantile(col, 0.05)),
                    q95=float(np.quantile(col, 0.95)),
                )
            )
    return SweepResult(rows=rows, objectives=objectives)


@dataclass
class SalaryRegression:
    slope_a: float
    se_a: float  # residual standard error of fit a
    slope_b: float
    se_b: float
    interaction_p: float


def _ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, np.ndarray]:
    n = len(x)
    sxx = float(((x - x.mean()) ** 2).sum())
    if sxx == 0.0:
        raise DegenerateDesign("salaries are constant")
    slope = float(((x - x.mean()) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    se = float(np.sqrt((resid**2).sum() / (n - 2)))
    return slope, se, resid


def salary_regression(
    metric_a: np.ndarray, metric_b: np.ndarray, salaries: np.ndarray
) -> SalaryRegression:
    """Compare how two player metrics track salary.

    Fits each metric on salary by OLS, reports slopes and residual standard
    errors, and tests slope equality via the salary-by-metric interaction in
    the pooled regression (two-sided t test). Identical metrics give an
    interaction p-value of 1 up to numerical noise.
    """
    a = np.asarray(metric_a, dtype=np.float64)
    b = np.asarray(metric_b, dtype=np.float64)
    s = np.asarray(salaries, dtype=np.float64)
    if not (a.shape == b.shape == s.shape) or a.ndim != 1:
        raise DimensionMismatch("metric and salary vectors must share one shape")
    n = len(s)
    if n < 3:
        raise DegenerateDesign(f"need at least 3 players, got {n}")

    slope_a, se_a, _ = _ols_line(s, a)
    slope_b, se_b, _ = _ols_line(s, b)

    # Pooled model: y ~ 1 + salary + group + salary:group, group = 1 for metric b.
    y = np.concatenate([a, b])
    g = np.concatenate([np.zeros(n), np.ones(n)])
    ss = np.concatenate([s, s])
    design = np.column_stack([np.ones(2 * n), ss, g, ss * g])
    gram = design.T @ design
    try:
        coef = np.linalg.solve(gram, design.T @ y)
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        raise DegenerateDesign("pooled salary design is singular") from None
    resid = y - design @ coef
    df = 2 * n - 4
    sigma2 = float((resid**2).sum() / df)
    se_inter = float(np.sqrt(sigma2 * gram_inv[3, 3]))
    if se_inter == 0.0:
        pval = 1.0
    else:
        tstat = coef[3] / se_inter
        pval = float(2.0 * stats.t.sf(abs(tstat), df))
    return SalaryRegression(
        slope_a=slope_a, se_a=se_a, slope_b=slope_b, se_b=se_b, interaction_p=pval
    )
