"""Synthetic goal-event generator with known ground truth, plus brute-force
oracles used by the test suite.

The generator draws a league (teams, position-quota rosters, sparse player
effects), then samples goals: pick a home/away team pair, put a position-legal
six-player group on the ice for each side, and let the home side score with
probability inverse-logit of (team effect difference + on-ice player effect
difference). A line-cohesion knob deploys fixed forward trios and defense
pairs together with the given probability, which recreates the heavily
aliased designs that make raw plus-minus unreliable.

The oracles are deliberately independent implementations: exhaustive grids
and full enumeration, sharing no numeric kernels with the estimation code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit, gammaln

from icepartial.design import GoalEvent, SparseDesign
from icepartial.errors import (
    InvalidConfig,
    RosterTooLarge,
    TooManyCoefficients,
    UnknownPlayer,
)
from icepartial.lineup import LINE_SLOTS, Line, LineQuery, RosterEntry
from icepartial.penalties import GammaLasso, Laplace, Penalty, Ridge, validate_penalties

DEFAULT_QUOTAS: dict[str, int] = {"G": 2, "C": 4, "L": 4, "R": 4, "D": 6}


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of a synthetic league.

    Player effects are sparse: each skater or goalie is nonzero with
    probability beta_fraction, or, when beta_count is set, a uniformly
    chosen subset of exactly beta_count players is nonzero. Nonzero
    magnitudes are uniform over beta_range with a random sign. Explicit
    team_effects / player_effects override the random draws (any player
    id not listed stays at zero).
    """

    n_teams: int = 4
    quotas: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_QUOTAS))
    n_goals: int = 1000
    team_sd: float = 0.1
    beta_fraction: float = 0.1
    beta_count: int | None = None
    beta_range: tuple[float, float] = (0.8, 1.5)
    line_cohesion: float = 0.0
    seed: int = 0
    team_effects: tuple[float, ...] | None = None
    player_effects: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.n_teams < 2:
            raise InvalidConfig("need at least 2 teams")
        if self.n_goals < 0:
            raise InvalidConfig("n_goals must be non-negative")
        quotas = dict(self.quotas)
        object.__setattr__(self, "quotas", quotas)
        if set(quotas) != set(LINE_SLOTS):
            raise InvalidConfig("quotas must cover exactly the positions G,C,L,R,D")
        for pos, need in LINE_SLOTS.items():
            if quotas[pos] < need:
                raise InvalidConfig(f"quota for {pos} must be at least {need}")
        if not 0.0 <= self.beta_fraction <= 1.0:
            raise InvalidConfig("beta_fraction must lie in [0,1]")
        if self.beta_count is not None:
            total = self.n_teams * sum(quotas.values())
            if not 0 <= self.beta_count <= total:
                raise InvalidConfig(f"beta_count must lie in [0,{total}]")
            if self.player_effects is not None:
                raise InvalidConfig("beta_count and player_effects are exclusive")
        if not 0.0 <= self.line_cohesion <= 1.0:
            raise InvalidConfig("line_cohesion must lie in [0,1]")
        lo, hi = self.beta_range
        if not 0.0 <= lo <= hi:
            raise InvalidConfig("beta_range must satisfy 0 <= lo <= hi")
        if self.team_sd < 0:
            raise InvalidConfig("team_sd must be non-negative")
        if self.team_effects is not None and len(self.team_effects) != self.n_teams:
            raise InvalidConfig("team_effects length must equal n_teams")


@dataclass(frozen=True)
class GroundTruth:
    """The generating parameters behind a synthetic event set."""

    true_alpha: Mapping[str, float]
    true_beta: Mapping[str, float]
    support: frozenset[str]
    rosters: Mapping[str, tuple[tuple[str, str], ...]]

    def __post_init__(self):
        nonzero = frozenset(p for p, b in self.true_beta.items() if b != 0.0)
        if nonzero != self.support:
            raise InvalidConfig("support set must match nonzero effects exactly")

    def position_of(self, player_id: str) -> str:
        for members in self.rosters.values():
            for pid, pos in members:
                if pid == player_id:
                    return pos
        raise UnknownPlayer(f"unknown player {player_id!r}")

    def all_players(self) -> list[tuple[str, str]]:
        out = []
        for members in self.rosters.values():
            out.extend(members)
        out.sort()
        return out

    def to_dict(self) -> dict:
        return {
            "true_alpha": dict(sorted(self.true_alpha.items())),
            "true_beta": dict(sorted(self.true_beta.items())),
            "support": sorted(self.support),
            "rosters": {t: [list(p) for p in m] for t, m in sorted(self.rosters.items())},
        }

    @staticmethod
    def from_dict(data: dict) -> "GroundTruth":
        return GroundTruth(
            true_alpha=dict(data["true_alpha"]),
            true_beta=dict(data["true_beta"]),
            support=frozenset(data["support"]),
            rosters={
                t: tuple((p, q) for p, q in members)
                for t, members in data["rosters"].items()
            },
        )


def team_name(i: int) -> str:
    return f"T{i + 1:02d}"


def _build_rosters(config: SynthConfig) -> dict[str, tuple[tuple[str, str], ...]]:
    rosters = {}
    for t in range(config.n_teams):
        team = team_name(t)
        members = []
        for pos in ("G", "C", "L", "R", "D"):
            for k in range(config.quotas[pos]):
                members.append((f"{team}-{pos}{k + 1}", pos))
        rosters[team] = tuple(members)
    return rosters


def _draw_truth(config: SynthConfig, rng: np.random.Generator) -> GroundTruth:
    rosters = _build_rosters(config)
    teams = sorted(rosters)
    if config.team_effects is not None:
        alpha = {t: float(a) for t, a in zip(teams, config.team_effects)}
    else:
        alpha = {t: float(rng.normal(0.0, config.team_sd)) for t in teams}
    beta: dict[str, float] = {}
    all_ids = [pid for t in teams for pid, _ in rosters[t]]
    if config.player_effects is not None:
        known = set(all_ids)
        for pid in config.player_effects:
            if pid not in known:
                raise UnknownPlayer(f"player_effects names unknown player {pid!r}")
        beta = {pid: float(config.player_effects.get(pid, 0.0)) for pid in all_ids}
    else:
        lo, hi = config.beta_range
        if config.beta_count is not None:
            chosen = set(
                rng.choice(all_ids, size=config.beta_count, replace=False).tolist()
            )
            hit = [pid in chosen for pid in all_ids]
        else:
            hit = [bool(rng.random() < config.beta_fraction) for pid in all_ids]
        for pid, is_hit in zip(all_ids, hit):
            if is_hit:
                mag = float(rng.uniform(lo, hi))
                beta[pid] = mag if rng.random() < 0.5 else -mag
            else:
                beta[pid] = 0.0
    support = frozenset(p for p, b in beta.items() if b != 0.0)
    return GroundTruth(true_alpha=alpha, true_beta=beta, support=support, rosters=rosters)


def _cohesion_units(
    members: Sequence[tuple[str, str]]
) -> tuple[dict[str, list[str]], list[tuple[str, str, str]], list[tuple[str, str]]]:
    by_pos: dict[str, list[str]] = {pos: [] for pos in LINE_SLOTS}
    for pid, pos in members:
        by_pos[pos].append(pid)
    n_lines = min(len(by_pos["C"]), len(by_pos["L"]), len(by_pos["R"]))
    forward_lines = [
        (by_pos["C"][k], by_pos["L"][k], by_pos["R"][k]) for k in range(n_lines)
    ]
    dpool = by_pos["D"]
    pairs = [(dpool[2 * k], dpool[2 * k + 1]) for k in range(len(dpool) // 2)]
    return by_pos, forward_lines, pairs


def generate(
    config: SynthConfig, rng: np.random.Generator | None = None
) -> tuple[list[GoalEvent], GroundTruth]:
    """Sample goal events from a synthetic league with known effects."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    truth = _draw_truth(config, rng)
    teams = sorted(truth.rosters)
    units = {t: _cohesion_units(truth.rosters[t]) for t in teams}
    width = max(4, len(str(max(config.n_goals, 1))))
    events: list[GoalEvent] = []

    def on_ice(team: str) -> list[tuple[str, str]]:
        by_pos, lines, pairs = units[team]
        goalie = by_pos["G"][int(rng.integers(len(by_pos["G"])))]
        cohesive = config.line_cohesion > 0.0 and rng.random() < config.line_cohesion
        if cohesive and lines and pairs:
            c, l, r = lines[int(rng.integers(len(lines)))]
            d1, d2 = pairs[int(rng.integers(len(pairs)))]
        else:
            c = by_pos["C"][int(rng.integers(len(by_pos["C"])))]
            l = by_pos["L"][int(rng.integers(len(by_pos["L"])))]
            r = by_pos["R"][int(rng.integers(len(by_pos["R"])))]
            ds = rng.choice(len(by_pos["D"]), size=2, replace=False)
            d1, d2 = by_pos["D"][int(ds[0])], by_pos["D"][int(ds[1])]
        return [(goalie, "G"), (c, "C"), (l, "L"), (r, "R"), (d1, "D"), (d2, "D")]

    for g in range(config.n_goals):
        hi_idx = int(rng.integers(len(teams)))
        aw_idx = int(rng.integers(len(teams) - 1))
        if aw_idx >= hi_idx:
            aw_idx += 1
        home, away = teams[hi_idx], teams[aw_idx]
        home_six = on_ice(home)
        away_six = on_ice(away)
        m = truth.true_alpha[home] - truth.true_alpha[away]
        for pid, _ in home_six:
            m += truth.true_beta[pid]
        for pid, _ in away_six:
            m -= truth.true_beta[pid]
        side = 1 if rng.random() < expit(m) else -1
        events.append(
            GoalEvent(
                goal_id=f"g{g + 1:0{width}d}",
                season="synth",
                home_team=home,
                away_team=away,
                scoring_side=side,
                home_players=tuple(home_six),
                away_players=tuple(away_six),
            )
        )
    return events, truth


def synth_salaries(
    truth: GroundTruth,
    rng: np.random.Generator,
    *,
    base_cents: int = 150_000_000,
    per_effect_cents: int = 300_000_000,
    noise_sd_cents: int = 50_000_000,
) -> dict[str, int]:
    """Salary table loosely tracking true effects, in integer cents.

    Salary = base + per_effect * beta + noise, floored at a league minimum of
    one tenth of base. Correlated-but-noisy salaries keep salary regressions
    on synthetic data non-trivial.
    """
    floor = base_cents // 10
    out = {}
    for pid, pos in truth.all_players():
        cents = (
            base_cents
            + int(per_effect_cents * truth.true_beta[pid])
            + int(noise_sd_cents * rng.normal())
        )
        out[pid] = max(floor, cents)
    return out


def roster_csv_text(truth: GroundTruth, salaries: Mapping[str, int]) -> str:
    lines = ["player_id,position,salary_usd"]
    for pid, pos in truth.all_players():
        cents = salaries[pid]
        lines.append(f"{pid},{pos},{cents // 100}.{cents % 100:02d}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Brute-force oracles. Independent implementations: no estimation kernels.
# ---------------------------------------------------------------------------


def _collapse_rows(design: SparseDesign) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sign-folded rows as a dense (k, p) array with multiplicities.

    Row entries live in {-1, 0, +1}, so small designs collapse to a handful
    of patterns and grid evaluation scales with patterns, not rows.
    """
    dense = np.asarray(design.folded_csr().todense(), dtype=np.float64)
    patterns, counts = np.unique(dense, axis=0, return_counts=True)
    return patterns, counts.astype(np.float64)


def _penalty_terms(
    penalties: Sequence[Penalty],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized penalty parameters: ridge precision, L1 rate, GL (s, r)."""
    p = len(penalties)
    ridge_prec = np.zeros(p)
    l1_rate = np.zeros(p)
    gl_s = np.zeros(p)
    gl_r = np.ones(p)
    for j, pen in enumerate(penalties):
        if isinstance(pen, Ridge):
            ridge_prec[j] = 1.0 / pen.sigma**2
        elif isinstance(pen, Laplace):
            l1_rate[j] = pen.rate
        elif isinstance(pen, GammaLasso):
            gl_s[j] = pen.s
            gl_r[j] = pen.r
        else:
            raise InvalidConfig(f"unknown penalty type {type(pen).__name__}")
    return ridge_prec, l1_rate, gl_s, gl_r


def _objective_on_points(
    patterns: np.ndarray,
    counts: np.ndarray,
    penalties: Sequence[Penalty],
    points: np.ndarray,
) -> np.ndarray:
    """Exact objective at each of a (m, p) stack of coefficient points."""
    ridge_prec, l1_rate, gl_s, gl_r = _penalty_terms(penalties)
    margins = points @ patterns.T  # (m, k)
    loss = np.logaddexp(0.0, -margins) @ counts
    absb = np.abs(points)
    loss += 0.5 * (points**2) @ ridge_prec
    loss += absb @ l1_rate
    loss += np.log1p(absb / gl_r) @ gl_s
    return loss


def _axes_from_box(
    box: tuple[float, float] | Sequence[tuple[float, float]], step: float, p: int
) -> list[np.ndarray]:
    if step <= 0:
        raise InvalidConfig("grid step must be positive")
    if isinstance(box[0], (int, float)):
        boxes = [tuple(box)] * p  # type: ignore[list-item]
    else:
        boxes = [tuple(b) for b in box]  # type: ignore[union-attr]
    if len(boxes) != p:
        raise InvalidConfig(f"box must give {p} coordinate ranges")
    axes = []
    for lo, hi in boxes:
        if lo > hi:
            raise InvalidConfig("box must satisfy lo <= hi")
        n = int(math.floor((hi - lo) / step + 0.5)) + 1
        axes.append(lo + step * np.arange(n))
    return axes


def oracle_map_grid(
    design: SparseDesign,
    penalties: Sequence[Penalty],
    box: tuple[float, float] | Sequence[tuple[float, float]],
    step: float,
) -> tuple[np.ndarray, float]:
    """Exhaustive grid minimum of the penalized objective (at most 3 coefficients)."""
    p = design.directory.n_cols
    validate_penalties(penalties, p)
    if p > 3:
        raise TooManyCoefficients(f"grid oracle handles at most 3 coefficients, got {p}")
    patterns, counts = _collapse_rows(design)
    axes = _axes_from_box(box, step, p)
    total = 1
    for ax in axes:
        total *= len(ax)
    if total > 50_000_000:
        raise InvalidConfig(
            f"grid of {total} points is too large; shrink the box or use the refined oracle"
        )
    best_val = np.inf
    best_pt = np.zeros(p)
    chunk = 1_000_000
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        vals = _objective_on_points(patterns, counts, penalties, block)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_pt = block[i].copy()
    return best_pt, best_val


def oracle_map_refined(
    design: SparseDesign,
    penalties: Sequence[Penalty],
    box: tuple[float, float] | Sequence[tuple[float, float]],
    steps: Sequence[float] = (0.1, 0.01, 0.001),
    keep: int = 8,
) -> tuple[np.ndarray, float]:
    """Coarse-to-fine grid minimum: full scan at the first step, then local
    exhaustive windows around the best `keep` survivors at each finer step.

    A literal single-pass fine grid over a 3-coefficient box is astronomically
    large; tracking several coarse basins guards against the mild
    multimodality a concave penalty can introduce. Window half-width is 1.2x
    the previous step, comfortably past the half-cell distance between the
    basin minimum and its best coarse representative.
    """
    p = design.directory.n_cols
    validate_penalties(penalties, p)
    if p > 3:
        raise TooManyCoefficients(f"grid oracle handles at most 3 coefficients, got {p}")
    if not steps or any(s <= 0 for s in steps):
        raise InvalidConfig("steps must be positive")
    patterns, counts = _collapse_rows(design)
    if p == 1:
        # one dimension is cheap enough to scan at the final step directly
        return oracle_map_grid(design, penalties, box, steps[-1])
    axes = _axes_from_box(box, steps[0], p)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = _objective_on_points(patterns, counts, penalties, pts)
    order = np.argsort(vals)[: max(keep, 1)]
    centers = pts[order]

    if isinstance(box[0], (int, float)):
        bounds = [tuple(box)] * p  # type: ignore[list-item]
    else:
        bounds = [tuple(b) for b in box]  # type: ignore[union-attr]

    for prev_step, step in zip(steps, steps[1:]):
        half = 1.2 * prev_step
        cand_pts = []
        for center in centers:
            local_axes = []
            for j in range(p):
                lo = max(bounds[j][0], center[j] - half)
                hi = min(bounds[j][1], center[j] + half)
                n = int(math.floor((hi - lo) / step + 0.5)) + 1
                local_axes.append(lo + step * np.arange(n))
            lm = np.meshgrid(*local_axes, indexing="ij")
            cand_pts.append(np.stack([m.ravel() for m in lm], axis=1))
        pts = np.concatenate(cand_pts, axis=0)
        vals = _objective_on_points(patterns, counts, penalties, pts)
        order = np.argsort(vals)[: max(keep, 1)]
        centers = pts[order]

    best = int(np.argmin(vals[order]))
    return centers[best].copy(), float(vals[order][best])


def oracle_posterior_quadrature(
    design: SparseDesign,
    penalties: Sequence[Penalty],
    grid: Sequence[np.ndarray] | np.ndarray,
    *,
    lambda_shape: float = 2.0,
    lambda_rate: float = 0.1,
) -> dict[str, np.ndarray | float]:
    """Tensor-grid integration of the exact posterior (at most 2 coefficients).

    Ridge coordinates keep their Gaussian prior. All other coordinates share
    one Laplace rate with a Gamma(lambda_shape, lambda_rate) hyperprior, which
    integrates out in closed form against the Laplace terms, leaving a smooth
    integrand over the coefficients alone. Returns posterior means and
    variances per coefficient plus the posterior mean/variance of the shared
    rate.
    """
    p = design.directory.n_cols
    validate_penalties(penalties, p)
    if p > 2:
        raise TooManyCoefficients(f"quadrature oracle handles at most 2 coefficients, got {p}")
    if isinstance(grid, np.ndarray) and grid.ndim == 1:
        grid = [grid] * p
    axes = [np.asarray(ax, dtype=np.float64) for ax in grid]
    if len(axes) != p:
        raise InvalidConfig(f"need {p} grid axes, got {len(axes)}")

    patterns, counts = _collapse_rows(design)
    ridge_prec = np.zeros(p)
    l1 = np.zeros(p, dtype=bool)
    for j, pen in enumerate(penalties):
        if isinstance(pen, Ridge):
            ridge_prec[j] = 1.0 / pen.sigma**2
        else:
            l1[j] = True
    n_l1 = int(l1.sum())

    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    margins = pts @ patterns.T
    log_post = -(np.logaddexp(0.0, -margins) @ counts)
    log_post -= 0.5 * (pts**2) @ ridge_prec
    a, b = lambda_shape, lambda_rate
    if n_l1:
        s_abs = np.abs(pts[:, l1]).sum(axis=1)
        # integral of prod_j (lam/2) e^{-lam|b_j|} dGamma(lam; a, b)
        log_post += gammaln(a + n_l1) - (a + n_l1) * np.log(b + s_abs)
    else:
        s_abs = np.zeros(pts.shape[0])

    log_post -= log_post.max()
    w = np.exp(log_post)
    z = w.sum()
    mean = (w[:, None] * pts).sum(axis=0) / z
    second = (w[:, None] * pts**2).sum(axis=0) / z
    var = second - mean**2
    lam_cond_mean = (a + n_l1) / (b + s_abs)
    lam_cond_second = (a + n_l1) * (a + n_l1 + 1) / (b + s_abs) ** 2
    lam_mean = float((w * lam_cond_mean).sum() / z)
    lam_var = float((w * lam_cond_second).sum() / z - lam_mean**2)
    return {
        "mean": mean,
        "var": var,
        "lambda_mean": lam_mean,
        "lambda_var": lam_var,
    }


def oracle_line_enumeration(
    beta: np.ndarray,
    roster: Sequence[RosterEntry],
    query: LineQuery,
) -> Line | None:
    """Full enumeration of feasible lines (at most 40 roster players).

    Scores each feasible line by the same left-to-right sum and breaks ties
    toward the lexicographically smallest id tuple, so results are directly
    comparable with the branch-and-bound optimizer.
    """
    if len(roster) > 40:
        raise RosterTooLarge(f"enumeration oracle caps at 40 players, got {len(roster)}")
    roster_ids = {e.player_id for e in roster}
    for pid in query.pinned | query.excluded:
        if pid not in roster_ids:
            raise UnknownPlayer(f"query references {pid!r}, not on roster")
    pools: dict[str, list[RosterEntry]] = {pos: [] for pos in LINE_SLOTS}
    for entry in roster:
        if entry.player_id not in query.excluded:
            pools[entry.position].append(entry)
    for pos in pools:
        pools[pos].sort(key=lambda e: e.player_id)

    def singles(pos: str) -> list[tuple[str, float, int]]:
        return [
            (e.player_id, float(beta[e.col_index]), e.salary_cents) for e in pools[pos]
        ]

    dpool = pools["D"]
    dpairs = []
    for i in range(len(dpool)):
        for j in range(i + 1, len(dpool)):
            e1, e2 = dpool[i], dpool[j]
            dpairs.append(
                (
                    e1.player_id,
                    e2.player_id,
                    float(beta[e1.col_index]),
                    float(beta[e2.col_index]),
                    e1.salary_cents + e2.salary_cents,
                )
            )

    pinned = query.pinned
    best_ids: tuple[str, ...] | None = None
    best_score = -math.inf
    budget = query.budget_cents
    for g_id, g_b, g_c in singles("G"):
        for c_id, c_b, c_c in singles("C"):
            for l_id, l_b, l_c in singles("L"):
                for r_id, r_b, r_c in singles("R"):
                    head_cost = g_c + c_c + l_c + r_c
                    if head_cost > budget:
                        continue
                    for d1_id, d2_id, d1_b, d2_b, d_c in dpairs:
                        if head_cost + d_c > budget:
                            continue
                        ids = (g_id, c_id, l_id, r_id, d1_id, d2_id)
                        if pinned and not pinned.issubset(ids):
                            continue
                        score = g_b + c_b + l_b + r_b + d1_b + d2_b
                        if score > best_score or (
                            score == best_score and best_ids is not None and ids < best_ids
                        ):
                            best_score = score
                            best_ids = ids
    if best_ids is None:
        return None
    return Line(
        goalie=best_ids[0],
        center=best_ids[1],
        left=best_ids[2],
        right=best_ids[3],
        defense=(best_ids[4], best_ids[5]),
    )
