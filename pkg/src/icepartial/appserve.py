"""Command-line pipeline and HTTP/JSON service.

A model bundle is a directory of artifacts the pipeline commands write:
fit.json and/or draws/, plus optional roster.csv and events.csv (the latter
only feeds plus-minus context for ratings). The CLI and the HTTP handlers
call the same payload functions, so the two interfaces cannot drift apart.

Exit codes: 0 success, 1 structured error, 2 usage, 3 infeasible.
"""

import argparse
import hashlib
import json
import os
import sys
import threading
import uuid
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from icepartial import design as design_mod
from icepartial import gammalasso, gibbs, lineup, simgen
from icepartial.design import ColumnDirectory, PlusMinusResult, SparseDesign
from icepartial.errors import (
    EmptyInput,
    IcepartialError,
    InfeasibleRoster,
    InvalidConfig,
)
from icepartial.gammalasso import FitResult
from icepartial.gibbs import GibbsConfig, PosteriorDraws
from icepartial.lineup import Line, LineQuery, RosterEntry

PORT_ENV_VAR = "ICEPARTIAL_PORT"
DEFAULT_PORT = 8787


# ---------------------------------------------------------------------------
# Model bundles
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything the decision layer needs about one fitted model."""

    directory: ColumnDirectory
    fit: FitResult | None = None
    draws: PosteriorDraws | None = None
    roster: list[RosterEntry] | None = None
    pm: PlusMinusResult | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fit is None and self.draws is None:
            raise InvalidConfig("bundle needs a fit, draws, or both")
        if self.fit is not None and self.fit.directory is not None:
            if self.fit.directory != self.directory:
                raise InvalidConfig("fit directory disagrees with bundle directory")
        if self.draws is not None and self.draws.directory is not None:
            if self.draws.directory != self.directory:
                raise InvalidConfig("draws directory disagrees with bundle directory")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_bundle(bundle_dir: str | Path) -> ModelBundle:
    """Assemble a ModelBundle from a directory of pipeline artifacts.

    Recognized members: fit.json, draws/, roster.csv, events.csv,
    bundle.json (extra provenance). Roster players the model never saw are
    dropped with a note in the provenance.
    """
    root = Path(bundle_dir)
    if not root.is_dir():
        raise InvalidConfig(f"bundle directory {root} does not exist")
    fit = None
    draws = None
    if (root / "fit.json").is_file():
        fit = gammalasso.load_fit(root / "fit.json")
    if (root / "draws" / "meta.json").is_file():
        draws = gibbs.load_draws(root / "draws")
    directory = None
    if fit is not None and fit.directory is not None:
        directory = fit.directory
    elif draws is not None and draws.directory is not None:
        directory = draws.directory
    if directory is None:
        raise InvalidConfig("bundle artifacts carry no column directory")

    provenance: dict = {"path": str(root)}
    if (root / "bundle.json").is_file():
        provenance.update(json.loads((root / "bundle.json").read_text()))
    hashes = {}
    for name in ("fit.json", "roster.csv", "events.csv"):
        if (root / name).is_file():
            hashes[name] = _sha256(root / name)
    if (root / "draws" / "beta.npy").is_file():
        hashes["draws/beta.npy"] = _sha256(root / "draws" / "beta.npy")
    provenance["sha256"] = hashes

    roster = None
    if (root / "roster.csv").is_file():
        try:
            roster = lineup.parse_roster(root / "roster.csv", directory, skip_unknown=True)
        except EmptyInput:
            provenance["roster_note"] = "roster.csv matched no players in the model"
    pm = None
    if (root / "events.csv").is_file():
        pm = design_mod.plus_minus(design_mod.parse_goals(root / "events.csv"))
    return ModelBundle(
        directory=directory,
        fit=fit,
        draws=draws,
        roster=roster,
        pm=pm,
        provenance=provenance,
    )


def _bundle_beta(bundle: ModelBundle) -> tuple[np.ndarray, str]:
    """Point coefficients for display/optimization: the MAP fit when present,
    otherwise posterior means."""
    if bundle.fit is not None:
        return np.asarray(bundle.fit.coeffs, dtype=np.float64), "map"
    assert bundle.draws is not None
    return np.asarray(bundle.draws.beta, dtype=np.float64).mean(axis=0), "posterior_mean"


# ---------------------------------------------------------------------------
# Payload functions shared verbatim by the CLI and the HTTP service
# ---------------------------------------------------------------------------


def ratings_payload(bundle: ModelBundle) -> dict:
    """All players sorted by effect descending (id breaks ties), teams after.

    Zero-effect players are listed with beta 0, never dropped. Salary and
    plus-minus fields appear when the bundle carries a roster / events.
    """
    beta, source = _bundle_beta(bundle)
    d = bundle.directory
    salary = {e.player_id: e.salary_cents for e in bundle.roster} if bundle.roster else {}
    players = []
    for k, (pid, pos) in enumerate(d.players):
        row: dict = {
            "id": pid,
            "position": pos,
            "beta": float(beta[d.player_offset + k]),
        }
        if pid in salary:
            row["salary_cents"] = salary[pid]
        if bundle.pm is not None:
            row["pm"] = int(bundle.pm.players.get(pid, 0))
        players.append(row)
    players.sort(key=lambda r: (-r["beta"], r["id"]))
    teams = []
    if d.intercept:
        teams.append({"id": design_mod.INTERCEPT_ID, "alpha": float(beta[0])})
    for k, tid in enumerate(d.teams):
        teams.append({"id": tid, "alpha": float(beta[d.team_offset + k])})
    teams.sort(key=lambda r: (-r["alpha"], r["id"]))
    return {"source": source, "players": players, "teams": teams}


def compare_payload(bundle: ModelBundle, ids: Sequence[str]) -> dict:
    """Better-than submatrix over the requested player ids."""
    if bundle.draws is None:
        raise InvalidConfig("pairwise comparison needs posterior draws")
    if not ids:
        raise InvalidConfig("no player ids to compare")
    matrix, ordered = gibbs.better_than_matrix(bundle.draws, ids)
    return {
        "ids": ordered,
        "matrix": [[float(v) for v in row] for row in matrix],
        "n_draws": int(bundle.draws.n_draws),
    }


def matchup_payload(
    bundle: ModelBundle,
    home_ids: Sequence[str],
    away_ids: Sequence[str],
    *,
    bins: int = 20,
) -> dict:
    """Scoring-probability summary for home vs away six-player lines.

    Draws mode returns the posterior distribution (mean, quantiles, histogram
    over [0, 1] whose counts sum to the number of draws); a fit-only bundle
    returns the single point probability.
    """
    if bins < 1:
        raise InvalidConfig("bins must be >= 1")
    home = lineup.line_from_ids(bundle.directory, home_ids)
    away = lineup.line_from_ids(bundle.directory, away_ids)
    if bundle.draws is not None:
        probs = lineup.matchup_distribution(bundle.draws, home, away)
        counts, edges = np.histogram(probs, bins=bins, range=(0.0, 1.0))
        return {
            "mode": "draws",
            "prob_mean": float(probs.mean()),
            "quantiles": {
                "q05": float(np.quantile(probs, 0.05)),
                "q50": float(np.quantile(probs, 0.50)),
                "q95": float(np.quantile(probs, 0.95)),
            },
            "histogram": {
                "edges": [float(e) for e in edges],
                "counts": [int(c) for c in counts],
            },
            "n_draws": int(probs.shape[0]),
        }
    assert bundle.fit is not None
    p = lineup.matchup_prob(bundle.fit.coeffs, bundle.directory, home, away)
    return {"mode": "map", "prob_mean": p, "quantiles": None, "histogram": None}


def _line_dict(line: Line) -> dict:
    return {
        "goalie": line.goalie,
        "center": line.center,
        "left": line.left,
        "right": line.right,
        "defense": list(line.defense),
    }


def optimize_payload(
    bundle: ModelBundle,
    budget_cents: int,
    *,
    pinned: Sequence[str] = (),
    excluded: Sequence[str] = (),
    mode: str = "map",
    max_draws: int | None = None,
) -> dict:
    """Budget-constrained best line.

    map mode optimizes the point coefficients once and reports the line, its
    cost, and its scoring probability against a zero-effect reference
    opponent. draws mode re-optimizes per posterior draw and summarizes the
    per-draw probabilities (same reference), reporting the modal line.
    Raises InfeasibleRoster when no legal line fits the budget.
    """
    if bundle.roster is None:
        raise InvalidConfig("bundle has no roster; optimization needs salaries")
    query = LineQuery(
        budget_cents=int(budget_cents),
        pinned=frozenset(pinned),
        excluded=frozenset(excluded),
    )
    if mode == "map":
        beta, source = _bundle_beta(bundle)
        line = lineup.optimize_line(beta, bundle.roster, query)
        if line is None:
            raise InfeasibleRoster("no position-legal line fits the budget")
        score = lineup.line_score(beta, bundle.roster, line)
        return {
            "mode": "map",
            "source": source,
            "line": _line_dict(line),
            "cost_cents": lineup.line_cost(bundle.roster, line),
            "score": score,
            "prob_vs_reference": float(expit(score)),
            "reference": "zero-effect-opponent",
        }
    if mode != "draws":
        raise InvalidConfig(f"mode must be map or draws, got {mode!r}")
    if bundle.draws is None:
        raise InvalidConfig("draws mode needs posterior draws")
    beta_all = np.asarray(bundle.draws.beta, dtype=np.float64)
    if max_draws is not None and 0 < max_draws < beta_all.shape[0]:
        keep = np.unique(
            np.linspace(0, beta_all.shape[0] - 1, max_draws).round().astype(int)
        )
        beta_all = beta_all[keep]
    probs = []
    lines: dict[tuple[str, ...], int] = {}
    for t in range(beta_all.shape[0]):
        line = lineup.optimize_line(beta_all[t], bundle.roster, query)
        if line is None:
            raise InfeasibleRoster("no position-legal line fits the budget")
        score = lineup.line_score(beta_all[t], bundle.roster, line)
        probs.append(float(expit(score)))
        key = line.ids()
        lines[key] = lines.get(key, 0) + 1
    probs_arr = np.asarray(probs)
    # most frequent optimal line; count ties resolve to the smallest id tuple
    modal_ids = min(lines.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    modal = Line(
        goalie=modal_ids[0],
        center=modal_ids[1],
        left=modal_ids[2],
        right=modal_ids[3],
        defense=(modal_ids[4], modal_ids[5]),
    )
    return {
        "mode": "draws",
        "summary": {
            "mean": float(probs_arr.mean()),
            "q05": float(np.quantile(probs_arr, 0.05)),
            "q95": float(np.quantile(probs_arr, 0.95)),
        },
        "modal_line": _line_dict(modal),
        "modal_line_frequency": lines[modal_ids] / beta_all.shape[0],
        "cost_cents": lineup.line_cost(bundle.roster, modal),
        "reference": "zero-effect-opponent",
        "n_draws_used": int(beta_all.shape[0]),
    }


def sweep_payload(
    bundle: ModelBundle,
    budgets_cents: Sequence[int],
    seed: int,
    *,
    pinned: Sequence[str] = (),
    excluded: Sequence[str] = (),
    max_draws: int | None = 256,
) -> dict:
    """Posterior budget sweep against seeded random opponents.

    The seed is mandatory: random opponents must be reproducible.
    """
    if bundle.draws is None:
        raise InvalidConfig("budget sweep needs posterior draws")
    if bundle.roster is None:
        raise InvalidConfig("bundle has no roster; sweep needs salaries")
    rng = np.random.default_rng(seed)
    result = lineup.budget_sweep(
        bundle.draws,
        bundle.roster,
        [int(b) for b in budgets_cents],
        rng,
        pinned=frozenset(pinned),
        excluded=frozenset(excluded),
        max_draws=max_draws,
    )
    rows = []
    for row in result.rows:
        rows.append(
            {
                "budget_cents": row.budget_cents,
                "feasible": row.feasible,
                "mean": row.mean,
                "q05": row.q05,
                "q95": row.q95,
            }
        )
    return {"seed": seed, "rows": rows, "csv": result.to_csv_text()}


def pm_payload(events: Sequence[design_mod.GoalEvent]) -> dict:
    pm = design_mod.plus_minus(events)
    return {
        "players": {k: pm.players[k] for k in sorted(pm.players)},
        "teams": {k: pm.teams[k] for k in sorted(pm.teams)},
    }


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _parse_ids(text: str | None) -> list[str]:
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def _dollars_to_cents(text: str) -> int:
    try:
        return int((Decimal(text) * 100).to_integral_value())
    except InvalidOperation:
        raise InvalidConfig(f"bad money amount {text!r}") from None


def _load_design_arg(args: argparse.Namespace) -> SparseDesign:
    if getattr(args, "design", None):
        return design_mod.load_design(args.design)
    if getattr(args, "events", None):
        events = design_mod.parse_goals(args.events)
        include_teams = args.teams == "on"
        return design_mod.build_design(
            events,
            include_teams=include_teams,
            interactions=args.interactions == "on",
            intercept=not include_teams,
        )
    raise InvalidConfig("need --design or --events")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=1, sort_keys=True))


def cmd_simulate(args: argparse.Namespace) -> int:
    config = simgen.SynthConfig(
        n_teams=args.n_teams,
        n_goals=args.n_goals,
        team_sd=args.team_sd,
        beta_fraction=args.beta_fraction,
        beta_range=(args.beta_lo, args.beta_hi),
        line_cohesion=args.cohesion,
        seed=args.seed,
    )
    rng = np.random.default_rng(args.seed)
    events, truth = simgen.generate(config, rng)
    salaries = simgen.synth_salaries(truth, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    design_mod.write_goals(events, out / "events.csv")
    (out / "roster.csv").write_text(simgen.roster_csv_text(truth, salaries))
    (out / "truth.json").write_text(json.dumps(truth.to_dict(), indent=1) + "\n")
    _emit(
        {
            "events": str(Path(args.out) / "events.csv"),
            "roster": str(Path(args.out) / "roster.csv"),
            "truth": str(Path(args.out) / "truth.json"),
            "n_events": len(events),
            "n_players": len(truth.true_beta),
            "n_true_effects": len(truth.support),
        }
    )
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    events = design_mod.parse_goals(args.events)
    include_teams = args.teams == "on"
    design = design_mod.build_design(
        events,
        include_teams=include_teams,
        interactions=args.interactions == "on",
        intercept=not include_teams,
    )
    design_mod.save_design(design, args.out)
    _emit(
        {
            "design": args.out,
            "n_rows": design.n_rows,
            "n_cols": design.n_cols,
            "n_teams": len(design.directory.teams),
            "n_players": len(design.directory.players),
            "n_interactions": len(design.directory.interactions),
        }
    )
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    design = _load_design_arg(args)
    penalties = gammalasso.default_penalties(
        design.directory, elambda=args.elambda, team_sigma=args.team_sigma
    )
    fit = gammalasso.fit_map(
        design,
        penalties,
        tol=args.tol,
        max_sweeps=args.max_sweeps,
        kkt_tol=args.kkt_tol,
    )
    gammalasso.save_fit(fit, args.out)
    _emit(
        {
            "fit": args.out,
            "objective": fit.objective,
            "converged": fit.converged,
            "sweeps": fit.sweeps,
            "kkt_residual": fit.kkt_residual,
            "nonzero": int(len(fit.nonzero_indices())),
            "nonzero_fraction": fit.nonzero_fraction(),
        }
    )
    return 0


def cmd_path(args: argparse.Namespace) -> int:
    design = _load_design_arg(args)
    grid = [float(v) for v in _parse_ids(args.grid)]
    penalties = gammalasso.default_penalties(
        design.directory, elambda=grid[0] if grid else 15.0, team_sigma=args.team_sigma
    )
    points = gammalasso.regularization_path(
        design, penalties, grid, tol=args.tol, max_sweeps=args.max_sweeps
    )
    artifact = [
        {
            "elambda": pt.elambda,
            "nonzero_fraction": pt.nonzero_fraction,
            "objective": pt.fit.objective,
            "coeffs": [float(b) for b in pt.fit.coeffs],
        }
        for pt in points
    ]
    if args.out:
        Path(args.out).write_text(json.dumps(artifact, indent=1) + "\n")
    _emit(
        {
            "path": args.out,
            "points": [
                {"elambda": pt.elambda, "nonzero_fraction": pt.nonzero_fraction}
                for pt in points
            ],
        }
    )
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    design = _load_design_arg(args)
    penalties = gammalasso.default_penalties(
        design.directory, elambda=15.0, team_sigma=args.team_sigma
    )
    config = GibbsConfig(
        n_samples=args.samples,
        burnin=args.burnin,
        thin=args.thin,
        series_terms=args.series_terms,
        lambda_shape=args.lambda_shape,
        lambda_rate=args.lambda_rate,
        seed=args.seed,
    )
    draws = gibbs.sample_posterior(design, penalties, config)
    gibbs.save_draws(draws, args.out)
    _emit(
        {
            "draws": args.out,
            "n_draws": draws.n_draws,
            "accept_rate": draws.accept_rate,
            "lambda_mean": float(np.asarray(draws.lam).mean()),
        }
    )
    return 0


def cmd_pm(args: argparse.Namespace) -> int:
    _emit(pm_payload(design_mod.parse_goals(args.events)))
    return 0


def _bundle_from_args(args: argparse.Namespace) -> ModelBundle:
    """Assemble an ephemeral bundle from whichever artifacts the flags name."""
    if getattr(args, "bundle", None):
        return load_bundle(args.bundle)
    fit = gammalasso.load_fit(args.fit) if getattr(args, "fit", None) else None
    draws = gibbs.load_draws(args.draws) if getattr(args, "draws", None) else None
    directory = None
    if fit is not None and fit.directory is not None:
        directory = fit.directory
    elif draws is not None and draws.directory is not None:
        directory = draws.directory
    if directory is None:
        raise InvalidConfig("need --bundle, --fit, or --draws with a directory")
    roster = None
    if getattr(args, "roster", None):
        roster = lineup.parse_roster(args.roster, directory, skip_unknown=True)
    return ModelBundle(directory=directory, fit=fit, draws=draws, roster=roster)


def cmd_compare(args: argparse.Namespace) -> int:
    bundle = _bundle_from_args(args)
    _emit(compare_payload(bundle, _parse_ids(args.ids)))
    return 0


def cmd_matchup(args: argparse.Namespace) -> int:
    bundle = _bundle_from_args(args)
    _emit(
        matchup_payload(
            bundle, _parse_ids(args.home), _parse_ids(args.away), bins=args.bins
        )
    )
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    bundle = _bundle_from_args(args)
    try:
        payload = optimize_payload(
            bundle,
            _dollars_to_cents(args.budget),
            pinned=_parse_ids(args.pin),
            excluded=_parse_ids(args.exclude),
            mode=args.mode,
            max_draws=args.max_draws,
        )
    except InfeasibleRoster as exc:
        _emit({"error": type(exc).__name__, "code": exc.code, "detail": str(exc)})
        return 3
    _emit(payload)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    bundle = _bundle_from_args(args)
    budgets = [_dollars_to_cents(b) for b in _parse_ids(args.budgets)]
    payload = sweep_payload(
        bundle,
        budgets,
        args.seed,
        pinned=_parse_ids(args.pin),
        excluded=_parse_ids(args.exclude),
        max_draws=args.max_draws,
    )
    if args.csv:
        Path(args.csv).write_text(payload["csv"])
    _emit({k: v for k, v in payload.items() if k != "csv"})
    return 0


def load_service_config(path: str | Path) -> dict:
    """Service config JSON: {"models": {id: bundle_dir}, "port": int, "host": str}."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or "models" not in data:
        raise InvalidConfig("service config must be an object with a models map")
    if not isinstance(data["models"], dict) or not data["models"]:
        raise InvalidConfig("service config models map is empty")
    return data


def resolve_port(cli_port: int | None, config: Mapping | None = None) -> int:
    """Port precedence: --port flag, then config file, then env var, then default."""
    if cli_port is not None:
        return cli_port
    if config and "port" in config:
        return int(config["port"])
    env = os.environ.get(PORT_ENV_VAR)
    if env:
        return int(env)
    return DEFAULT_PORT


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    host = "127.0.0.1"
    config = None
    if args.config:
        config = load_service_config(args.config)
        models = {mid: load_bundle(path) for mid, path in config["models"].items()}
        host = config.get("host", host)
    elif args.bundle:
        models = {args.model_id: load_bundle(args.bundle)}
    else:
        raise InvalidConfig("serve needs --config or --bundle")
    port = resolve_port(args.port, config)
    app = build_app(models, cors=args.cors)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icepartial",
        description="Player partial effects from goal events: fit, sample, decide.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    def add_design_source(p):
        p.add_argument("--design", help="design artifact directory from ingest")
        p.add_argument("--events", help="goal-event CSV (build design on the fly)")
        p.add_argument("--teams", choices=["on", "off"], default="on",
                       help="team columns on, or a single intercept instead")
        p.add_argument("--interactions", choices=["on", "off"], default="off")
        p.add_argument("--team-sigma", type=float, default=1.0,
                       help="ridge prior sd for team/intercept columns")

    p = sub.add_parser("simulate", help="generate synthetic events with known truth")
    p.add_argument("--out", required=True)
    p.add_argument("--n-teams", type=int, default=4)
    p.add_argument("--n-goals", type=int, default=1000)
    p.add_argument("--team-sd", type=float, default=0.1)
    p.add_argument("--beta-fraction", type=float, default=0.1)
    p.add_argument("--beta-lo", type=float, default=0.8)
    p.add_argument("--beta-hi", type=float, default=1.5)
    p.add_argument("--cohesion", type=float, default=0.0)
    add_seed(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="goal-event CSV to a design artifact")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--teams", choices=["on", "off"], default="on")
    p.add_argument("--interactions", choices=["on", "off"], default="off")
    add_seed(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="MAP estimate by coordinate descent")
    add_design_source(p)
    p.add_argument("--elambda", type=float, default=15.0,
                   help="expected penalty rate for player columns")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--kkt-tol", type=float, default=1e-6)
    p.add_argument("--max-sweeps", type=int, default=10_000)
    p.add_argument("--out", required=True, help="fit.json output path")
    add_seed(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("path", help="fits along an ascending penalty grid")
    add_design_source(p)
    p.add_argument("--grid", required=True, help="comma-separated penalty rates")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-sweeps", type=int, default=10_000)
    p.add_argument("--out", help="path.json output path")
    add_seed(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("sample", help="posterior draws by Gibbs sampling")
    add_design_source(p)
    p.add_argument("--out", required=True, help="draws output directory")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--burnin", type=int, default=1_000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--series-terms", type=int, default=100)
    p.add_argument("--lambda-shape", type=float, default=2.0)
    p.add_argument("--lambda-rate", type=float, default=0.1)
    add_seed(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pm", help="traditional plus-minus from events")
    p.add_argument("--events", required=True)
    add_seed(p)
    p.set_defaults(func=cmd_pm)

    def add_bundle_source(p, need_roster=False):
        p.add_argument("--bundle", help="bundle directory (fit.json/draws/roster.csv)")
        p.add_argument("--fit", help="fit.json artifact")
        p.add_argument("--draws", help="draws artifact directory")
        if need_roster:
            p.add_argument("--roster", help="roster CSV with salaries")

    p = sub.add_parser("compare", help="posterior better-than matrix")
    add_bundle_source(p)
    p.add_argument("--ids", required=True, help="comma-separated player ids")
    add_seed(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("matchup", help="scoring probability, line vs line")
    add_bundle_source(p)
    p.add_argument("--home", required=True, help="six comma-separated player ids")
    p.add_argument("--away", required=True, help="six comma-separated player ids")
    p.add_argument("--bins", type=int, default=20)
    add_seed(p)
    p.set_defaults(func=cmd_matchup)

    p = sub.add_parser("optimize", help="best line under a salary budget")
    add_bundle_source(p, need_roster=True)
    p.add_argument("--budget", required=True, help="budget in dollars, e.g. 3500000.00")
    p.add_argument("--pin", help="comma-separated player ids that must play")
    p.add_argument("--exclude", help="comma-separated player ids to leave out")
    p.add_argument("--mode", choices=["map", "draws"], default="map")
    p.add_argument("--max-draws", type=int, default=None)
    add_seed(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="posterior budget sweep")
    add_bundle_source(p, need_roster=True)
    p.add_argument("--budgets", required=True, help="comma-separated dollar budgets")
    p.add_argument("--pin", help="comma-separated player ids that must play")
    p.add_argument("--exclude", help="comma-separated player ids to leave out")
    p.add_argument("--max-draws", type=int, default=256)
    p.add_argument("--csv", help="also write the summary CSV here")
    add_seed(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="HTTP/JSON service over model bundles")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--bundle", help="single bundle directory")
    p.add_argument("--model-id", default="default")
    p.add_argument("--port", type=int, default=None,
                   help=f"port (default: ${PORT_ENV_VAR} or {DEFAULT_PORT})")
    p.add_argument("--cors", action="store_true",
                   help="allow cross-origin requests (locally served pages)")
    add_seed(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IcepartialError as exc:
        print(
            json.dumps(
                {"error": type(exc).__name__, "code": exc.code, "detail": str(exc)}
            ),
            file=sys.stderr,
        )
        return 3 if isinstance(exc, InfeasibleRoster) else 1


# ---------------------------------------------------------------------------
# HTTP service
# ---------------------------------------------------------------------------


class JobRegistry:
    """In-process job table for long-running sweeps; mutation is serialized."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}

    def create(self) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = {"status": "pending", "result": None, "error": None}
        return job_id

    def set_running(self, job_id: str) -> None:
        with self._lock:
            self._jobs[job_id]["status"] = "running"

    def set_done(self, job_id: str, result: dict) -> None:
        with self._lock:
            self._jobs[job_id].update(status="done", result=result)

    def set_error(self, job_id: str, error: dict) -> None:
        with self._lock:
            self._jobs[job_id].update(status="error", error=error)

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            state = self._jobs.get(job_id)
            return None if state is None else dict(state)


def build_app(models: Mapping[str, ModelBundle], *, cors: bool = False):
    """FastAPI application over immutable loaded bundles."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel, Field

    app = FastAPI(title="icepartial", docs_url=None, redoc_url=None)
    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )
    jobs = JobRegistry()

    def error_response(status: int, error: str, code: str, detail: str) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": error, "code": code, "detail": detail},
        )

    @app.exception_handler(IcepartialError)
    async def on_domain_error(request: Request, exc: IcepartialError):
        status = 409 if isinstance(exc, InfeasibleRoster) else 400
        return error_response(status, type(exc).__name__, exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return error_response(400, "ValidationError", "invalid_request", str(exc))

    @app.exception_handler(Exception)
    async def on_unexpected(request: Request, exc: Exception):
        return error_response(500, "InternalError", "internal", type(exc).__name__)

    def bundle_of(model_id: str) -> ModelBundle:
        bundle = models.get(model_id)
        if bundle is None:
            raise LookupError(model_id)
        return bundle

    @app.exception_handler(LookupError)
    async def on_unknown_model(request: Request, exc: LookupError):
        return error_response(
            404, "UnknownModel", "unknown_model", f"no model named {exc.args[0]!r}"
        )

    class MatchupRequest(BaseModel):
        home: list[str] = Field(min_length=6, max_length=6)
        away: list[str] = Field(min_length=6, max_length=6)
        bins: int = 20

    class OptimizeRequest(BaseModel):
        budget_cents: int
        pinned: list[str] = []
        excluded: list[str] = []
        mode: str = "map"
        max_draws: int | None = None

    class SweepRequest(BaseModel):
        budgets_cents: list[int] = Field(min_length=1)
        seed: int  # required: random opponents must be reproducible
        pinned: list[str] = []
        excluded: list[str] = []
        max_draws: int | None = 256

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "models": sorted(models)}

    @app.get("/models/{model_id}/ratings")
    async def ratings(model_id: str):
        return ratings_payload(bundle_of(model_id))

    @app.get("/models/{model_id}/compare")
    async def compare(model_id: str, ids: str = ""):
        return compare_payload(bundle_of(model_id), _parse_ids(ids))

    @app.post("/models/{model_id}/matchup")
    async def matchup(model_id: str, req: MatchupRequest):
        return matchup_payload(bundle_of(model_id), req.home, req.away, bins=req.bins)

    @app.post("/models/{model_id}/optimize")
    async def optimize(model_id: str, req: OptimizeRequest):
        return optimize_payload(
            bundle_of(model_id),
            req.budget_cents,
            pinned=req.pinned,
            excluded=req.excluded,
            mode=req.mode,
            max_draws=req.max_draws,
        )

    @app.post("/models/{model_id}/sweep")
    async def sweep(model_id: str, req: SweepRequest):
        bundle = bundle_of(model_id)
        job_id = jobs.create()

        def run():
            jobs.set_running(job_id)
            try:
                result = sweep_payload(
                    bundle,
                    req.budgets_cents,
                    req.seed,
                    pinned=req.pinned,
                    excluded=req.excluded,
                    max_draws=req.max_draws,
                )
            except IcepartialError as exc:
                jobs.set_error(
                    job_id,
                    {"error": type(exc).__name__, "code": exc.code, "detail": str(exc)},
                )
            except Exception as exc:  # keep the worker thread from dying silently
                jobs.set_error(
                    job_id,
                    {"error": "InternalError", "code": "internal", "detail": type(exc).__name__},
                )
            else:
                jobs.set_done(job_id, result)

        threading.Thread(target=run, daemon=True).start()
        return {"job_id": job_id, "poll": f"/jobs/{job_id}"}

    @app.get("/jobs/{job_id}")
    async def job_state(job_id: str):
        state = jobs.get(job_id)
        if state is None:
            return error_response(404, "UnknownJob", "unknown_job", f"no job {job_id!r}")
        return state

    return app
