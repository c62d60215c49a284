"""Regenerate the frontend test fixtures from the icepartial HTTP API and CLI.

Builds a small deterministic league, assembles a model bundle, captures the
JSON payloads the UI consumes (via the in-process HTTP client), and captures
the CLI output for the same optimize queries so the round-trip test can
compare them. Run from anywhere:

    python3 frontend/scripts/gen_fixtures.py
"""

import io
import json
import shutil
import tempfile
from contextlib import redirect_stdout
from pathlib import Path

from fastapi.testclient import TestClient

from icepartial.appserve import build_app, load_bundle, main

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

HOME = ["T01-G1", "T01-C1", "T01-L1", "T01-R1", "T01-D1", "T01-D2"]
AWAY = ["T02-G1", "T02-C1", "T02-L1", "T02-R1", "T02-D1", "T02-D2"]
COMPARE_IDS = ["T01-C1", "T01-C2", "T01-G1", "T02-C1", "T02-L1", "T02-D1"]
BUDGET_CENTS = 1_800_000_000  # $18,000,000.00, feasible but binding for this league
PIN = "T01-C2"
EXCLUDE = "T02-G1"


def run_cli(argv: list[str]) -> dict:
    out = io.StringIO()
    with redirect_stdout(out):
        code = main(argv)
    assert code == 0, f"{argv} exited {code}"
    return json.loads(out.getvalue())


def build_fixture_bundle(work: Path) -> Path:
    sim = work / "sim"
    run_cli(["simulate", "--out", str(sim), "--n-teams", "2", "--n-goals", "2500",
             "--beta-fraction", "0.5", "--beta-lo", "0.8", "--beta-hi", "1.8",
             "--seed", "42"])
    design = work / "design"
    run_cli(["ingest", "--events", str(sim / "events.csv"), "--out", str(design)])
    bundle = work / "bundle"
    bundle.mkdir()
    run_cli(["fit", "--design", str(design), "--out", str(bundle / "fit.json")])
    run_cli(["sample", "--design", str(design), "--out", str(bundle / "draws"),
             "--samples", "300", "--burnin", "50", "--seed", "9"])
    shutil.copy(sim / "roster.csv", bundle / "roster.csv")
    shutil.copy(sim / "events.csv", bundle / "events.csv")
    return bundle


def save(name: str, payload) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"wrote {name}")


def main_gen() -> None:
    work = Path(tempfile.mkdtemp(prefix="icepartial-fixtures-"))
    try:
        bundle_dir = build_fixture_bundle(work)
        client = TestClient(
            build_app({"demo": load_bundle(bundle_dir)}), raise_server_exceptions=False
        )

        save("ratings.json", client.get("/models/demo/ratings").json())
        save(
            "compare.json",
            client.get(
                "/models/demo/compare", params={"ids": ",".join(COMPARE_IDS)}
            ).json(),
        )
        save(
            "matchup.json",
            client.post(
                "/models/demo/matchup",
                json={"home": HOME, "away": AWAY, "bins": 12},
            ).json(),
        )
        save(
            "matchup_mirror.json",
            client.post(
                "/models/demo/matchup",
                json={"home": AWAY, "away": HOME, "bins": 12},
            ).json(),
        )

        map_query = {
            "budget_cents": BUDGET_CENTS,
            "mode": "map",
            "pinned": [PIN],
            "excluded": [EXCLUDE],
        }
        save(
            "optimize_map.json",
            client.post("/models/demo/optimize", json=map_query).json(),
        )
        save(
            "optimize_map_cli.json",
            run_cli(["optimize", "--bundle", str(bundle_dir), "--budget", "18000000.00",
                     "--mode", "map", "--pin", PIN, "--exclude", EXCLUDE]),
        )

        draws_query = {
            "budget_cents": BUDGET_CENTS,
            "mode": "draws",
            "max_draws": 64,
            "pinned": [PIN],
            "excluded": [EXCLUDE],
        }
        save(
            "optimize_draws.json",
            client.post("/models/demo/optimize", json=draws_query).json(),
        )
        save(
            "optimize_draws_cli.json",
            run_cli(["optimize", "--bundle", str(bundle_dir), "--budget", "18000000.00",
                     "--mode", "draws", "--max-draws", "64",
                     "--pin", PIN, "--exclude", EXCLUDE]),
        )

        lo_query = dict(draws_query, budget_cents=1_200_000_000)
        lo = client.post("/models/demo/optimize", json=lo_query).json()
        hi = json.loads((FIXTURES / "optimize_draws.json").read_text())
        assert lo["summary"]["mean"] <= hi["summary"]["mean"], "budget monotonicity"
        save("optimize_draws_lower_budget.json", lo)

        save("healthz.json", client.get("/healthz").json())

        infeasible = client.post(
            "/models/demo/optimize", json={"budget_cents": 100, "mode": "map"}
        )
        assert infeasible.status_code == 409
        save("infeasible.json", infeasible.json())
    finally:
        shutil.rmtree(work)


if __name__ == "__main__":
    main_gen()
