import io

import numpy as np
import pytest

from icepartial.design import (
    ColumnDirectory,
    GoalEvent,
    build_design,
    directory_from_dict,
    directory_to_dict,
    expand_interactions,
    goals_to_csv_text,
    load_design,
    parse_goals,
    plus_minus,
    save_design,
)
from icepartial.errors import (
    EmptyInput,
    MalformedEvent,
    UnknownColumn,
    UnknownPlayer,
)

HEADER = "goal_id,season,home_team,away_team,side,h1,h2,h3,h4,h5,h6,a1,a2,a3,a4,a5,a6,hpos,apos"

ROW1 = "g1,2024,AAA,BBB,H,a1,a2,a3,a4,a5,a6,b1,b2,b3,b4,b5,b6,GCLRDD,GCLRDD"
ROW2 = "g2,2024,AAA,BBB,A,a1,a2,a3,a4,a5,a6,b1,b2,b3,b4,b5,b6,GCLRDD,GCLRDD"


def make_events(rows):
    return parse_goals(io.StringIO("\n".join([HEADER] + list(rows)) + "\n"))


def test_header_only_gives_empty_list():
    assert parse_goals(io.StringIO(HEADER + "\n")) == []


def test_single_row_maps_fields():
    (ev,) = make_events([ROW1])
    assert ev.goal_id == "g1"
    assert ev.season == "2024"
    assert ev.home_team == "AAA"
    assert ev.away_team == "BBB"
    assert ev.scoring_side == +1
    assert ev.home_players == (
        ("a1", "G"), ("a2", "C"), ("a3", "L"), ("a4", "R"), ("a5", "D"), ("a6", "D"),
    )
    assert ev.away_players[0] == ("b1", "G")


def test_away_side_is_minus_one():
    (ev,) = make_events([ROW2])
    assert ev.scoring_side == -1


def test_wrong_field_count_rejected():
    bad = ROW1.rsplit(",", 1)[0]  # drop apos
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_duplicate_player_within_side_rejected():
    bad = ROW1.replace("a2", "a1", 1)
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_missing_goalie_tag_rejected():
    bad = ROW1.replace("GCLRDD,GCLRDD", "CCLRDD,GCLRDD")
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_two_goalies_rejected():
    bad = ROW1.replace("GCLRDD,GCLRDD", "GGLRDD,GCLRDD")
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_bad_side_letter_rejected():
    bad = ROW1.replace(",H,", ",X,")
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_bad_position_letter_rejected():
    bad = ROW1.replace("GCLRDD,GCLRDD", "GCLRDQ,GCLRDD")
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_same_team_both_sides_rejected():
    bad = ROW1.replace("AAA,BBB", "AAA,AAA")
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_player_on_both_sides_allowed_but_distinct_columns():
    # ids are unique within a side only; the same id on both sides is a data
    # error caught at event validation
    bad = ROW1.replace("b1", "a1", 1)
    with pytest.raises(MalformedEvent):
        make_events([bad])


def test_parse_serialize_round_trip():
    events = make_events([ROW1, ROW2])
    text = goals_to_csv_text(events)
    again = parse_goals(io.StringIO(text))
    assert again == events


def test_single_event_design_shape():
    events = make_events([ROW1])
    design = build_design(events)
    # 2 team columns + 12 players
    assert design.directory.n_cols == 14
    assert design.n_rows == 1
    assert design.response.tolist() == [1]
    dense = design.to_csr().toarray()[0]
    assert int((dense != 0).sum()) == 14
    home_cols = [design.directory.player_index(f"a{i}") for i in range(1, 7)]
    away_cols = [design.directory.player_index(f"b{i}") for i in range(1, 7)]
    assert all(dense[c] == 1 for c in home_cols)
    assert all(dense[c] == -1 for c in away_cols)
    assert dense[design.directory.team_index("AAA")] == 1
    assert dense[design.directory.team_index("BBB")] == -1


def test_design_independent_of_scorer():
    d1 = build_design(make_events([ROW1]))
    d2 = build_design(make_events([ROW2]))
    assert np.array_equal(d1.to_csr().toarray(), d2.to_csr().toarray())
    assert d1.response.tolist() == [1]
    assert d2.response.tolist() == [-1]


def test_no_events_rejected():
    with pytest.raises(EmptyInput):
        build_design([])


def test_teams_flag_drops_team_block():
    events = make_events([ROW1])
    design = build_design(events, include_teams=False, intercept=True)
    assert design.directory.teams == ()
    assert design.directory.intercept
    dense = design.to_csr().toarray()[0]
    assert dense[0] == 1  # intercept column always on
    assert int((dense != 0).sum()) == 13


def test_row_invariants_on_league(league_design):
    dense = league_design.to_csr().toarray()
    directory = league_design.directory
    t0 = directory.team_offset
    t1 = t0 + len(directory.teams)
    p1 = t1 + len(directory.players)
    team_block = dense[:, t0:t1]
    player_block = dense[:, t1:p1]
    assert ((team_block != 0).sum(axis=1) == 2).all()
    assert ((player_block != 0).sum(axis=1) == 12).all()
    assert (team_block.sum(axis=1) == 0).all()
    assert (player_block.sum(axis=1) == 0).all()
    assert set(np.unique(dense)) <= {-1.0, 0.0, 1.0}


def test_folded_matches_diag_response(league_design):
    raw = league_design.to_csr().toarray()
    folded = league_design.folded_csr().toarray()
    assert np.array_equal(folded, raw * league_design.response[:, None])


def test_interactions_are_products():
    events = make_events([ROW1, ROW2])
    design = expand_interactions(build_design(events), events)
    dense = design.to_csr().toarray()
    directory = design.directory
    for k, (u, v) in enumerate(directory.interactions):
        col = directory.interaction_offset + k
        iu = directory.player_index(u)
        iv = directory.player_index(v)
        assert np.array_equal(dense[:, col], dense[:, iu] * dense[:, iv])


def test_interactions_exclude_goalies():
    events = make_events([ROW1])
    design = expand_interactions(build_design(events), events)
    goalies = {"a1", "b1"}
    for u, v in design.directory.interactions:
        assert u not in goalies and v not in goalies


def test_interaction_signs():
    events = make_events([ROW1])
    design = expand_interactions(build_design(events), events)
    directory = design.directory
    dense = design.to_csr().toarray()[0]
    same = directory.interactions.index(("a2", "a3"))
    opposite = directory.interactions.index(("a2", "b2"))
    assert dense[directory.interaction_offset + same] == 1
    assert dense[directory.interaction_offset + opposite] == -1


def test_interaction_pairs_only_observed():
    events = make_events([ROW1])
    design = expand_interactions(build_design(events), events)
    # 10 skaters on ice -> C(10,2) = 45 pairs, all observed here
    assert len(design.directory.interactions) == 45


def test_plus_minus_single_goal():
    events = make_events([ROW1])
    pm = plus_minus(events)
    for i in range(1, 7):
        assert pm.players[f"a{i}"] == 1
        assert pm.players[f"b{i}"] == -1
    assert pm.teams["AAA"] == 1
    assert pm.teams["BBB"] == -1


def test_plus_minus_cancels_over_mirrored_goals():
    events = make_events([ROW1, ROW2])
    pm = plus_minus(events)
    assert all(v == 0 for v in pm.players.values())
    assert all(v == 0 for v in pm.teams.values())


def test_plus_minus_sums_to_zero(league):
    events, _truth = league
    pm = plus_minus(events)
    assert sum(pm.players.values()) == 0


def test_plus_minus_matches_design_identity(league, league_design):
    # player plus-minus equals (folded design) column sums over the player block
    events, _truth = league
    pm = plus_minus(events)
    folded = league_design.folded_csr().toarray()
    directory = league_design.directory
    for pid, _pos in directory.players:
        assert pm.players[pid] == int(folded[:, directory.player_index(pid)].sum())


def test_directory_column_ids_order(league_design):
    directory = league_design.directory
    ids = directory.column_ids()
    assert len(ids) == directory.n_cols
    assert ids[directory.team_index(directory.teams[0])] == f"team:{directory.teams[0]}"
    pid, _pos = directory.players[0]
    assert ids[directory.player_index(pid)] == f"player:{pid}"


def test_directory_unknown_lookups(league_design):
    directory = league_design.directory
    with pytest.raises(UnknownColumn):
        directory.team_index("nope")
    with pytest.raises(UnknownPlayer):
        directory.player_index("nope")


def test_directory_dict_round_trip(league_design):
    directory = league_design.directory
    again = directory_from_dict(directory_to_dict(directory))
    assert again == directory


def test_design_save_load_round_trip(tmp_path, league_design):
    save_design(league_design, tmp_path / "design")
    again = load_design(tmp_path / "design")
    assert again.directory == league_design.directory
    assert np.array_equal(
        again.to_csr().toarray(), league_design.to_csr().toarray()
    )
    assert np.array_equal(again.response, league_design.response)


def test_load_design_rejects_unknown_column(tmp_path, league_design):
    save_design(league_design, tmp_path / "design")
    triplets = (tmp_path / "design" / "triplets.csv").read_text().splitlines()
    triplets[1] = triplets[1].rsplit(",", 2)[0].replace(
        triplets[1].split(",")[1], "player:ghost", 1
    )
    # rewrite row 1 with a column id the directory does not know
    parts = triplets[1].split(",")
    (tmp_path / "design" / "triplets.csv").write_text(
        "\n".join([triplets[0], f"{parts[0]},player:ghost,1"] + triplets[2:]) + "\n"
    )
    with pytest.raises(UnknownColumn):
        load_design(tmp_path / "design")
