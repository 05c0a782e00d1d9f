"""Scenario construction, grading, and the planner contract on all nine ids."""

import pytest

from hanabilab.beliefs import build_graph
from hanabilab.engine import Card, discard, hint, legal_actions, play, validate_state
from hanabilab.planner import detect_finesse, shortlist
from hanabilab.scenarios import (
    SCENARIO_IDS,
    ScenarioError,
    catalog,
    grade,
    make_scenario,
)


@pytest.mark.parametrize("sid", SCENARIO_IDS)
def test_instances_are_engine_legal(sid):
    inst = make_scenario(sid)
    validate_state(inst.state)
    assert not inst.state.terminal
    assert inst.state.current_player == inst.acting_player


def test_unknown_id_rejected():
    with pytest.raises(ScenarioError):
        make_scenario("S9")


def test_construction_is_reproducible():
    a = make_scenario("S5")
    b = make_scenario("S5")
    assert a.state == b.state


def test_s5_layout_matches_description():
    inst = make_scenario("S5")
    state = inst.state
    assert state.stack_height("green") == 1
    assert state.hands[1][2] == Card("green", 3)
    assert Card("green", 2) in state.hands[0]
    graph = build_graph(state, 1)
    assert graph.own[2].determined() == Card("green", 3)


def test_s2_partner_chop_is_critical():
    inst = make_scenario("S2")
    chop = inst.state.hands[1][0]
    assert chop == Card("red", 5)
    assert inst.state.is_critical(chop)


def test_l3_mirrors_s5_without_the_bridge():
    inst = make_scenario("L3")
    state = inst.state
    assert state.stack_height("green") == 1
    assert state.hands[1][2] == Card("green", 2)
    assert Card("green", 2) not in state.hands[0]
    assert state.playable(state.hands[1][2])


def test_l2_is_operationally_identical_to_s5():
    s5 = make_scenario("S5")
    l2 = make_scenario("L2")
    assert l2.state == s5.state
    assert l2.optimal == s5.optimal
    assert l2.acting_player == s5.acting_player
    assert l2.id == "L2" and s5.id == "S5"


@pytest.mark.parametrize("sid", SCENARIO_IDS)
def test_planner_top_action_is_the_documented_optimal(sid):
    inst = make_scenario(sid)
    graph = build_graph(inst.state, inst.acting_player)
    sl = shortlist(inst.state, graph)
    result = grade(inst, sl.top.action)
    assert result.correct, (
        f"{sid}: planner top {sl.top.action} (value {sl.top.value:+.2f}) is not in"
        f" the optimal class '{inst.optimal.describe()}'"
    )


@pytest.mark.parametrize("sid", SCENARIO_IDS)
def test_finesse_detector_fires_only_on_s5_and_l2(sid):
    inst = make_scenario(sid)
    graph = build_graph(inst.state, inst.acting_player)
    pattern = detect_finesse(inst.state, graph)
    if sid in ("S5", "L2"):
        assert pattern is not None
        assert pattern.bridge_card == Card("green", 2)
        assert pattern.deferred_slot == 2
    else:
        assert pattern is None


def test_grade_s5_cases():
    inst = make_scenario("S5")
    assert not grade(inst, play(2)).correct           # playing the focal card bombs
    assert grade(inst, discard(0)).correct            # safe discard is WAIT-class
    assert grade(inst, hint(0, "green")).correct      # safe hint is WAIT-class
    assert grade(inst, play(0)).correct               # any non-focal action counts


def test_grade_s3_play_hinted():
    inst = make_scenario("S3")
    assert grade(inst, play(1)).correct
    assert not grade(inst, play(0)).correct
    assert not grade(inst, discard(0)).correct


def test_grade_s4_only_unhinted_discards_count():
    inst = make_scenario("S4")
    assert grade(inst, discard(1)).correct
    assert grade(inst, discard(4)).correct
    assert not grade(inst, discard(0)).correct  # the hinted 5 is not "unhinted"
    assert not grade(inst, play(1)).correct


def test_grade_override_flag_only_when_informed():
    inst = make_scenario("S5")
    graph = build_graph(inst.state, inst.acting_player)
    top = shortlist(inst.state, graph).top.action
    g = grade(inst, play(2), planner_top=top, informed=True)
    assert g.override and not g.correct
    g2 = grade(inst, play(2), planner_top=top, informed=False)
    assert not g2.override
    g3 = grade(inst, top, planner_top=top, informed=True)
    assert not g3.override and g3.correct


def test_grade_rejects_illegal_actions():
    inst = make_scenario("S1")
    with pytest.raises(ScenarioError):
        grade(inst, hint(0, "red"))  # self-hint is illegal


def test_catalog_covers_all_ids():
    instances = catalog()
    assert [i.id for i in instances] == list(SCENARIO_IDS)
    assert {i.tom_depth for i in instances} == {"1st", "2nd"}


@pytest.mark.parametrize("players", [3, 4, 5])
@pytest.mark.parametrize("sid", SCENARIO_IDS)
def test_scenarios_scale_to_more_players(players, sid):
    inst = make_scenario(sid, players=players)
    validate_state(inst.state)
    assert inst.players == players
    assert inst.state.current_player == inst.acting_player
    graph = build_graph(inst.state, inst.acting_player)
    sl = shortlist(inst.state, graph)
    assert grade(inst, sl.top.action).correct
    pattern = detect_finesse(inst.state, graph)
    assert (pattern is not None) == (sid in ("S5", "L2"))


def test_export_round_trip_fields():
    inst = make_scenario("S5")
    d = inst.to_dict()
    assert d["id"] == "S5"
    assert d["stacks"][2] == 1  # green
    assert len(d["events"]) == len(inst.state.history)
    assert d["hands"][1][2] == "G3"
