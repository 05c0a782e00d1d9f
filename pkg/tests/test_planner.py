"""Planner tests: scoring oracle, shortlist committee, finesse detection, renders."""

import re

import pytest

from hanabilab.beliefs import AblationCondition, BeliefDepth, apply_ablation, build_graph
from hanabilab.engine import (
    Card,
    Ruleset,
    apply_action,
    deal,
    discard,
    hint,
    legal_actions,
    new_game,
    play,
)
from hanabilab.planner import (
    ScoredAction,
    ShortlistVariant,
    detect_finesse,
    rank_entries,
    render_shortlist,
    score_action,
    shortlist,
)

from conftest import finesse_state, stacked_deck


def certain_play_state():
    """Bob's slot 2 is hinted rank 1 on empty stacks: guaranteed playable."""
    alice = [Card("red", 3), Card("yellow", 3), Card("white", 3), Card("green", 4), Card("blue", 4)]
    bob = [Card("yellow", 4), Card("red", 1), Card("blue", 3), Card("white", 2), Card("green", 3)]
    state = deal(2, stacked_deck([c for pair in zip(alice, bob) for c in pair]))
    state, _ = apply_action(state, hint(1, 1))
    assert state.current_player == 1
    return state


def test_certain_play_scores_exactly_one():
    state = certain_play_state()
    graph = build_graph(state, 1)
    assert graph.own[1].p_playable(graph.stacks) == 1.0
    assert score_action(state, graph, play(1)) == pytest.approx(1.0)


def test_deferred_finesse_play_scores_negative():
    state = finesse_state()
    graph = build_graph(state, 1)
    assert score_action(state, graph, play(2)) < 0


def test_shortlist_on_finesse_orders_wait_discard_play():
    state = finesse_state()
    graph = build_graph(state, 1)
    sl = shortlist(state, graph)
    assert [sl.label(i) for i in range(3)] == ["WAIT", "DISCARD", "PLAY"]
    assert sl.top.action.kind != "play"
    assert sl.entries[2].action == play(2)  # the tempting deferred play, scored low
    assert sl.entries[0].value > sl.entries[1].value > sl.entries[2].value
    assert sl.top.rationale


def test_shortlist_dominant_play_tops():
    state = certain_play_state()
    graph = build_graph(state, 1)
    sl = shortlist(state, graph)
    assert sl.top.action == play(1)
    assert sl.label(0) == "PLAY"


def test_shortlist_requires_acting_player_beliefs():
    state = certain_play_state()
    graph = build_graph(state, 0)
    with pytest.raises(Exception):
        shortlist(state, graph)


def test_detect_finesse_fires_only_with_bridge_card():
    state = finesse_state()
    graph = build_graph(state, 1)
    pat = detect_finesse(state, graph)
    assert pat is not None
    assert pat.bridge_card == Card("green", 2)
    assert pat.deferred_slot == 2

    frozen = apply_ablation(graph, AblationCondition.GRAPH_FROZEN, state.history)
    assert detect_finesse(state, frozen) is None

    fresh = new_game(2, seed=0)
    assert detect_finesse(fresh, build_graph(fresh, 0)) is None


def _focal_ev_oracle(state, perspective: int, slot: int, mode: str) -> float:
    """Exhaustive expectation over completions of the focal slot.

    Enumerates every unseen copy consistent with the slot's marks and
    averages the play (or discard) outcome directly from the rules, without
    going through CardBelief.
    """
    from collections import Counter

    from hanabilab.engine import excluded_by_marks

    unseen = Counter(state.ruleset.full_deck())
    for p, hand in enumerate(state.hands):
        if p != perspective:
            unseen.subtract(hand)
    unseen.subtract(state.discards)
    unseen.subtract(state._stacked_cards())
    marks = state.knowledge[perspective][slot]
    total, acc = 0, 0.0
    for card, n in unseen.items():
        if n <= 0 or excluded_by_marks(marks, card):
            continue
        if mode == "play":
            value = 1.0 if state.playable(card) else -2.0
            if state.bombs == 2 and not state.playable(card):
                value += -3.0
        else:
            value = 0.1 + (-1.0 if state.is_critical(card) else 0.0)
        acc += n * value
        total += n
    return acc / total


def test_play_score_matches_exhaustive_expectation_on_reduced_deck():
    ruleset = Ruleset.reduced()
    state = new_game(2, seed=5, ruleset=ruleset)
    state, _ = apply_action(state, hint(1, "green"))
    graph = build_graph(state, 1)
    assert detect_finesse(state, graph) is None
    for slot in range(5):
        assert score_action(state, graph, play(slot)) == pytest.approx(
            _focal_ev_oracle(state, 1, slot, "play"), abs=1e-9
        )


def test_discard_score_matches_exhaustive_expectation_on_reduced_deck():
    ruleset = Ruleset.reduced()
    state = new_game(2, seed=9, ruleset=ruleset)
    # burn a couple of copies into the discard pile so criticality is live,
    # ending with tokens below the cap so discards stay legal
    state, _ = apply_action(state, hint(1, state.hands[1][0].rank))
    state, _ = apply_action(state, hint(0, state.hands[0][0].rank))
    state, _ = apply_action(state, discard(1))
    state, _ = apply_action(state, discard(2))
    state, _ = apply_action(state, hint(1, state.hands[1][0].rank))
    state, _ = apply_action(state, hint(0, state.hands[0][0].rank))
    assert state.hints < 8
    graph = build_graph(state, 0)
    assert detect_finesse(state, graph) is None
    for slot in range(5):
        assert score_action(state, graph, discard(slot)) == pytest.approx(
            _focal_ev_oracle(state, 0, slot, "discard"), abs=1e-9
        )


def test_rank_order_invariant_under_positive_affine_transform():
    state = finesse_state()
    graph = build_graph(state, 1)
    scored = [
        ScoredAction(a, score_action(state, graph, a), "x") for a in legal_actions(state)
    ]
    base = [e.action for e in rank_entries(scored)]
    for a, b in [(2.0, 7.0), (0.5, -3.0), (10.0, 0.0)]:
        transformed = [ScoredAction(e.action, a * e.value + b, "x") for e in scored]
        assert [e.action for e in rank_entries(transformed)] == base


def test_tie_break_prefers_hint_then_discard_then_play():
    entries = [
        ScoredAction(play(0), 0.5, "p"),
        ScoredAction(discard(1), 0.5, "d"),
        ScoredAction(hint(1, "red"), 0.5, "h"),
        ScoredAction(play(2), 0.5, "p2"),
    ]
    ranked = rank_entries(entries)
    assert [e.action.kind for e in ranked] == ["hint", "discard", "play", "play"]
    assert ranked[2].action.slot == 0  # lowest slot first among equal plays


def test_shortlist_is_strictly_ordered():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))
    keys = [(e.value, tuple(str(x) for x in (e.action.kind, e.action.slot, e.action.target, e.action.value))) for e in sl.entries]
    assert len(set(keys)) == len(keys)
    assert all(sl.entries[i].value >= sl.entries[i + 1].value for i in range(len(sl.entries) - 1))


def test_render_v0_bracket_format():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))
    text = render_shortlist(sl, ShortlistVariant.V0)
    bracket = text.splitlines()[1]
    assert re.fullmatch(
        r"\[1\. WAIT [+-]\d+\.\d{2}, 2\. DISCARD [+-]\d+\.\d{2}, 3\. PLAY [+-]\d+\.\d{2}\]",
        bracket,
    )


def test_render_v1_widens_top_margin_at_least_threefold():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))

    def displayed_margin(text):
        nums = [float(m) for m in re.findall(r"[+-]\d+\.\d{2}", text.splitlines()[1])]
        return nums[0] - nums[1]

    v0 = render_shortlist(sl, ShortlistVariant.V0)
    v1 = render_shortlist(sl, ShortlistVariant.V1)
    assert displayed_margin(v1) >= 3 * displayed_margin(v0) - 1e-9
    # same option lines, same order
    assert v0.splitlines()[2:] == v1.splitlines()[2:]


def test_render_v2_appends_rejected_play_label():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))
    v0 = render_shortlist(sl, ShortlistVariant.V0)
    v2 = render_shortlist(sl, ShortlistVariant.V2)
    assert "PLAY: not recommended (" in v2
    # V2 differs from V0 only by the appended rejection line
    assert v2.splitlines()[1:-1] == v0.splitlines()[1:]


def test_render_v3_explains_the_finesse_mechanism():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))
    text = render_shortlist(sl, ShortlistVariant.V3)
    reasoning = text.split("Reasoning:")[1]
    assert reasoning.count(".") >= 3
    for needle in ("convention", "signals", "bomb"):
        assert needle in reasoning
    assert not re.search(r"[+-]\d+\.\d{2}", text)  # score labels replaced


def test_render_v3_without_finesse_falls_back_to_rationale():
    state = certain_play_state()
    sl = shortlist(state, build_graph(state, 1))
    text = render_shortlist(sl, ShortlistVariant.V3)
    assert "Reasoning:" in text


def test_wait_action_is_a_safe_non_play():
    state = finesse_state()
    sl = shortlist(state, build_graph(state, 1))
    assert sl.wait_action().kind != "play"
