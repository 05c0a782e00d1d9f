"""Shared state builders for the test suite."""

from hanabilab.engine import Card, Ruleset, apply_action, deal, hint, play


def stacked_deck(front, ruleset=Ruleset()):
    """Full deck with ``front`` first and the remaining cards after."""
    rest = ruleset.full_deck()
    for card in front:
        rest.remove(card)
    return front + rest


def finesse_state():
    """Green stack at 1, Bob's slot 3 hinted green+3, Alice visibly holds G2."""
    alice = [Card("green", 1), Card("green", 2), Card("red", 4), Card("white", 3), Card("yellow", 2)]
    bob = [Card("red", 1), Card("blue", 4), Card("green", 3), Card("white", 2), Card("yellow", 4)]
    front = [c for pair in zip(alice, bob) for c in pair] + [Card("red", 1)]
    state = deal(2, stacked_deck(front))
    state, _ = apply_action(state, play(0))          # Alice plays G1; green stack 1
    state, _ = apply_action(state, hint(0, 4))       # Bob: innocuous hint (touches R4)
    state, _ = apply_action(state, hint(1, "green"))  # Alice marks Bob's G3
    state, _ = apply_action(state, hint(0, 2))       # Bob: innocuous hint
    state, _ = apply_action(state, hint(1, 3))       # Alice pins the rank: slot 3 = G3
    assert state.current_player == 1
    return state
