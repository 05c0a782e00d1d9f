"""Deterministic diagnostic scenario constructors and grading.

Nine single-turn positions, each with one graded-optimal action class:

  S1  redundant hint avoidance   optimal: the informative rank hint
  S2  critical save              optimal: hint the partner's critical chop
  S3  trust-based play           optimal: play the hinted card
  S4  inference from silence     optimal: discard an unhinted card
  S5  finesse (2nd-order)        optimal: wait (any non-focal action)
  S6  belief update after action optimal: play the newly-playable card
  L1  1st-order knowledge probe  optimal: hint the partner's unknown play
  L2  finesse, depth-series name operationally identical to S5
  L3  anti-finesse               optimal: play (no finesse is active)

Every position is produced by dealing a hand-picked deck and replaying a
short scripted opening through the rules engine, so hands are reachable and
hint marks are consistent with real events. Construction is fixed: the same
id and player count always yield the identical position. At 3-5 players the
extra seats hold dull filler hands and take scripted-neutral turns (discards
of junk draws, or hints between fillers at the token cap).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .engine import (
    Action,
    Card,
    GameState,
    Ruleset,
    RulesError,
    apply_action,
    deal,
    hint,
    legal_actions,
    play,
    validate_state,
)

STANDARD = Ruleset()

SCENARIO_IDS = ("S1", "S2", "S3", "S4", "S5", "S6", "L1", "L2", "L3")


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Optimal:
    """Grading class for a scenario's documented optimal action."""

    kind: str  # play_slot | not_play_slot | hint_exact | hint_touching | discard_unhinted
    target: int | None = None
    slot: int | None = None
    value: str | int | None = None

    def matches(self, state: GameState, actor: int, action: Action) -> bool:
        if self.kind == "play_slot":
            return action.kind == "play" and action.slot == self.slot
        if self.kind == "not_play_slot":
            return not (action.kind == "play" and action.slot == self.slot)
        if self.kind == "hint_exact":
            return (
                action.kind == "hint"
                and action.target == self.target
                and action.value == self.value
            )
        if self.kind == "hint_touching":
            if action.kind != "hint" or action.target != self.target:
                return False
            card = state.hands[self.target][self.slot]
            return action.value in (card.color, card.rank)
        if self.kind == "discard_unhinted":
            if action.kind != "discard":
                return False
            marks = state.knowledge[actor][action.slot]
            return not any(m.touched for m in marks)
        raise ScenarioError(f"unknown optimal kind {self.kind!r}")

    def describe(self) -> str:
        return {
            "play_slot": f"play card {(self.slot or 0) + 1}",
            "not_play_slot": f"wait (anything but playing card {(self.slot or 0) + 1})",
            "hint_exact": f"hint {self.value} to player {self.target}",
            "hint_touching": f"hint player {self.target}'s card {(self.slot or 0) + 1}",
            "discard_unhinted": "discard an unhinted card",
        }[self.kind]


@dataclass(frozen=True)
class ScenarioInstance:
    id: str
    name: str
    state: GameState
    acting_player: int
    optimal: Optimal
    tom_depth: str  # "1st" | "2nd"
    players: int

    def to_dict(self) -> dict:
        from .engine import event_log_lines

        return {
            "id": self.id,
            "name": self.name,
            "players": self.players,
            "acting_player": self.acting_player,
            "tom_depth": self.tom_depth,
            "optimal": self.optimal.__dict__,
            "hands": [[c.code for c in hand] for hand in self.state.hands],
            "stacks": list(self.state.stacks),
            "hints": self.state.hints,
            "bombs": self.state.bombs,
            "events": event_log_lines(self.state.history),
        }


@dataclass(frozen=True)
class GradeResult:
    correct: bool
    override: bool = False

    @property
    def label(self) -> str:
        return "correct" if self.correct else "incorrect"


def grade(
    instance: ScenarioInstance,
    chosen: Action,
    planner_top: Action | None = None,
    informed: bool = False,
) -> GradeResult:
    """Grade a chosen action against the scenario's optimal class.

    The override flag is set only for the informed architecture, where the
    agent saw the planner's top recommendation and picked something else.
    """
    if chosen not in legal_actions(instance.state):
        raise ScenarioError(f"graded action {chosen} is not legal here")
    correct = instance.optimal.matches(instance.state, instance.acting_player, chosen)
    override = bool(informed and planner_top is not None and chosen != planner_top)
    return GradeResult(correct=correct, override=override)


# ---------------------------------------------------------------------------
# Construction machinery
# ---------------------------------------------------------------------------

def _chop_slot(marks_per_slot) -> int | None:
    for slot, marks in enumerate(marks_per_slot):
        if not any(m.touched for m in marks):
            return slot
    return None


def _safe_to_discard(state: GameState, card: Card) -> bool:
    """Discarding must not leave the last copy of a still-needed card sitting
    on anyone's chop, where it would attract save hints and distort scores."""
    remaining = state.ruleset.copies(card.rank) - state.discards.count(card) - 1
    if remaining != 1 or card.rank <= state.stack_height(card.color):
        return True
    for p in range(state.players):
        chop = _chop_slot(state.knowledge[p])
        if chop is not None and state.hands[p][chop] == card:
            return False
    return True


def _filler_turn(state: GameState) -> Action:
    """A scripted-neutral action for a filler seat.

    Prefers discarding the newest card that cannot create a critical chop
    anywhere; at the token cap (or with no safe discard) it hints a fellow
    filler, and as a last resort repeats the most recent hint, which is
    mark-neutral.
    """
    p = state.current_player
    hand = state.hands[p]
    if state.hints < state.ruleset.max_hints:
        for slot in range(len(hand) - 1, -1, -1):
            if _safe_to_discard(state, hand[slot]):
                return Action("discard", slot=slot)
    if state.hints > 0:
        for co in range(2, state.players):
            if co == p:
                continue
            value = _chop_preserving_hint_value(state, co)
            if value is not None:
                return hint(co, value)
        for event in reversed(state.history):
            if event.kind == "hint" and event.target != p:
                hand_t = state.hands[event.target]
                if any(event.value in (c.color, c.rank) for c in hand_t):
                    return hint(event.target, event.value)
    raise ScenarioError("filler has no scripted-neutral action available")


def _chop_preserving_hint_value(state: GameState, target: int) -> str | int | None:
    """A legal hint value for ``target`` that does not touch their chop slot,
    so the chop (and any criticality bookkeeping around it) stays put."""
    hand = state.hands[target]
    chop = _chop_slot(state.knowledge[target])
    for rank in state.ruleset.ranks:
        slots = [i for i, c in enumerate(hand) if c.rank == rank]
        if slots and chop not in slots:
            return rank
    for color in state.ruleset.suits:
        slots = [i for i, c in enumerate(hand) if c.color == color]
        if slots and chop not in slots:
            return color
    return None


def _canonical_key(card: Card) -> tuple:
    return (STANDARD.suits.index(card.color), card.rank)


def _allocate_fillers(avail: list[Card], players: int, size: int) -> list[list[Card]]:
    """Dull hands for seats beyond Alice and Bob.

    No rank 1s (a lucky rank hint could certify one playable and outbid the
    scenario's focal action) and no 5s (a critical chop would invite save
    hints). Non-green middle ranks are preferred so the finesse layouts stay
    undisturbed.
    """
    pool = sorted(
        (c for c in avail if c.rank in (2, 3, 4)),
        key=lambda c: (c.color == "green", c.rank, _canonical_key(c)),
    )
    needed = (players - 2) * size
    if len(pool) < needed:
        raise ScenarioError("not enough dull cards for filler hands")
    picked = pool[:needed]
    return [picked[i * size : (i + 1) * size] for i in range(players - 2)]


def _allocate_junk(avail: list[Card], count: int = 10) -> list[Card]:
    """Draw-queue cards: complete rank-2/3 non-green pairs.

    Using both copies of each identity keeps criticality quiet: once one
    copy is discarded, its twin is in the queue or already gone, never in a
    hand's chop where it would attract save hints.
    """
    from collections import Counter

    counts = Counter(avail)
    junk: list[Card] = []
    for card in sorted(set(avail), key=_canonical_key):
        if card.rank in (2, 3) and card.color != "green" and counts[card] == 2:
            junk.extend([card, card])
    return junk[:count]


def _construct(
    players: int,
    alice: list[Card],
    bob: list[Card],
    steps: list,
    actor: int,
) -> GameState:
    if not 2 <= players <= 5:
        raise ScenarioError(f"players must be in 2..5, got {players}")
    size = STANDARD.hand_size(players)
    hands = [alice[:size], bob[:size]]
    avail = STANDARD.full_deck()
    for card in hands[0] + hands[1]:
        avail.remove(card)
    # junk pairs claim their copies before filler hands eat the 2s and 3s
    junk = _allocate_junk(avail)
    for card in junk:
        avail.remove(card)
    hands += _allocate_fillers(avail, players, size)
    for hand in hands[2:]:
        for card in hand:
            avail.remove(card)
    dealt = [hands[p][slot] for slot in range(size) for p in range(players)]
    state = deal(players, dealt + junk + sorted(avail, key=_canonical_key))
    queue = list(steps)
    while queue:
        if state.current_player <= 1:
            state, _ = apply_action(state, queue.pop(0)(state))
        else:
            state, _ = apply_action(state, _filler_turn(state))
    while state.current_player != actor:
        state, _ = apply_action(state, _filler_turn(state))
    validate_state(state)
    if state.terminal:
        raise ScenarioError("scenario construction reached a terminal state")
    return state


def _c(code: str) -> Card:
    colors = {"R": "red", "Y": "yellow", "G": "green", "W": "white", "B": "blue"}
    return Card(colors[code[0]], int(code[1:]))


def _cards(codes: str) -> list[Card]:
    return [_c(tok) for tok in codes.split()]


def _s1(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # Bob's red 1 is already color-hinted; the rank hint completes it, the
    # repeated color hint would add nothing.
    alice = _cards("Y4 W3 G3 B4 R2")
    bob = _cards("R1 Y3 B3 W4 G4")
    steps = [
        lambda s: hint(1, "red"),
        lambda s: hint(0, 4),
    ]
    state = _construct(players, alice, bob, steps, actor=0)
    return state, 0, Optimal("hint_exact", target=1, value=1), "1st", "Redundant Hint Avoidance"


def _s2(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # Bob's chop card is the red 5: the next discard by convention and the
    # last copy of a card every perfect game needs.
    alice = _cards("Y3 G4 W2 B3 R2")
    bob = _cards("R5 Y2 G3 B2 W4")
    state = _construct(players, alice, bob, [], actor=0)
    return state, 0, Optimal("hint_touching", target=1, slot=0), "1st", "Critical Save"


def _s3(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # A rank-1 hint on empty stacks certifies the card playable; trust it.
    alice = _cards("R3 Y4 W3 G4 B3")
    bob = _cards("Y3 R1 B4 W2 G3")
    steps = [lambda s: hint(1, 1)]
    state = _construct(players, alice, bob, steps, actor=1)
    return state, 1, Optimal("play_slot", slot=1), "1st", "Trust-Based Play"


def _s4(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # Alice had tokens and kept pointing at Bob's 5, never at his other
    # cards; the silence marks them safe to discard. Alice's own hand is
    # hint-saturated so no remaining hint carries value.
    alice = _cards("R3 R3 R4 W4 W4")
    bob = _cards("R5 Y3 B3 W2 G2")
    steps = [
        lambda s: hint(1, 5),
        lambda s: hint(0, "red"),
        lambda s: hint(1, "red"),
        lambda s: hint(0, 3),
        lambda s: hint(1, 5),
        lambda s: hint(0, 4),
        lambda s: hint(1, "red"),
    ]
    state = _construct(players, alice, bob, steps, actor=1)
    return state, 1, Optimal("discard_unhinted"), "1st", "Inference from Silence"


def _finesse_layout(players: int, anti: bool) -> tuple[GameState, int]:
    """Shared S5/L2/L3 surface: green stack at 1 and a green-hinted card in
    Bob's slot 3. In the finesse version the card is G3 and Alice visibly
    holds the G2 bridge; in the anti-finesse version the hinted card is the
    directly playable G2 and no bridge exists."""
    if anti:
        alice = _cards("G1 W4 R4 W3 Y2")
        bob = _cards("R1 B4 G2 W3 Y4")
        rank_pin = 2
        # repeating the rank-4 hint is mark-neutral and keeps Alice's chop on
        # an original card rather than a junk draw
        second_hint = lambda s: hint(0, 4)
    else:
        alice = _cards("G1 G2 R4 W3 Y2")
        bob = _cards("R1 B4 G3 W2 Y4")
        rank_pin = 3
        second_hint = lambda s: hint(0, 2)
    steps = [
        lambda s: play(0),            # Alice opens the green stack with G1
        lambda s: hint(0, 4),         # Bob: innocuous return hint
        lambda s: hint(1, "green"),   # Alice marks Bob's green card
        second_hint,                  # Bob: innocuous return hint
        lambda s: hint(1, rank_pin),  # Alice pins the rank
    ]
    state = _construct(players, alice, bob, steps, actor=1)
    return state, 1


def _s5(players: int) -> tuple[GameState, int, Optimal, str, str]:
    state, actor = _finesse_layout(players, anti=False)
    return state, actor, Optimal("not_play_slot", slot=2), "2nd", "Finesse"


def _l3(players: int) -> tuple[GameState, int, Optimal, str, str]:
    state, actor = _finesse_layout(players, anti=True)
    return state, actor, Optimal("play_slot", slot=2), "2nd", "Anti-Finesse"


def _s6(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # Bob knows his blue 2; once Alice's B1 lands it is newly playable.
    alice = _cards("B1 R3 Y3 W4 G4")
    bob = _cards("R4 Y4 B2 W3 G3")
    steps = [
        lambda s: hint(1, "blue"),
        lambda s: hint(0, 3),
        lambda s: hint(1, 2),
        lambda s: hint(0, 4),
        lambda s: play(0),
    ]
    state = _construct(players, alice, bob, steps, actor=1)
    return state, 1, Optimal("play_slot", slot=2), "1st", "Belief Update After Action"


def _l1(players: int) -> tuple[GameState, int, Optimal, str, str]:
    # Alice holds a playable G1 she knows nothing about; Bob must model her
    # knowledge gap and fill it.
    alice = _cards("G1 R3 Y3 W3 B4")
    bob = _cards("Y4 W4 R2 B3 G4")
    steps = [lambda s: hint(1, 4)]
    state = _construct(players, alice, bob, steps, actor=1)
    return state, 1, Optimal("hint_touching", target=0, slot=0), "1st", "Knowledge Probe"


_BUILDERS = {
    "S1": _s1,
    "S2": _s2,
    "S3": _s3,
    "S4": _s4,
    "S5": _s5,
    "S6": _s6,
    "L1": _l1,
    "L2": _s5,  # operationally identical to S5; only the id differs
    "L3": _l3,
}


@lru_cache(maxsize=None)
def make_scenario(scenario_id: str, players: int = 2) -> ScenarioInstance:
    """Build the fixed diagnostic position for an id at a player count."""
    key = scenario_id.strip().upper()
    if key not in _BUILDERS:
        raise ScenarioError(f"unknown scenario id {scenario_id!r}")
    state, actor, optimal, depth, name = _BUILDERS[key](players)
    return ScenarioInstance(
        id=key,
        name=name,
        state=state,
        acting_player=actor,
        optimal=optimal,
        tom_depth=depth,
        players=players,
    )


def catalog(players: int = 2) -> list[ScenarioInstance]:
    return [make_scenario(sid, players) for sid in SCENARIO_IDS]
