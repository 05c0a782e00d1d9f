"""Deterministic Hanabi rules engine for 2-5 players.

States are immutable values: ``apply_action`` returns a fresh state plus the
public event it generated, so replaying an event list always reproduces the
same position bit for bit. The shuffle is a plain Fisher-Yates permutation
driven by ``random.Random(seed)`` (CPython's Mersenne Twister, stable across
versions), which keeps deals reproducible from a single integer seed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from random import Random
from typing import Iterator, NamedTuple

COLORS = ("red", "yellow", "green", "white", "blue")
COLOR_CODES = {"red": "R", "yellow": "Y", "green": "G", "white": "W", "blue": "B"}
RANK_COUNTS = {1: 3, 2: 2, 3: 2, 4: 2, 5: 1}
PLAYER_NAMES = ("Alice", "Bob", "Carol", "Dave", "Eve")

EVENT_SCHEMA_VERSION = 1


class RulesError(Exception):
    """Raised for illegal actions or malformed game setups."""


class Card(NamedTuple):
    color: str
    rank: int

    @property
    def code(self) -> str:
        """Short token like ``G3``."""
        return f"{COLOR_CODES[self.color]}{self.rank}"

    def __repr__(self) -> str:
        return self.code


@dataclass(frozen=True)
class Ruleset:
    """Fixed game constants.

    The defaults are the standard public ruleset: five suits, rank
    multiplicities 3/2/2/2/1 (50 cards), 8 hint tokens, a 3-bomb fuse and
    hands of 5 cards for 2-3 players / 4 cards for 4-5 players. A reduced
    two-suit ruleset is available for exhaustive testing.
    """

    suits: tuple[str, ...] = COLORS
    rank_counts: tuple[tuple[int, int], ...] = tuple(sorted(RANK_COUNTS.items()))
    max_hints: int = 8
    bomb_fuse: int = 3

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.rank_counts)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def max_score(self) -> int:
        return len(self.suits) * self.max_rank

    @property
    def deck_size(self) -> int:
        return len(self.suits) * sum(n for _, n in self.rank_counts)

    def copies(self, rank: int) -> int:
        return dict(self.rank_counts)[rank]

    def hand_size(self, players: int) -> int:
        return 5 if players <= 3 else 4

    def full_deck(self) -> list[Card]:
        """Canonical deck order: suit-major, ranks ascending, copies adjacent."""
        return [
            Card(color, rank)
            for color in self.suits
            for rank, copies in self.rank_counts
            for _ in range(copies)
        ]

    def identities(self) -> list[Card]:
        """The distinct (color, rank) identities, canonical order."""
        return [Card(c, r) for c in self.suits for r in self.ranks]

    @classmethod
    def reduced(cls, suits: tuple[str, ...] = ("red", "green")) -> "Ruleset":
        return cls(suits=suits)


STANDARD_RULESET = Ruleset()


class HintMark(NamedTuple):
    """One hint's imprint on a single slot.

    ``touched`` is True when the hint matched this slot (positive
    information) and False when it did not (negative information).
    ``event_index`` ties the mark back to the hint event that produced it.
    """

    event_index: int
    kind: str  # "color" | "rank"
    value: str | int
    touched: bool


SlotMarks = tuple[HintMark, ...]


def known_color(marks: SlotMarks) -> str | None:
    for m in marks:
        if m.kind == "color" and m.touched:
            return m.value  # type: ignore[return-value]
    return None


def known_rank(marks: SlotMarks) -> int | None:
    for m in marks:
        if m.kind == "rank" and m.touched:
            return m.value  # type: ignore[return-value]
    return None


def excluded_by_marks(marks: SlotMarks, card: Card) -> bool:
    """True if any mark rules this identity out for the slot."""
    for m in marks:
        if m.kind == "color":
            if m.touched and card.color != m.value:
                return True
            if not m.touched and card.color == m.value:
                return True
        else:
            if m.touched and card.rank != m.value:
                return True
            if not m.touched and card.rank == m.value:
                return True
    return False


@dataclass(frozen=True)
class Action:
    """A move: Play(slot) | Discard(slot) | Hint(target, color-or-rank value)."""

    kind: str  # "play" | "discard" | "hint"
    slot: int | None = None
    target: int | None = None
    hint_kind: str | None = None  # "color" | "rank"
    value: str | int | None = None

    def describe(self) -> str:
        if self.kind == "play":
            return f"play card {self.slot + 1}"
        if self.kind == "discard":
            return f"discard card {self.slot + 1}"
        return f"hint {self.value} to {PLAYER_NAMES[self.target]}"

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(**d)


def play(slot: int) -> Action:
    return Action("play", slot=slot)


def discard(slot: int) -> Action:
    return Action("discard", slot=slot)


def hint(target: int, value: str | int) -> Action:
    kind = "rank" if isinstance(value, int) else "color"
    return Action("hint", target=target, hint_kind=kind, value=value)


@dataclass(frozen=True)
class Event:
    """Full public consequence of one action.

    ``drawn`` is the replacement card pulled after a play or discard; it is
    public to everyone except the drawer (who must not condition on it).
    ``deck_after`` lets survival accounting detect deck exhaustion from the
    event stream alone.
    """

    index: int
    kind: str  # "play" | "discard" | "hint"
    actor: int
    slot: int | None = None
    card: Card | None = None
    success: bool | None = None
    drawn: Card | None = None
    deck_after: int | None = None
    target: int | None = None
    hint_kind: str | None = None
    value: str | int | None = None
    touched: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        d: dict = {"v": EVENT_SCHEMA_VERSION, "index": self.index, "kind": self.kind, "actor": self.actor}
        if self.kind == "hint":
            d.update(target=self.target, hint_kind=self.hint_kind, value=self.value, touched=list(self.touched or ()))
        else:
            d.update(slot=self.slot, card=self.card.code if self.card else None, deck_after=self.deck_after)
            if self.kind == "play":
                d["success"] = self.success
            if self.drawn is not None:
                d["drawn"] = self.drawn.code
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        kind = d["kind"]
        if kind == "hint":
            return cls(
                index=d["index"], kind=kind, actor=d["actor"], target=d["target"],
                hint_kind=d["hint_kind"], value=d["value"], touched=tuple(d["touched"]),
            )
        return cls(
            index=d["index"], kind=kind, actor=d["actor"], slot=d["slot"],
            card=card_from_code(d["card"]) if d.get("card") else None,
            success=d.get("success"), deck_after=d.get("deck_after"),
            drawn=card_from_code(d["drawn"]) if d.get("drawn") else None,
        )


def card_from_code(code: str) -> Card:
    colors = {v: k for k, v in COLOR_CODES.items()}
    return Card(colors[code[0]], int(code[1:]))


@dataclass(frozen=True)
class GameOutcome:
    score: int
    survival_turns: int
    termination: str  # "third_bomb" | "deck_exhausted" | "perfect"


@dataclass(frozen=True)
class GameState:
    """Complete Hanabi position, including per-slot public hint marks.

    ``turn`` counts actions taken; the acting player is ``turn % players``.
    ``final_actions_left`` starts its countdown when the deck empties (each
    player then gets one last turn, the standard end rule).
    """

    ruleset: Ruleset
    players: int
    deck: tuple[Card, ...]
    hands: tuple[tuple[Card, ...], ...]
    knowledge: tuple[tuple[SlotMarks, ...], ...]
    stacks: tuple[int, ...]  # aligned with ruleset.suits
    hints: int
    bombs: int
    turn: int
    discards: tuple[Card, ...] = ()
    history: tuple[Event, ...] = ()
    final_actions_left: int | None = None

    @property
    def current_player(self) -> int:
        return self.turn % self.players

    def stack_height(self, color: str) -> int:
        return self.stacks[self.ruleset.suits.index(color)]

    @property
    def score(self) -> int:
        return sum(self.stacks)

    @property
    def termination(self) -> str | None:
        if self.bombs >= self.ruleset.bomb_fuse:
            return "third_bomb"
        if self.score == self.ruleset.max_score:
            return "perfect"
        if self.final_actions_left == 0:
            return "deck_exhausted"
        return None

    @property
    def terminal(self) -> bool:
        return self.termination is not None

    def playable(self, card: Card) -> bool:
        return self.stack_height(card.color) + 1 == card.rank

    def is_critical(self, card: Card) -> bool:
        """Still needed and down to its last unrevealed copy."""
        if card.rank <= self.stack_height(card.color):
            return False
        return self.discards.count(card) == self.ruleset.copies(card.rank) - 1

    def visible_to(self, player: int) -> Counter:
        """Multiset of cards the player can currently see (not own hand)."""
        seen: Counter = Counter(self.discards)
        for p, hand in enumerate(self.hands):
            if p != player:
                seen.update(hand)
        seen.update(self._stacked_cards())
        return seen

    def revealed(self) -> Counter:
        """Multiset of publicly revealed cards (played or discarded)."""
        seen: Counter = Counter(self.discards)
        seen.update(self._stacked_cards())
        return seen

    def _stacked_cards(self) -> Iterator[Card]:
        for color, top in zip(self.ruleset.suits, self.stacks):
            for rank in range(1, top + 1):
                yield Card(color, rank)


def new_game(players: int, seed: int, ruleset: Ruleset = STANDARD_RULESET) -> GameState:
    """Deal a fresh game from a seeded Fisher-Yates shuffle.

    Cards are dealt round-robin from the front of the shuffled deck,
    starting with player 0.
    """
    if not 2 <= players <= 5:
        raise RulesError(f"players must be in 2..5, got {players}")
    deck = ruleset.full_deck()
    rng = Random(seed)
    for i in range(len(deck) - 1, 0, -1):  # Fisher-Yates, documented order
        j = rng.randrange(i + 1)
        deck[i], deck[j] = deck[j], deck[i]
    return deal(players, deck, ruleset)


def deal(players: int, deck: list[Card], ruleset: Ruleset = STANDARD_RULESET) -> GameState:
    """Deal from an explicit deck order (front of the list is drawn first).

    Scenario constructors use this to pin exact hands; the deck must be a
    permutation of the ruleset's full deck.
    """
    if not 2 <= players <= 5:
        raise RulesError(f"players must be in 2..5, got {players}")
    if Counter(deck) != Counter(ruleset.full_deck()):
        raise RulesError("deck is not a permutation of the full deck")
    size = ruleset.hand_size(players)
    deck = list(deck)
    hands: list[list[Card]] = [[] for _ in range(players)]
    for _ in range(size):
        for p in range(players):
            hands[p].append(deck.pop(0))
    return GameState(
        ruleset=ruleset,
        players=players,
        deck=tuple(deck),
        hands=tuple(tuple(h) for h in hands),
        knowledge=tuple(tuple(() for _ in h) for h in hands),
        stacks=(0,) * len(ruleset.suits),
        hints=ruleset.max_hints,
        bombs=0,
        turn=0,
    )


def legal_actions(state: GameState, player: int | None = None) -> list[Action]:
    """Exhaustive legal moves for the acting player.

    Hints vanish at 0 tokens, discards at 8; hints that would touch no card
    are illegal (standard rule).
    """
    if state.terminal:
        raise RulesError("game is over")
    actor = state.current_player
    if player is not None and player != actor:
        raise RulesError(f"player {player} is not the acting player ({actor})")
    actions = [play(i) for i in range(len(state.hands[actor]))]
    if state.hints < state.ruleset.max_hints:
        actions.extend(discard(i) for i in range(len(state.hands[actor])))
    if state.hints > 0:
        for target in range(state.players):
            if target == actor:
                continue
            hand = state.hands[target]
            for color in state.ruleset.suits:
                if any(c.color == color for c in hand):
                    actions.append(hint(target, color))
            for rank in state.ruleset.ranks:
                if any(c.rank == rank for c in hand):
                    actions.append(hint(target, rank))
    return actions


def apply_action(state: GameState, action: Action) -> tuple[GameState, Event]:
    """Apply a legal action, returning the new state and its public event."""
    if state.terminal:
        raise RulesError("game is over")
    actor = state.current_player
    if action.kind in ("play", "discard"):
        if action.slot is None or not 0 <= action.slot < len(state.hands[actor]):
            raise RulesError(f"no card in slot {action.slot}")
    if action.kind == "play":
        new_state, event = _apply_play(state, actor, action.slot)
    elif action.kind == "discard":
        if state.hints >= state.ruleset.max_hints:
            raise RulesError("cannot discard at full hint tokens")
        new_state, event = _apply_discard(state, actor, action.slot)
    elif action.kind == "hint":
        new_state, event = _apply_hint(state, actor, action)
    else:
        raise RulesError(f"unknown action kind {action.kind!r}")
    return new_state, event


def _advance(state: GameState, **changes) -> GameState:
    countdown = state.final_actions_left
    if countdown is None and not changes.get("deck", state.deck):
        countdown = state.players  # deck just emptied: one last turn each
    elif countdown is not None:
        countdown -= 1
    return replace(state, turn=state.turn + 1, final_actions_left=countdown, **changes)


def _remove_and_draw(
    state: GameState, actor: int, slot: int
) -> tuple[Card, Card | None, tuple[tuple[Card, ...], ...], tuple[tuple[SlotMarks, ...], ...], tuple[Card, ...]]:
    hand = list(state.hands[actor])
    marks = list(state.knowledge[actor])
    card = hand.pop(slot)
    marks.pop(slot)
    deck = state.deck
    drawn = None
    if deck:
        drawn = deck[0]
        deck = deck[1:]
        hand.append(drawn)  # newest card takes the highest slot index
        marks.append(())
    hands = tuple(tuple(h) if p != actor else tuple(hand) for p, h in enumerate(state.hands))
    knowledge = tuple(k if p != actor else tuple(marks) for p, k in enumerate(state.knowledge))
    return card, drawn, hands, knowledge, deck


def _apply_play(state: GameState, actor: int, slot: int) -> tuple[GameState, Event]:
    card, drawn, hands, knowledge, deck = _remove_and_draw(state, actor, slot)
    success = state.playable(card)
    stacks, hints, bombs, discards = state.stacks, state.hints, state.bombs, state.discards
    if success:
        idx = state.ruleset.suits.index(card.color)
        stacks = stacks[:idx] + (card.rank,) + stacks[idx + 1 :]
        if card.rank == state.ruleset.max_rank and hints < state.ruleset.max_hints:
            hints += 1
    else:
        bombs += 1
        discards = discards + (card,)
    event = Event(
        index=len(state.history), kind="play", actor=actor, slot=slot, card=card,
        success=success, drawn=drawn, deck_after=len(deck),
    )
    new_state = _advance(
        state, deck=deck, hands=hands, knowledge=knowledge, stacks=stacks,
        hints=hints, bombs=bombs, discards=discards, history=state.history + (event,),
    )
    return new_state, event


def _apply_discard(state: GameState, actor: int, slot: int) -> tuple[GameState, Event]:
    card, drawn, hands, knowledge, deck = _remove_and_draw(state, actor, slot)
    event = Event(
        index=len(state.history), kind="discard", actor=actor, slot=slot, card=card,
        drawn=drawn, deck_after=len(deck),
    )
    new_state = _advance(
        state, deck=deck, hands=hands, knowledge=knowledge, hints=state.hints + 1,
        discards=state.discards + (card,), history=state.history + (event,),
    )
    return new_state, event


def _apply_hint(state: GameState, actor: int, action: Action) -> tuple[GameState, Event]:
    if state.hints <= 0:
        raise RulesError("no hint tokens left")
    target = action.target
    if target is None or not 0 <= target < state.players or target == actor:
        raise RulesError(f"bad hint target {target}")
    hand = state.hands[target]
    if action.hint_kind == "color":
        touched = tuple(i for i, c in enumerate(hand) if c.color == action.value)
    else:
        touched = tuple(i for i, c in enumerate(hand) if c.rank == action.value)
    if not touched:
        raise RulesError("hint must touch at least one card")
    idx = len(state.history)
    marks = tuple(
        slot_marks + (HintMark(idx, action.hint_kind, action.value, i in touched),)
        for i, slot_marks in enumerate(state.knowledge[target])
    )
    knowledge = tuple(k if p != target else marks for p, k in enumerate(state.knowledge))
    event = Event(
        index=idx, kind="hint", actor=actor, target=target,
        hint_kind=action.hint_kind, value=action.value, touched=touched,
    )
    new_state = _advance(
        state, knowledge=knowledge, hints=state.hints - 1, history=state.history + (event,),
    )
    return new_state, event


def score(state: GameState) -> int:
    return state.score


def survival_turns(history: tuple[Event, ...]) -> int:
    """Actions taken strictly before the third bomb or deck exhaustion.

    The action that plays the third bomb (or whose draw empties the deck) is
    excluded from the count. Games that end on a perfect score count every
    action.
    """
    bombs = 0
    for event in history:
        if event.kind == "play" and event.success is False:
            bombs += 1
            if bombs >= 3:
                return event.index
        if event.kind in ("play", "discard") and event.deck_after == 0:
            return event.index
    return len(history)


def outcome(state: GameState) -> GameOutcome:
    term = state.termination
    if term is None:
        raise RulesError("game is not over")
    return GameOutcome(score=state.score, survival_turns=survival_turns(state.history), termination=term)


def replay(players: int, seed: int, actions: list[Action], ruleset: Ruleset = STANDARD_RULESET) -> GameState:
    """Re-run a (seed, action list) pair; the result is bit-identical."""
    state = new_game(players, seed, ruleset)
    for action in actions:
        state, _ = apply_action(state, action)
    return state


def validate_state(state: GameState) -> None:
    """Check conservation, token bounds and hint-mark truthfulness.

    Raises RulesError on the first violation. Scenario constructors and the
    playout harness run this to certify positions are engine-legal.
    """
    full = Counter(state.ruleset.full_deck())
    held = Counter(state.deck)
    for hand in state.hands:
        held.update(hand)
    held.update(state.discards)
    held.update(state._stacked_cards())
    if held != full:
        raise RulesError("card conservation violated")
    if not 0 <= state.hints <= state.ruleset.max_hints:
        raise RulesError(f"hint tokens out of range: {state.hints}")
    if not 0 <= state.bombs <= state.ruleset.bomb_fuse:
        raise RulesError(f"bombs out of range: {state.bombs}")
    hint_events = {e.index for e in state.history if e.kind == "hint"}
    for player, (hand, marks) in enumerate(zip(state.hands, state.knowledge)):
        if len(hand) != len(marks):
            raise RulesError("knowledge misaligned with hand")
        for card, slot_marks in zip(hand, marks):
            for m in slot_marks:
                if m.event_index not in hint_events:
                    raise RulesError("mark does not trace to a hint event")
                actual = card.color if m.kind == "color" else card.rank
                if m.touched != (actual == m.value):
                    raise RulesError(f"untruthful mark {m} on {card}")


def event_log_lines(history: tuple[Event, ...]) -> list[str]:
    """Line-delimited structured records, one event per line."""
    return [json.dumps(e.to_dict(), separators=(",", ":")) for e in history]


def events_from_log(lines: list[str]) -> tuple[Event, ...]:
    return tuple(Event.from_dict(json.loads(line)) for line in lines)


def describe_marks(marks: SlotMarks) -> str:
    """Human-readable summary of one slot's public hint knowledge."""
    color = known_color(marks)
    rank = known_rank(marks)
    neg_colors = sorted({m.value for m in marks if m.kind == "color" and not m.touched})
    neg_ranks = sorted({m.value for m in marks if m.kind == "rank" and not m.touched})
    parts = []
    if color:
        parts.append(str(color))
    if rank:
        parts.append(f"rank {rank}")
    if not parts:
        parts.append("no positive hints")
    if neg_colors:
        parts.append("not " + "/".join(str(c) for c in neg_colors))
    if neg_ranks:
        parts.append("not rank " + "/".join(str(r) for r in neg_ranks))
    return ", ".join(parts)


def describe_event(event: Event, players: int) -> str:
    name = PLAYER_NAMES[event.actor]
    if event.kind == "hint":
        target = PLAYER_NAMES[event.target]
        slots = ", ".join(str(i + 1) for i in event.touched)
        return f"{name} hinted {event.value} to {target} (touching card {slots})"
    drew = f", drew a card" if event.drawn is not None else ""
    if event.kind == "play":
        verdict = "played" if event.success else "misplayed (bomb)"
        return f"{name} {verdict} {event.card.code} from slot {event.slot + 1}{drew}"
    return f"{name} discarded {event.card.code} from slot {event.slot + 1}{drew}"


def render_state(state: GameState, perspective: int) -> str:
    """Canonical text rendering of a position for prompts.

    Field order is stable; the perspective player's own card identities are
    never printed, only their public hint marks.
    """
    lines = [
        f"Players: {', '.join(PLAYER_NAMES[p] for p in range(state.players))}"
        f" (you are {PLAYER_NAMES[perspective]})",
        "Stacks: " + ", ".join(
            f"{color} {top}" for color, top in zip(state.ruleset.suits, state.stacks)
        ),
        f"Hint tokens: {state.hints}/{state.ruleset.max_hints}"
        f" | Bombs: {state.bombs}/{state.ruleset.bomb_fuse}"
        f" | Deck: {len(state.deck)} cards left",
    ]
    if state.discards:
        lines.append("Discards: " + ", ".join(c.code for c in sorted(state.discards)))
    else:
        lines.append("Discards: none")
    for p in range(state.players):
        name = PLAYER_NAMES[p]
        if p == perspective:
            lines.append(f"Your hand ({len(state.hands[p])} cards, identities hidden):")
            for i, marks in enumerate(state.knowledge[p]):
                lines.append(f"  card {i + 1}: {describe_marks(marks)}")
        else:
            cards = ", ".join(
                f"card {i + 1}={c.code}" for i, c in enumerate(state.hands[p])
            )
            lines.append(f"{name}'s hand: {cards}")
    return "\n".join(lines)
