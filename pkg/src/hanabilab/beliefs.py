"""Multi-depth belief graphs: build, update, ablate and render.

A graph is a per-perspective value derived from the public event stream plus
what that player can see. Depth L0 covers the player's own-card
distributions, L0L1 adds a model of each partner's own-hand beliefs (from
public information only, never their actual cards), and L0L1L2 adds the
meta-edge: the partner's model of what the perspective player knows.

The graph carries its own sufficient statistics (card pools and hint marks),
so ``update_on_event`` advances it incrementally without touching the game
state; rebuilding from scratch with ``build_graph`` must give the same
distributions, and the test suite enforces that equivalence exhaustively on
a reduced deck.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .engine import (
    Card,
    Event,
    GameState,
    HintMark,
    PLAYER_NAMES,
    Ruleset,
    SlotMarks,
    describe_marks,
    excluded_by_marks,
    known_color,
    known_rank,
)

RENDER_FORMAT_VERSION = 1

SUM_TOLERANCE = 1e-9


class BeliefError(Exception):
    pass


class BeliefDepth(Enum):
    """Graph depth: own beliefs, plus 1st-order edges, plus 2nd-order meta-edges."""

    L0 = 1
    L0L1 = 2
    L0L1L2 = 3

    @classmethod
    def from_str(cls, s: str) -> "BeliefDepth":
        key = s.strip().upper().replace("+", "")
        try:
            return cls[key]
        except KeyError:
            raise BeliefError(f"unknown belief depth {s!r}") from None

    def __ge__(self, other: "BeliefDepth") -> bool:
        return self.value >= other.value


class AblationCondition(Enum):
    FULL_GRAPH = "full_graph"
    BELIEF_REMOVED = "belief_removed"
    GRAPH_FROZEN = "graph_frozen"
    BELIEF_CORRUPTED = "belief_corrupted"
    MISLEADING = "misleading"

    @classmethod
    def from_str(cls, s: str) -> "AblationCondition":
        key = s.strip().lower()
        aliases = {"full": "full_graph", "removed": "belief_removed",
                   "frozen": "graph_frozen", "corrupted": "belief_corrupted"}
        key = aliases.get(key, key)
        for cond in cls:
            if cond.value == key:
                return cond
        raise BeliefError(f"unknown ablation condition {s!r}")


ABLATIONS = tuple(AblationCondition)


@dataclass(frozen=True)
class FinessePattern:
    """A deferred-play signal: the hint marks a card two ranks above its
    stack while the hinter visibly holds the bridge card one rank above."""

    hinter: int
    holder: int
    bridge_card: Card
    deferred_slot: int


class CardBelief:
    """Probability distribution over the 25 card identities for one slot."""

    def __init__(self, ruleset: Ruleset, probs: np.ndarray):
        self.ruleset = ruleset
        self.probs = probs

    @classmethod
    def from_counts(cls, ruleset: Ruleset, pool: Counter, marks: SlotMarks) -> "CardBelief":
        """Frequency distribution over unseen copies, conditioned on marks."""
        probs = np.zeros((len(ruleset.suits), len(ruleset.ranks)))
        for si, color in enumerate(ruleset.suits):
            for ri, rank in enumerate(ruleset.ranks):
                card = Card(color, rank)
                n = pool.get(card, 0)
                if n > 0 and not excluded_by_marks(marks, card):
                    probs[si, ri] = n
        total = probs.sum()
        if total <= 0:
            raise BeliefError("no identity is consistent with this slot's marks")
        return cls(ruleset, probs / total)

    def prob(self, card: Card) -> float:
        si = self.ruleset.suits.index(card.color)
        return float(self.probs[si, card.rank - 1])

    def support(self) -> list[tuple[Card, float]]:
        """Nonzero identities, highest probability first, canonical tie order."""
        items = [
            (Card(color, rank), float(self.probs[si, ri]))
            for si, color in enumerate(self.ruleset.suits)
            for ri, rank in enumerate(self.ruleset.ranks)
            if self.probs[si, ri] > 0
        ]
        return sorted(items, key=lambda t: (-t[1], self.ruleset.suits.index(t[0].color), t[0].rank))

    def determined(self) -> Card | None:
        sup = self.support()
        if len(sup) == 1:
            return sup[0][0]
        return None

    def p_playable(self, stacks: tuple[int, ...]) -> float:
        p = 0.0
        for si in range(len(self.ruleset.suits)):
            ri = stacks[si]  # next needed rank has index == current height
            if ri < len(self.ruleset.ranks):
                p += float(self.probs[si, ri])
        return p

    def allclose(self, other: "CardBelief", atol: float = 1e-12) -> bool:
        return self.probs.shape == other.probs.shape and bool(
            np.allclose(self.probs, other.probs, atol=atol)
        )

    def __repr__(self) -> str:
        top = ", ".join(f"{c.code}:{p:.2f}" for c, p in self.support()[:4])
        return f"CardBelief({top}, ...)"


@dataclass(frozen=True)
class BeliefGraph:
    """Belief distributions for one perspective at one depth, plus the
    sufficient statistics needed to update them event by event.

    ``unseen`` is what the perspective cannot see (deck plus own hand);
    ``public_pool`` excludes only publicly revealed cards and backs the L1/L2
    edges, which by construction never condition on anyone's actual hand.
    """

    perspective: int
    depth: BeliefDepth
    ruleset: Ruleset
    players: int
    own: tuple[CardBelief, ...]
    l1: dict[int, tuple[CardBelief, ...]]
    l2: dict[int, tuple[CardBelief, ...]]
    finesse: FinessePattern | None
    finesse_flag: bool
    unseen: Counter
    public_pool: Counter
    marks: tuple[tuple[SlotMarks, ...], ...]
    visible_hands: dict[int, tuple[Card, ...]]
    stacks: tuple[int, ...]
    hint_log: tuple[tuple[int, int, int], ...]  # (event index, actor, target)
    next_event_index: int
    corrupt_focal_slot: int | None = None

    @property
    def own_marks(self) -> tuple[SlotMarks, ...]:
        return self.marks[self.perspective]

    def focal_slot(self) -> int | None:
        """The own slot touched by the most recent hint, if any."""
        best_slot, best_idx = None, -1
        for slot, slot_marks in enumerate(self.own_marks):
            for m in slot_marks:
                if m.touched and m.event_index > best_idx:
                    best_slot, best_idx = slot, m.event_index
        return best_slot


def _hinter_of(hint_log, event_index: int) -> int | None:
    for idx, actor, _target in hint_log:
        if idx == event_index:
            return actor
    return None


def find_finesse_pattern(
    own_marks: tuple[SlotMarks, ...],
    stacks: tuple[int, ...],
    visible_hands: dict[int, tuple[Card, ...]],
    hint_log,
    ruleset: Ruleset,
    perspective: int,
) -> FinessePattern | None:
    """Detection core shared by the planner and the graph builder.

    Fires iff some own slot's marks pin an identity exactly two ranks above
    its stack and the player who gave the most recent hint on that slot
    visibly holds the bridge card. Positions without the bridge card (the
    anti-finesse) return None.
    """
    best: tuple[int, FinessePattern] | None = None
    for slot, slot_marks in enumerate(own_marks):
        color, rank = known_color(slot_marks), known_rank(slot_marks)
        if color is None or rank is None:
            continue
        top = stacks[ruleset.suits.index(color)]
        if rank != top + 2:
            continue
        touched = [m.event_index for m in slot_marks if m.touched]
        if not touched:
            continue
        last_idx = max(touched)
        hinter = _hinter_of(hint_log, last_idx)
        if hinter is None or hinter == perspective:
            continue
        bridge = Card(color, top + 1)
        if bridge in visible_hands.get(hinter, ()):
            pattern = FinessePattern(hinter=hinter, holder=perspective, bridge_card=bridge, deferred_slot=slot)
            if best is None or last_idx > best[0]:
                best = (last_idx, pattern)
    return best[1] if best else None


def _derive(ruleset: Ruleset, pool: Counter, marks_per_slot: tuple[SlotMarks, ...]) -> tuple[CardBelief, ...]:
    return tuple(CardBelief.from_counts(ruleset, pool, m) for m in marks_per_slot)


def _last_hinter_of(hint_log, perspective: int) -> int | None:
    for idx, actor, target in reversed(hint_log):
        if target == perspective:
            return actor
    return None


def _assemble(
    *,
    perspective: int,
    depth: BeliefDepth,
    ruleset: Ruleset,
    players: int,
    unseen: Counter,
    public_pool: Counter,
    marks,
    visible_hands,
    stacks,
    hint_log,
    next_event_index: int,
    corrupt_focal_slot: int | None = None,
) -> BeliefGraph:
    own = _derive(ruleset, unseen, marks[perspective])
    l1: dict[int, tuple[CardBelief, ...]] = {}
    l2: dict[int, tuple[CardBelief, ...]] = {}
    if depth >= BeliefDepth.L0L1:
        for p in range(players):
            if p != perspective:
                l1[p] = _derive(ruleset, public_pool, marks[p])
    finesse = None
    if depth == BeliefDepth.L0L1L2:
        hinter = _last_hinter_of(hint_log, perspective)
        if hinter is not None:
            l2[hinter] = _derive(ruleset, public_pool, marks[perspective])
        finesse = find_finesse_pattern(marks[perspective], stacks, visible_hands, hint_log, ruleset, perspective)
    return BeliefGraph(
        perspective=perspective,
        depth=depth,
        ruleset=ruleset,
        players=players,
        own=own,
        l1=l1,
        l2=l2,
        finesse=finesse,
        finesse_flag=finesse is not None,
        unseen=unseen,
        public_pool=public_pool,
        marks=marks,
        visible_hands=visible_hands,
        stacks=stacks,
        hint_log=hint_log,
        next_event_index=next_event_index,
        corrupt_focal_slot=corrupt_focal_slot,
    )


def build_graph(state: GameState, perspective: int, depth: BeliefDepth = BeliefDepth.L0L1L2) -> BeliefGraph:
    """Build the belief graph for one player from the current position."""
    if not 0 <= perspective < state.players:
        raise BeliefError(f"no player {perspective}")
    ruleset = state.ruleset
    full = Counter(ruleset.full_deck())
    unseen = full - state.visible_to(perspective)
    public_pool = full - state.revealed()
    visible = {p: state.hands[p] for p in range(state.players) if p != perspective}
    hint_log = tuple(
        (e.index, e.actor, e.target) for e in state.history if e.kind == "hint"
    )
    return _assemble(
        perspective=perspective,
        depth=depth,
        ruleset=ruleset,
        players=state.players,
        unseen=unseen,
        public_pool=public_pool,
        marks=state.knowledge,
        visible_hands=visible,
        stacks=state.stacks,
        hint_log=hint_log,
        next_event_index=len(state.history),
    )


def update_on_event(graph: BeliefGraph, event: Event) -> BeliefGraph:
    """Advance the graph by one public event, re-conditioning all depths.

    Events must arrive in order; revealed cards leave every pool and drawn
    cards leave the perspective's unseen pool when the drawer is visible.
    """
    if event.index != graph.next_event_index:
        raise BeliefError(
            f"out-of-order event: expected index {graph.next_event_index}, got {event.index}"
        )
    marks = [list(per_player) for per_player in graph.marks]
    visible = dict(graph.visible_hands)
    stacks = graph.stacks
    unseen = graph.unseen
    public_pool = graph.public_pool
    hint_log = graph.hint_log

    if event.kind == "hint":
        hint_log = hint_log + ((event.index, event.actor, event.target),)
        marks[event.target] = [
            slot_marks + (HintMark(event.index, event.hint_kind, event.value, i in event.touched),)
            for i, slot_marks in enumerate(marks[event.target])
        ]
    else:
        public_pool = public_pool - Counter([event.card])
        if event.actor == graph.perspective:
            unseen = unseen - Counter([event.card])
        else:
            if event.drawn is not None:
                unseen = unseen - Counter([event.drawn])
            hand = list(visible[event.actor])
            hand.pop(event.slot)
            if event.drawn is not None:
                hand.append(event.drawn)
            visible[event.actor] = tuple(hand)
        per_actor = marks[event.actor]
        per_actor.pop(event.slot)
        # drawn's presence is public (everyone sees a card being drawn); only
        # its identity is hidden from the drawer, and pools above already
        # ignore it for the perspective's own draws.
        if event.drawn is not None:
            per_actor.append(())
        if event.kind == "play" and event.success:
            idx = graph.ruleset.suits.index(event.card.color)
            stacks = stacks[:idx] + (event.card.rank,) + stacks[idx + 1 :]

    return _assemble(
        perspective=graph.perspective,
        depth=graph.depth,
        ruleset=graph.ruleset,
        players=graph.players,
        unseen=unseen,
        public_pool=public_pool,
        marks=tuple(tuple(per_player) for per_player in marks),
        visible_hands=visible,
        stacks=stacks,
        hint_log=hint_log,
        next_event_index=event.index + 1,
        corrupt_focal_slot=graph.corrupt_focal_slot,
    )


def apply_ablation(
    graph: BeliefGraph | None,
    cond: AblationCondition,
    history: tuple[Event, ...],
) -> BeliefGraph | None:
    """Transform a graph per the experiment's ablation condition.

    full_graph is the identity; belief_removed drops the graph entirely;
    graph_frozen rebuilds as if the most recent hint never happened;
    belief_corrupted inverts the focal card's rendered playability verdict;
    misleading negates the finesse flag.
    """
    if cond == AblationCondition.FULL_GRAPH or graph is None:
        return graph
    if cond == AblationCondition.BELIEF_REMOVED:
        return None
    if cond == AblationCondition.GRAPH_FROZEN:
        hint_indices = [e.index for e in history if e.kind == "hint"]
        if not hint_indices:
            return graph
        dropped = max(hint_indices)
        marks = tuple(
            tuple(
                tuple(m for m in slot_marks if m.event_index != dropped)
                for slot_marks in per_player
            )
            for per_player in graph.marks
        )
        hint_log = tuple(entry for entry in graph.hint_log if entry[0] != dropped)
        return _assemble(
            perspective=graph.perspective,
            depth=graph.depth,
            ruleset=graph.ruleset,
            players=graph.players,
            unseen=graph.unseen,
            public_pool=graph.public_pool,
            marks=marks,
            visible_hands=graph.visible_hands,
            stacks=graph.stacks,
            hint_log=hint_log,
            next_event_index=graph.next_event_index,
            corrupt_focal_slot=graph.corrupt_focal_slot,
        )
    if cond == AblationCondition.BELIEF_CORRUPTED:
        return replace(graph, corrupt_focal_slot=graph.focal_slot())
    if cond == AblationCondition.MISLEADING:
        return replace(graph, finesse_flag=not graph.finesse_flag)
    raise BeliefError(f"unknown ablation {cond!r}")


def graphs_equivalent(a: BeliefGraph, b: BeliefGraph, atol: float = 1e-12) -> bool:
    """Distribution-level equivalence, used by the incremental-vs-rebuild oracle."""
    if (a.perspective, a.depth, a.players, a.stacks, a.finesse_flag) != (
        b.perspective, b.depth, b.players, b.stacks, b.finesse_flag,
    ):
        return False
    if a.marks != b.marks or a.unseen != b.unseen or a.public_pool != b.public_pool:
        return False
    if len(a.own) != len(b.own) or any(not x.allclose(y, atol) for x, y in zip(a.own, b.own)):
        return False
    if set(a.l1) != set(b.l1) or set(a.l2) != set(b.l2):
        return False
    for key in a.l1:
        if any(not x.allclose(y, atol) for x, y in zip(a.l1[key], b.l1[key])):
            return False
    for key in a.l2:
        if any(not x.allclose(y, atol) for x, y in zip(a.l2[key], b.l2[key])):
            return False
    return True


def check_distributions(graph: BeliefGraph) -> None:
    """Assert every distribution sums to 1 within tolerance and never puts
    mass on identities with no unseen copies."""
    groups: list[tuple[Counter, tuple[CardBelief, ...]]] = [(graph.unseen, graph.own)]
    for beliefs in graph.l1.values():
        groups.append((graph.public_pool, beliefs))
    for beliefs in graph.l2.values():
        groups.append((graph.public_pool, beliefs))
    for pool, beliefs in groups:
        for belief in beliefs:
            total = float(belief.probs.sum())
            if not math.isclose(total, 1.0, abs_tol=SUM_TOLERANCE):
                raise BeliefError(f"distribution sums to {total}")
            for card, p in belief.support():
                if p > 0 and pool.get(card, 0) == 0:
                    raise BeliefError(f"mass {p} on exhausted identity {card}")


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def _verdict_phrase(p: float, desc: str) -> str:
    if p >= 1.0 - 1e-12:
        return f"this {desc} is immediately playable"
    if p <= 1e-12:
        return f"this {desc} is not playable now"
    return f"this {desc} might be playable (chance {p:.0%})"


def _slot_verdict_line(graph: BeliefGraph, slot: int) -> str:
    belief = graph.own[slot]
    color = known_color(graph.own_marks[slot])
    desc = f"{color} card" if color else "card"
    p = belief.p_playable(graph.stacks)
    if graph.corrupt_focal_slot == slot:
        # inverted assertion: claim playable when it is not, and vice versa
        if p >= 1.0 - 1e-12:
            phrase = f"this {desc} is not playable now"
        else:
            phrase = f"this {desc} is immediately playable"
    else:
        phrase = _verdict_phrase(p, desc)
    return f"  card {slot + 1}: {phrase}."


def _candidate_text(belief: CardBelief, limit: int = 6) -> str:
    sup = belief.support()
    shown = ", ".join(f"{c.code} {p:.0%}" for c, p in sup[:limit])
    extra = len(sup) - limit
    if extra > 0:
        shown += f", plus {extra} rarer possibilities"
    return shown


def _depth_title(depth: BeliefDepth) -> str:
    return {BeliefDepth.L0: "L0", BeliefDepth.L0L1: "L0+L1", BeliefDepth.L0L1L2: "L0+L1+L2"}[depth]


def render_text(graph: BeliefGraph | None, depth: BeliefDepth | None = None) -> str:
    """Deterministic prose rendering of the graph for prompts.

    An absent graph renders as the empty string. Sections appear in a fixed
    order: own-slot summaries, playability verdicts, one L1 section per
    partner, the L2 meta-section, then the finesse assessment with explicit
    deferral warnings. ``depth`` can render a deep graph at a shallower
    level; it never adds sections the graph does not hold.
    """
    if graph is None:
        return ""
    depth = depth or graph.depth
    level = BeliefDepth(min(depth.value, graph.depth.value))
    me = PLAYER_NAMES[graph.perspective]
    lines = [
        f"BELIEF GRAPH v{RENDER_FORMAT_VERSION} (perspective: {me}, depth {_depth_title(level)})",
        "",
        f"Own-hand beliefs (L0). These are the card distributions {me} can justify",
        "from hint marks and visible cards; probabilities are over the remaining",
        "unseen copies of each identity.",
    ]
    for slot, belief in enumerate(graph.own):
        marks_desc = describe_marks(graph.own_marks[slot])
        lines.append(f"  card {slot + 1} [{marks_desc}]: {_candidate_text(belief)}")
    lines.append("")
    lines.append("Playability verdicts for your own hand:")
    for slot in range(len(graph.own)):
        lines.append(_slot_verdict_line(graph, slot))

    if level >= BeliefDepth.L0L1 and graph.l1:
        for partner in sorted(graph.l1):
            pname = PLAYER_NAMES[partner]
            lines.append("")
            lines.append(
                f"First-order edge (L1): what {pname} can believe about {pname}'s own hand."
            )
            lines.append(
                "This model uses only public events and the hints "
                f"{pname} received; it never peeks at {pname}'s actual cards."
            )
            for slot, belief in enumerate(graph.l1[partner]):
                marks_desc = describe_marks(graph.marks[partner][slot])
                lines.append(f"  {pname}'s card {slot + 1} [{marks_desc}]: {_candidate_text(belief)}")

    if level == BeliefDepth.L0L1L2:
        lines.append("")
        if graph.l2:
            for hinter in sorted(graph.l2):
                hname = PLAYER_NAMES[hinter]
                lines.append(
                    f"Second-order meta-edge (L2): what {hname} can infer about what"
                    f" {me} knows, using only information public to both of you."
                )
                for slot, belief in enumerate(graph.l2[hinter]):
                    det = belief.determined()
                    if det is not None:
                        summary = f"{hname} knows that you know this is {det.code}"
                    else:
                        summary = f"{hname} models your view as: {_candidate_text(belief, limit=4)}"
                    lines.append(f"  your card {slot + 1}: {summary}")
        else:
            lines.append(
                f"Second-order meta-edge (L2): no partner has hinted {me} yet, so"
                " there is no meta-model to report."
            )

        lines.append("")
        lines.append("Finesse assessment:")
        if graph.finesse_flag:
            pat = graph.finesse
            if pat is not None:
                hname = PLAYER_NAMES[pat.hinter]
                slot_no = pat.deferred_slot + 1
                color = pat.bridge_card.color
                lines.extend([
                    f"  WARNING: an active finesse is indicated. {hname}'s hint marks your"
                    f" card {slot_no} as a {color} card two steps above the {color} stack.",
                    f"  Under the deferred-play convention this signals that {hname} holds"
                    f" {pat.bridge_card.code} and intends to play it first.",
                    f"  Do not play card {slot_no} yet. Playing it before {hname}'s"
                    f" {pat.bridge_card.code} lands would misfire and cost a bomb.",
                    f"  Correct response: wait (take a safe action) until {hname} plays, then"
                    f" card {slot_no} becomes immediately playable.",
                ])
            else:
                lines.append(
                    "  A finesse appears active: treat your most recently hinted card as"
                    " deferred and do not play it this turn."
                )
        else:
            lines.append("  No finesse active. No deferred-play convention applies; read")
            lines.append("  hints at face value.")
    return "\n".join(lines)


def estimated_tokens(text: str) -> int:
    """Crude prompt-size estimate: one token per four characters."""
    return math.ceil(len(text) / 4)
