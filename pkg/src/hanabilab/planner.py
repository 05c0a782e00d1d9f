"""Forward-simulating shortlist planner with finesse detection.

Actions are scored by a 1-ply expected value under the acting player's
belief distributions: plays weigh success against bombs, discards carry a
criticality penalty, and hints earn an information-gain proxy (how much the
partner's playable-card picture sharpens) plus a save-urgency term when they
pull a critical card off the chop. While a finesse pattern is active every
non-play action receives a deferral bonus, which is what makes "wait" the
top-ranked choice in deferred-play positions.

Score magnitudes are free parameters; the planner's contract is the rank
order it induces on the diagnostic scenarios, not the numbers themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .beliefs import BeliefGraph, CardBelief, FinessePattern, find_finesse_pattern
from .engine import (
    Action,
    Card,
    GameState,
    HintMark,
    PLAYER_NAMES,
    RulesError,
    legal_actions,
)

__all__ = [
    "FinessePattern",
    "REWARDS",
    "ScoredAction",
    "Shortlist",
    "ShortlistVariant",
    "detect_finesse",
    "rank_entries",
    "render_shortlist",
    "score_action",
    "shortlist",
]

REWARDS = {
    "play_success": 1.0,
    "play_bomb": -2.0,
    "third_bomb_extra": -3.0,
    "discard_base": 0.1,
    "critical_discard": -1.0,
    "finesse_deferral_bonus": 0.5,
    "confident_play_weight": 1.0,
    "entropy_weight": 0.01,
    "save_weight": 2.0,
}


@dataclass(frozen=True)
class ScoredAction:
    action: Action
    value: float
    rationale: str

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite action value {self.value}")


class ShortlistVariant(Enum):
    V0 = "v0"  # generic: ranked options with brief score labels
    V1 = "v1"  # differentiated: widened displayed score spread
    V2 = "v2"  # show rejected: the PLAY option is labeled not recommended
    V3 = "v3"  # rich reasoning: mechanistic finesse explanation

    @classmethod
    def from_str(cls, s: str) -> "ShortlistVariant":
        try:
            return cls(s.strip().lower())
        except ValueError:
            raise ValueError(f"unknown shortlist variant {s!r}") from None


@dataclass(frozen=True)
class Shortlist:
    """Ranked candidate actions (k=3), strictly ordered after tie-break."""

    entries: tuple[ScoredAction, ...]
    finesse: FinessePattern | None
    acting_player: int

    @property
    def top(self) -> ScoredAction:
        return self.entries[0]

    def label(self, i: int) -> str:
        """Option label: the top non-play entry reads WAIT while a finesse
        pattern is active (Hanabi has no pass move, so waiting is realized
        as the safest concrete non-play action)."""
        entry = self.entries[i]
        if self.finesse is not None and i == 0 and entry.action.kind != "play":
            return "WAIT"
        return {"play": "PLAY", "discard": "DISCARD", "hint": "HINT"}[entry.action.kind]

    def wait_action(self) -> Action:
        """The concrete action a WAIT reply maps to."""
        for entry in self.entries:
            if entry.action.kind != "play":
                return entry.action
        return self.entries[0].action

    def actions(self) -> list[Action]:
        return [e.action for e in self.entries]


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def detect_finesse(state: GameState, beliefs: BeliefGraph) -> FinessePattern | None:
    """Deferred-play detection from the acting player's viewpoint.

    Runs on the graph's public marks and the hinter's visible hand, so it
    works at any graph depth and fires regardless of whether the graph was
    built with L2 edges.
    """
    return find_finesse_pattern(
        beliefs.own_marks, beliefs.stacks, beliefs.visible_hands,
        beliefs.hint_log, beliefs.ruleset, beliefs.perspective,
    )


def _l1_for(beliefs: BeliefGraph, target: int) -> tuple[CardBelief, ...]:
    if target in beliefs.l1:
        return beliefs.l1[target]
    return tuple(
        CardBelief.from_counts(beliefs.ruleset, beliefs.public_pool, marks)
        for marks in beliefs.marks[target]
    )


def _chop(marks_per_slot) -> int | None:
    """Oldest slot with no positive marks: the default discard by convention."""
    for slot, marks in enumerate(marks_per_slot):
        if not any(m.touched for m in marks):
            return slot
    return None


def _hint_value(state: GameState, beliefs: BeliefGraph, action: Action) -> tuple[float, str]:
    target = action.target
    hand = beliefs.visible_hands[target]
    marks = beliefs.marks[target]
    if action.hint_kind == "color":
        touched = {i for i, c in enumerate(hand) if c.color == action.value}
    else:
        touched = {i for i, c in enumerate(hand) if c.rank == action.value}
    new_marks = tuple(
        slot_marks + (HintMark(beliefs.next_event_index, action.hint_kind, action.value, i in touched),)
        for i, slot_marks in enumerate(marks)
    )
    pool = beliefs.public_pool
    before = [b.p_playable(beliefs.stacks) for b in _l1_for(beliefs, target)]
    after = [
        CardBelief.from_counts(beliefs.ruleset, pool, m).p_playable(beliefs.stacks)
        for m in new_marks
    ]
    # confident-play credit only for slots the hint identifies positively;
    # diffuse rises from negative information are not an actionable signal
    touched_after = max((after[i] for i in touched), default=0.0)
    conf_gain = max(0.0, touched_after - max(before))
    ent_gain = sum(_binary_entropy(b) - _binary_entropy(a) for b, a in zip(before, after))

    def chop_risk(per_slot_marks) -> float:
        chop = _chop(per_slot_marks)
        if chop is None:
            return 0.0
        return 1.0 if state.is_critical(hand[chop]) else 0.0

    save_gain = max(0.0, chop_risk(marks) - chop_risk(new_marks))
    value = (
        REWARDS["confident_play_weight"] * conf_gain
        + REWARDS["entropy_weight"] * ent_gain
        + REWARDS["save_weight"] * save_gain
    )
    tname = PLAYER_NAMES[target]
    if save_gain > 0:
        why = f"protects {tname}'s critical chop card from being discarded"
    elif conf_gain > 0:
        why = f"raises {tname}'s best play confidence by {conf_gain:.0%}"
    else:
        why = f"sharpens {tname}'s picture of their own hand"
    return value, why


def score_action(state: GameState, beliefs: BeliefGraph, action: Action) -> float:
    value, _ = _score_with_rationale(state, beliefs, action, detect_finesse(state, beliefs))
    return value


def _score_with_rationale(
    state: GameState, beliefs: BeliefGraph, action: Action, pattern: FinessePattern | None
) -> tuple[float, str]:
    if action.kind == "play":
        p = beliefs.own[action.slot].p_playable(beliefs.stacks)
        value = p * REWARDS["play_success"] + (1 - p) * REWARDS["play_bomb"]
        if state.bombs == state.ruleset.bomb_fuse - 1:
            value += (1 - p) * REWARDS["third_bomb_extra"]
        why = f"belief gives a {p:.0%} success chance"
        if pattern is not None and action.slot == pattern.deferred_slot:
            why += "; the deferred finesse card must wait"
        return value, why
    if action.kind == "discard":
        belief = beliefs.own[action.slot]
        p_crit = sum(p for c, p in belief.support() if state.is_critical(c))
        value = REWARDS["discard_base"] + REWARDS["critical_discard"] * p_crit
        why = f"restores a hint token; {p_crit:.0%} risk of losing a critical card"
    else:
        value, why = _hint_value(state, beliefs, action)
    if pattern is not None:
        value += REWARDS["finesse_deferral_bonus"]
        why += "; holding back while the finesse resolves"
    return value, why


def _tie_key(action: Action):
    """Total order for exact score ties: Hint > Discard > Play, then lowest
    slot index (or target/value order for hints)."""
    kind_rank = {"hint": 0, "discard": 1, "play": 2}[action.kind]
    if action.kind == "hint":
        value_rank = (0, action.value) if action.hint_kind == "color" else (1, action.value)
        return (kind_rank, action.target, value_rank)
    return (kind_rank, action.slot)


def rank_entries(entries: list[ScoredAction]) -> list[ScoredAction]:
    """Descending by value with the documented tie-break; rank order is
    invariant under positive affine transforms of the scores."""
    return sorted(entries, key=lambda e: (-e.value, _tie_key(e.action)))


def shortlist(state: GameState, beliefs: BeliefGraph, k: int = 3) -> Shortlist:
    """Rank the best action per class (hint / discard / play).

    While a finesse is active the play-class candidate is the deferred slot
    itself: the shortlist must surface the tempting play with its negative
    score rather than hide it. Missing classes are padded with the
    next-best remaining legal actions.
    """
    if beliefs.perspective != state.current_player:
        raise RulesError("shortlist requires the acting player's beliefs")
    legal = legal_actions(state)
    pattern = detect_finesse(state, beliefs)
    scored = [
        ScoredAction(a, *_score_with_rationale(state, beliefs, a, pattern)) for a in legal
    ]
    ranked = rank_entries(scored)
    by_class: dict[str, ScoredAction] = {}
    for entry in ranked:
        by_class.setdefault(entry.action.kind, entry)
    if pattern is not None:
        deferred = next(
            (e for e in ranked if e.action.kind == "play" and e.action.slot == pattern.deferred_slot),
            None,
        )
        if deferred is not None:
            by_class["play"] = deferred
    picks = list(by_class.values())
    for entry in ranked:
        if len(picks) >= k:
            break
        if entry not in picks:
            picks.append(entry)
    return Shortlist(entries=tuple(rank_entries(picks)[:k]), finesse=pattern, acting_player=state.current_player)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _bracket(sl: Shortlist, values: list[float]) -> str:
    inner = ", ".join(
        f"{i + 1}. {sl.label(i)} {v:+.2f}" for i, v in enumerate(values)
    )
    return f"[{inner}]"


def _option_lines(sl: Shortlist) -> list[str]:
    lines = []
    for i, entry in enumerate(sl.entries):
        desc = entry.action.describe()
        label = sl.label(i)
        if label == "WAIT":
            desc = f"hold back; safest concrete move is to {desc}"
        lines.append(f"  option {i + 1}: {label}: {desc}.")
    return lines


def _finesse_reasoning(sl: Shortlist) -> list[str]:
    pat = sl.finesse
    hname = PLAYER_NAMES[pat.hinter]
    bridge = pat.bridge_card
    slot_no = pat.deferred_slot + 1
    return [
        "Reasoning: under the deferred-play convention, a hint that marks a card"
        f" two ranks above its stack is a promise, not an instruction. {hname}'s"
        f" hint signals that {hname} holds {bridge.code} and will play it first,"
        f" so the hint is about your future turn, not this one. Your card {slot_no}"
        f" only becomes playable after {bridge.code} lands; playing it now would"
        " misfire and cost a bomb. The right response is to take a safe action"
        f" this turn and play card {slot_no} once {hname} has acted.",
    ]


def render_shortlist(sl: Shortlist, variant: ShortlistVariant = ShortlistVariant.V0) -> str:
    """Render the ranked options in one of the four prompt variants.

    V0 is the bracket-plus-options baseline; V1 widens the displayed score
    spread (3x the top margin) without changing order; V2 appends an explicit
    rejected label to the play option; V3 swaps score labels for a
    multi-sentence mechanistic explanation of the deferral.
    """
    # widen from the rounded display values so the printed V1 margins are
    # exact multiples of the printed V0 margins
    values = [round(e.value, 2) for e in sl.entries]
    header = f"PLANNER SHORTLIST ({variant.value.upper()}):"
    if variant == ShortlistVariant.V1 and len(values) > 1:
        top = values[0]
        values = [top if i == 0 else top + 3.0 * (v - top) for i, v in enumerate(values)]
    if variant == ShortlistVariant.V3:
        lines = [header]
        lines.extend(
            f"{i + 1}. {sl.label(i)}: {e.action.describe()}" for i, e in enumerate(sl.entries)
        )
        if sl.finesse is not None:
            lines.extend(_finesse_reasoning(sl))
        else:
            lines.append(f"Reasoning: {sl.top.rationale}. The alternatives score lower"
                         " on the same 1-ply simulation and are kept for comparison.")
        return "\n".join(lines)
    lines = [header, _bracket(sl, values)]
    lines.extend(_option_lines(sl))
    if variant == ShortlistVariant.V2:
        for i, entry in enumerate(sl.entries):
            if entry.action.kind == "play":
                lines.append(f"  PLAY: not recommended ({entry.value:+.2f}).")
                break
    return "\n".join(lines)
