"""Agent harness: integration architectures, prompts, reply parsing,
scripted oracle agents, and a generic chat-endpoint adapter.

The three architectures differ only in what the prompt exposes and what the
agent is allowed to return: prompt-based agents see the (possibly ablated)
graph text and answer freely; gated agents must pick one of the planner's
numbered options; informed agents see the shortlist but may override it with
any legal action.

Scripted oracles are deterministic stand-ins for the behavioral patterns
observed in real chat models: one that defers to the planner, one that
trusts rendered graph verdicts literally, and one that treats any hint as a
direct play signal while hedging in its wording.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from enum import Enum

from .beliefs import BeliefGraph
from .engine import (
    Action,
    Card,
    GameState,
    PLAYER_NAMES,
    Ruleset,
    SlotMarks,
    describe_marks,
    discard,
    hint,
    known_color,
    known_rank,
    play,
)
from .planner import Shortlist

HEDGING_TERMS = ("might", "may", "possibly", "perhaps", "not sure", "uncertain")

ORACLE_KINDS = ("compliant", "defiant-heuristic", "graph-truster")

CONVENTIONS_V1 = """CONVENTIONS (v1), agreed by all players:
1. Hint focus: a hint is about the single most important card it touches,
   usually the newest. If a hinted card is playable, the hint means play it.
2. Save the fives: a hint that touches a 5 on a partner's chop (their oldest
   unhinted card) is a save, not a play signal. Never discard a hinted 5.
3. Chop discards: when you must discard, discard your oldest unhinted card,
   so partners can protect cards by hinting them.
4. Deferred play: a hint naming a card two ranks above its stack promises
   the bridge card is on its way; hold that card until it becomes playable.
"""

STRATEGY_V1 = """STRATEGY NOTES (v1):
- Early game: hint playable 1s, discard from the chop to bank tokens.
- Mid game: keep two hint tokens in reserve for saves.
- Never play a card with unknown rank unless the belief summary certifies
  it; a bomb costs more than a wasted turn.
"""


class AgentError(Exception):
    pass


class Architecture(Enum):
    PROMPT_BASED = "prompt"
    GATED = "gated"
    INFORMED = "informed"

    @classmethod
    def from_str(cls, s: str) -> "Architecture":
        key = s.strip().lower()
        aliases = {"prompt-based": "prompt", "prompt_based": "prompt", "hybrid": "informed"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise AgentError(f"unknown architecture {s!r}") from None


ARCHITECTURES = tuple(Architecture)


@dataclass(frozen=True)
class Observation:
    """Everything an agent is shown for one decision.

    Rendered text fields never contain the acting player's own card
    identities; the structured fields mirror only public information plus
    the hands the player can legitimately see.
    """

    player: int
    players: int
    architecture: Architecture
    ruleset: Ruleset
    legal: tuple[Action, ...]
    stacks: tuple[int, ...]
    discards: tuple[Card, ...]
    own_marks: tuple[SlotMarks, ...]
    all_marks: tuple[tuple[SlotMarks, ...], ...]
    visible_hands: dict[int, tuple[Card, ...]]
    own_playable_probs: tuple[float, ...]
    state_text: str
    graph_text: str = ""
    shortlist: Shortlist | None = None
    shortlist_text: str = ""
    transcript_text: str = ""
    conventions_text: str = ""
    strategy_text: str = ""
    partner_knowledge_text: str = ""


@dataclass
class AgentReply:
    raw_text: str
    parsed_action: Action | None = None
    hedging_markers: int = 0
    retries: int = 0
    transport_failed: bool = False
    extra: dict = field(default_factory=dict)


def count_hedging(text: str) -> int:
    total = 0
    lowered = text.lower()
    for term in HEDGING_TERMS:
        total += len(re.findall(rf"\b{re.escape(term)}\b", lowered))
    return total


RULES_SUMMARY = (
    "Hanabi rules: 2-5 players build five suit stacks from 1 to 5. You see"
    " everyone's cards except your own. On your turn you either play a card,"
    " discard a card (regains a hint token, only below 8 tokens), or spend a"
    " hint token to tell one partner all of their cards of one color or one"
    " rank. A failed play costs a bomb; the third bomb ends the game. Score"
    " is the sum of stack heights, 25 maximum."
)

ANSWER_INSTRUCTIONS = {
    Architecture.PROMPT_BASED: (
        "State your action as one of: 'play card N', 'discard card N', or"
        " 'hint <color or rank> to <player>'."
    ),
    Architecture.GATED: (
        "Select one of the numbered options above. You must choose from the"
        " shortlist; answer with the option number."
    ),
    Architecture.INFORMED: (
        "The shortlist above is advisory; you may choose any legal action."
        " State your action ('option N', 'play card N', 'discard card N', or"
        " 'hint <color or rank> to <player>')."
    ),
}


def build_prompt(obs: Observation, arch: Architecture | None = None) -> str:
    """Deterministic prompt template for one decision."""
    arch = arch or obs.architecture
    has_shortlist = bool(obs.shortlist_text)
    if has_shortlist != (arch in (Architecture.GATED, Architecture.INFORMED)):
        raise AgentError("shortlist must be present exactly for gated/informed prompts")
    me = PLAYER_NAMES[obs.player]
    parts = [f"You are {me}, playing cooperative Hanabi.", RULES_SUMMARY]
    if obs.conventions_text:
        parts.append(obs.conventions_text.rstrip())
    if obs.strategy_text:
        parts.append(obs.strategy_text.rstrip())
    parts.append("BOARD:\n" + obs.state_text)
    if obs.transcript_text:
        parts.append(obs.transcript_text.rstrip())
    if obs.partner_knowledge_text:
        parts.append(obs.partner_knowledge_text.rstrip())
    if obs.graph_text:
        parts.append(obs.graph_text.rstrip())
    if obs.shortlist_text:
        parts.append(obs.shortlist_text.rstrip())
    parts.append(ANSWER_INSTRUCTIONS[arch])
    return "\n\n".join(parts)


# ---------------------------------------------------------------------------
# Reply parsing
# ---------------------------------------------------------------------------

_NAME_TO_INDEX = {name.lower(): i for i, name in enumerate(PLAYER_NAMES)}
_COLOR_WORDS = {"red", "yellow", "green", "white", "blue"}


def _hint_value_token(token: str) -> str | int | None:
    token = token.lower().rstrip("s")
    if token in _COLOR_WORDS:
        return token
    if token.isdigit() and 1 <= int(token) <= 5:
        return int(token)
    return None


def parse_action(
    reply_text: str,
    legal: list[Action] | tuple[Action, ...],
    arch: Architecture,
    shortlist: Shortlist | None = None,
) -> Action | None:
    """Extract the declared action from a reply via the documented grammar.

    Grammar (all case-insensitive; the match latest in the text wins, so a
    final decision overrides earlier deliberation):
      'option N' / 'choose N' / 'select N'      -> shortlist entry N
      'play card N' / 'play slot N' / 'play N'  -> play slot N
      'discard card N' (same variants)          -> discard slot N
      'hint <value> to <name>' / 'hint <name> <value>'
        / "tell <name> about (the) <value>(s)"  -> hint
      bare 'play'/'discard'                     -> that class's shortlist entry,
                                                   when unambiguous
      'wait'                                    -> the shortlist's wait action,
                                                   else the first legal non-play
    Returns None when nothing parses to a legal action.
    """
    text = reply_text.lower()
    candidates: list[tuple[int, Action]] = []

    if shortlist is not None:
        for m in re.finditer(r"\b(?:option|choose|select)\s*#?\s*(\d)", text):
            idx = int(m.group(1)) - 1
            if 0 <= idx < len(shortlist.entries):
                candidates.append((m.start(), shortlist.entries[idx].action))
        for m in re.finditer(r"^\s*(\d)[.)]\s*$", text, flags=re.M):
            idx = int(m.group(1)) - 1
            if 0 <= idx < len(shortlist.entries):
                candidates.append((m.start(), shortlist.entries[idx].action))

    for verb, maker in (("play", play), ("discard", discard)):
        for m in re.finditer(rf"\b{verb}(?:ing)?\s+(?:card|slot)?\s*#?(\d)\b", text):
            candidates.append((m.start(), maker(int(m.group(1)) - 1)))

    for m in re.finditer(r"\bhint\s+(\w+)\s+to\s+(\w+)", text):
        value = _hint_value_token(m.group(1))
        target = _NAME_TO_INDEX.get(m.group(2))
        if value is not None and target is not None:
            candidates.append((m.start(), hint(target, value)))
    for m in re.finditer(r"\bhint\s+(\w+)(?:'s)?\s+(\w+)\b", text):
        target = _NAME_TO_INDEX.get(m.group(1))
        value = _hint_value_token(m.group(2))
        if value is not None and target is not None:
            candidates.append((m.start(), hint(target, value)))
    for m in re.finditer(r"\btell\s+(\w+)\s+about\s+(?:the\s+)?(\w+?)s?\b", text):
        target = _NAME_TO_INDEX.get(m.group(1))
        value = _hint_value_token(m.group(2))
        if value is not None and target is not None:
            candidates.append((m.start(), hint(target, value)))

    # bare class verbs resolve through the shortlist when unambiguous
    for verb, kind in (("play", "play"), ("discard", "discard")):
        for m in re.finditer(rf"\b{verb}\b(?!\s*(?:card|slot|\d))", text):
            if shortlist is not None:
                of_kind = [e.action for e in shortlist.entries if e.action.kind == kind]
                if len(of_kind) == 1:
                    candidates.append((m.start(), of_kind[0]))

    for m in re.finditer(r"\bwait\b", text):
        if shortlist is not None:
            candidates.append((m.start(), shortlist.wait_action()))
        else:
            non_play = next((a for a in legal if a.kind != "play"), None)
            if non_play is not None:
                candidates.append((m.start(), non_play))

    legal_set = list(legal)
    for _, action in sorted(candidates, key=lambda t: -t[0]):
        if action in legal_set:
            return action
    return None


def nearest_shortlist_action(action: Action, shortlist: Shortlist) -> Action:
    """Map an out-of-shortlist action to the closest entry (same class if
    possible, else the top option)."""
    same = [e.action for e in shortlist.entries if e.action.kind == action.kind]
    if same:
        return same[0]
    return shortlist.top.action


# ---------------------------------------------------------------------------
# Scripted oracle agents
# ---------------------------------------------------------------------------

def _chop(marks: tuple[SlotMarks, ...]) -> int | None:
    for slot, slot_marks in enumerate(marks):
        if not any(m.touched for m in slot_marks):
            return slot
    return None


def _is_critical(obs: Observation, card: Card) -> bool:
    if card.rank <= obs.stacks[obs.ruleset.suits.index(card.color)]:
        return False
    return obs.discards.count(card) == obs.ruleset.copies(card.rank) - 1


def _legal(obs: Observation, action: Action) -> bool:
    return action in obs.legal


def _safe_action_sentence(obs: Observation) -> str:
    chop = _chop(obs.own_marks)
    if chop is not None and _legal(obs, discard(chop)):
        return f"I will discard card {chop + 1}."
    for action in obs.legal:
        if action.kind == "hint":
            return f"I will hint {action.value} to {PLAYER_NAMES[action.target]}."
        if action.kind == "discard":
            return f"I will discard card {action.slot + 1}."
    return "I will play card 1."


def _most_recent_hinted_slot(marks: tuple[SlotMarks, ...]) -> int | None:
    best_slot, best_idx = None, -1
    for slot, slot_marks in enumerate(marks):
        for m in slot_marks:
            if m.touched and m.event_index > best_idx:
                best_slot, best_idx = slot, m.event_index
    return best_slot


def _compliant(obs: Observation) -> str:
    if obs.shortlist is not None and obs.architecture != Architecture.PROMPT_BASED:
        label = obs.shortlist.label(0)
        return (
            "The planner's analysis is sound. "
            f"{label} is the highest-value option. I will choose option 1."
        )
    # prompt-based: reason from public information, independent of graph text
    certain = [i for i, p in enumerate(obs.own_playable_probs) if p >= 1.0 - 1e-12]
    if certain:
        return f"My card {certain[0] + 1} is certainly playable. I will play card {certain[0] + 1}."
    warning = re.search(r"do not play card (\d)", obs.graph_text, flags=re.I)
    if warning:
        return f"The summary warns against card {warning.group(1)}. " + _safe_action_sentence(obs)
    for partner, hand in sorted(obs.visible_hands.items()):
        chop = _chop(obs.all_marks[partner])
        if chop is not None and _is_critical(obs, hand[chop]):
            action = hint(partner, hand[chop].rank)
            if _legal(obs, action):
                return (
                    f"{PLAYER_NAMES[partner]} is about to discard a card we can never"
                    f" recover. I will hint {action.value} to {PLAYER_NAMES[partner]}."
                )
    for partner, hand in sorted(obs.visible_hands.items()):
        for slot, card in enumerate(hand):
            if card.rank != obs.stacks[obs.ruleset.suits.index(card.color)] + 1:
                continue
            marks = obs.all_marks[partner][slot]
            if known_color(marks) and known_rank(marks):
                continue
            value = card.rank if known_color(marks) or not known_rank(marks) else card.color
            action = hint(partner, value)
            if _legal(obs, action):
                return (
                    f"{PLAYER_NAMES[partner]} holds a playable card and does not know"
                    f" it. I will hint {value} to {PLAYER_NAMES[partner]}."
                )
    return "Nothing is certain; banking a token is safest. " + _safe_action_sentence(obs)


def _defiant(obs: Observation) -> str:
    if obs.architecture == Architecture.GATED:
        # constraints are obeyed; only advisory recommendations get overridden
        return "The format requires an option. I will choose option 1."
    hinted = _most_recent_hinted_slot(obs.own_marks)
    if hinted is not None:
        prefix = ""
        if obs.shortlist is not None:
            prefix = (
                f"The planner recommends {obs.shortlist.label(0)}, which might be"
                " appropriate. However, "
            )
        else:
            prefix = "I was hinted, and "
        return (
            prefix
            + f"a hint is a direct play signal. I will play card {hinted + 1}."
        )
    return "No hints to act on; this might be a token turn. " + _safe_action_sentence(obs)


def _graph_truster(obs: Observation) -> str:
    text = obs.graph_text
    playable = re.search(r"card (\d+): this [\w ]*card is immediately playable", text)
    if playable:
        return (
            "According to the belief graph, that card is playable."
            f" I will play card {playable.group(1)}."
        )
    warning = re.search(r"Do not play card (\d+)", text)
    if warning:
        return (
            f"The belief graph warns me to hold card {warning.group(1)}."
            " I will wait. " + _safe_action_sentence(obs)
        )
    hinted = _most_recent_hinted_slot(obs.own_marks)
    if "No finesse active" in text and hinted is not None:
        return (
            "According to the belief graph, no finesse is in play, so my hinted"
            f" card reads at face value. I will play card {hinted + 1}."
        )
    if hinted is not None:
        return f"A hint is a play signal. I will play card {hinted + 1}."
    return "The graph gives me nothing actionable. " + _safe_action_sentence(obs)


_ORACLES = {
    "compliant": _compliant,
    "defiant-heuristic": _defiant,
    "graph-truster": _graph_truster,
}


def scripted_oracle(kind: str):
    """Deterministic agent callable: Observation -> AgentReply."""
    key = kind.strip().lower().replace("_", "-")
    if key not in _ORACLES:
        raise AgentError(f"unknown oracle kind {kind!r} (have {sorted(_ORACLES)})")
    behave = _ORACLES[key]

    def agent(obs: Observation) -> AgentReply:
        text = behave(obs)
        return AgentReply(raw_text=text, hedging_markers=count_hedging(text))

    agent.kind = key  # type: ignore[attr-defined]
    return agent


# ---------------------------------------------------------------------------
# Remote chat endpoint adapter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointConfig:
    """Generic single-turn chat-completion endpoint (system + user in, text out)."""

    name: str
    base_url: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 512
    timeout_s: float = 30.0
    max_retries: int = 2
    backoff_s: float = 0.5
    seed: int | None = None
    api_key_env: str = "HANABILAB_API_KEY"

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        return cls(**d)


SYSTEM_MESSAGE = "You are an expert cooperative Hanabi player. Answer with your chosen action."


def _default_transport(endpoint: EndpointConfig, payload: dict) -> str:
    import os

    import requests

    headers = {"Content-Type": "application/json"}
    key = os.environ.get(endpoint.api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    response = requests.post(
        endpoint.base_url.rstrip("/") + "/chat/completions",
        headers=headers,
        data=json.dumps(payload),
        timeout=endpoint.timeout_s,
    )
    response.raise_for_status()
    return response.json()["choices"][0]["message"]["content"]


def remote_model_decide(endpoint: EndpointConfig, prompt: str, transport=None) -> AgentReply:
    """Query a chat endpoint with bounded retries.

    The raw reply is captured verbatim; transport failures after the retry
    budget mark the reply as transport-failed and are never silently
    re-sampled. ``transport`` is injectable for tests.
    """
    transport = transport or _default_transport
    payload = {
        "model": endpoint.model,
        "temperature": endpoint.temperature,
        "max_tokens": endpoint.max_tokens,
        "messages": [
            {"role": "system", "content": SYSTEM_MESSAGE},
            {"role": "user", "content": prompt},
        ],
    }
    if endpoint.seed is not None:
        payload["seed"] = endpoint.seed
    extra = {"model": endpoint.model, "temperature": endpoint.temperature, "seed": endpoint.seed}
    last_error = None
    for attempt in range(endpoint.max_retries + 1):
        try:
            text = transport(endpoint, payload)
            if not isinstance(text, str) or not text.strip():
                raise AgentError("malformed endpoint reply")
            return AgentReply(
                raw_text=text,
                hedging_markers=count_hedging(text),
                retries=attempt,
                extra=extra,
            )
        except Exception as err:  # noqa: BLE001 - transport errors are data here
            last_error = err
            if attempt < endpoint.max_retries and endpoint.backoff_s > 0:
                time.sleep(endpoint.backoff_s * (2**attempt))
    return AgentReply(
        raw_text=f"<transport failed: {last_error}>",
        retries=endpoint.max_retries,
        transport_failed=True,
        extra=extra,
    )


def endpoint_agent(endpoint: EndpointConfig, transport=None):
    """Agent callable backed by a remote endpoint."""

    def agent(obs: Observation) -> AgentReply:
        return remote_model_decide(endpoint, build_prompt(obs), transport=transport)

    agent.kind = f"endpoint:{endpoint.name}"  # type: ignore[attr-defined]
    return agent


# ---------------------------------------------------------------------------
# Observation assembly
# ---------------------------------------------------------------------------

def partner_knowledge_text(state: GameState, player: int) -> str:
    """Summary of what each partner publicly knows about their own hand."""
    lines = ["PARTNER KNOWLEDGE:"]
    for p in range(state.players):
        if p == player:
            continue
        name = PLAYER_NAMES[p]
        for slot, marks in enumerate(state.knowledge[p]):
            lines.append(f"  {name} card {slot + 1}: {describe_marks(marks)}")
    return "\n".join(lines)


def transcript_text(state: GameState, mode: str) -> str:
    """Raw event-by-event transcript, or the pre-summarized discard table."""
    from .engine import describe_event

    if mode == "raw":
        lines = ["GAME TRANSCRIPT:"]
        lines += [f"  {i + 1}. {describe_event(e, state.players)}" for i, e in enumerate(state.history)]
        return "\n".join(lines)
    if mode == "summary":
        lines = ["DISCARD SUMMARY (aggregated from the transcript):"]
        if state.discards:
            counts: dict[str, int] = {}
            for card in sorted(state.discards):
                counts[card.code] = counts.get(card.code, 0) + 1
            lines += [f"  {code} x{n}" for code, n in sorted(counts.items())]
        else:
            lines.append("  nothing discarded yet")
        return "\n".join(lines)
    raise AgentError(f"unknown transcript mode {mode!r}")


def make_observation(
    state: GameState,
    player: int,
    architecture: Architecture,
    true_graph: BeliefGraph,
    *,
    graph_text: str = "",
    shortlist: Shortlist | None = None,
    shortlist_text: str = "",
    transcript_mode: str | None = None,
    conventions: bool = False,
    strategy: bool = False,
    pk: bool = False,
) -> Observation:
    """Assemble the redacted observation for one decision."""
    from .engine import legal_actions, render_state

    return Observation(
        player=player,
        players=state.players,
        architecture=architecture,
        ruleset=state.ruleset,
        legal=tuple(legal_actions(state, player)),
        stacks=state.stacks,
        discards=state.discards,
        own_marks=state.knowledge[player],
        all_marks=state.knowledge,
        visible_hands={p: state.hands[p] for p in range(state.players) if p != player},
        own_playable_probs=tuple(b.p_playable(true_graph.stacks) for b in true_graph.own),
        state_text=render_state(state, player),
        graph_text=graph_text,
        shortlist=shortlist,
        shortlist_text=shortlist_text,
        transcript_text=transcript_text(state, transcript_mode) if transcript_mode else "",
        conventions_text=CONVENTIONS_V1 if conventions else "",
        strategy_text=STRATEGY_V1 if strategy else "",
        partner_knowledge_text=partner_knowledge_text(state, player) if pk else "",
    )
