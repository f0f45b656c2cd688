"""Reply parsing and the three-vote ranking step."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import EmptyResponse, MismatchedIds
from .base import Backend, ChatMessage, ModelRoleConfig
from .prompts import build_rank_prompt

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_ARRAY = re.compile(r"\[[^\[\]]*\]")

_REASK = (
    "That reply was not a valid ranking. Reply with only a JSON array "
    "containing every candidate id exactly once, best match first."
)


def extract_code(response: str) -> str:
    """First fenced block if any, else the whole reply, trimmed."""
    if response is None or not response.strip():
        raise EmptyResponse("model reply contains no code")
    m = _FENCE.search(response)
    if m:
        body = m.group(1).strip("\n")
        if not body.strip():
            raise EmptyResponse("fenced code block is empty")
        return body
    return response.strip()


@dataclass(frozen=True)
class Ranking:
    """Candidate ids, best first.  degraded marks the fallback order."""

    order: tuple[int, ...]
    degraded: bool = False
    retries: int = 0

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if len(set(self.order)) != len(self.order):
            raise ValueError("a ranking must not repeat ids")


def _parse_order(text: str, ids: list[int]):
    """First JSON array in the text that is a permutation of ids, or None."""
    for m in _ARRAY.finditer(text or ""):
        try:
            got = json.loads(m.group(0))
        except json.JSONDecodeError:
            continue
        if (
            isinstance(got, list)
            and all(isinstance(v, int) and not isinstance(v, bool) for v in got)
            and sorted(got) == sorted(ids)
        ):
            return tuple(got)
    return None


def rank_once(user_prompt: str, descriptions: list[tuple[int, str]],
              backend: Backend, cfg: ModelRoleConfig) -> Ranking:
    """One ranking call with a single repair round.

    A malformed or non-permutation reply gets exactly one corrective
    re-ask; if that fails too, the input order comes back flagged
    degraded.  Transport errors propagate.
    """
    if len(descriptions) < 2:
        raise ValueError("ranking needs at least two candidates")
    ids = [i for i, _ in descriptions]
    messages = build_rank_prompt(user_prompt, descriptions)
    reply = backend.complete(messages, cfg)
    order = _parse_order(reply, ids)
    if order is not None:
        return Ranking(order)
    messages = messages + [
        ChatMessage("assistant", reply if reply and reply.strip() else "(empty)"),
        ChatMessage("user", _REASK),
    ]
    reply = backend.complete(messages, cfg)
    order = _parse_order(reply, ids)
    if order is not None:
        return Ranking(order, retries=1)
    return Ranking(tuple(ids), degraded=True, retries=1)


def average_rankings(rankings: list[Ranking]) -> dict[int, float]:
    """Mean 1-based rank per id over exactly three rankings."""
    if len(rankings) != 3:
        raise ValueError("exactly three rankings are averaged")
    base = set(rankings[0].order)
    totals = {i: 0.0 for i in rankings[0].order}
    for r in rankings:
        if set(r.order) != base:
            raise MismatchedIds("rankings cover different id sets")
        for pos, ident in enumerate(r.order, start=1):
            totals[ident] += pos
    return {i: totals[i] / 3.0 for i in totals}
