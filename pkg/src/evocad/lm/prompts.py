"""Prompt construction for every model call the evolution loop makes.

All builders are pure: the same inputs always produce the same messages.
TEMPLATE_VERSION is bumped whenever any template text changes so snapshot
tests know exactly what they pinned.  The marker constants are stable
phrases the offline backend dispatches on; each appears in exactly one
template.  Every template that carries the user's request puts it on a
single line starting "Request:" so backends can recover it verbatim.
"""

from __future__ import annotations

from ..render import Image
from .base import ChatMessage

TEMPLATE_VERSION = "1"

INIT_MARKER = "Write one new program"
DESCRIBE_MARKER = "Describe the rendered object"
RANK_MARKER = "Rank the candidate descriptions"
CROSSOVER_MARKER = "Combine the two parent programs"
MUTATION_MARKER = "Revise the program"
SELFDEBUG_MARKER = "Fix the program so it compiles"

_SYSTEM = """You are a CAD programmer working in a small solid-modeling language.
A program is one or more part statements:
  part z <z0> <z1> { <outer shape>; hole <shape> at <x> <y>; ... }
Shapes: rect <width> <height> | circ <radius> | poly <x1> <y1> <x2> <y2> <x3> <y3> ...
Rules: z1 must exceed z0, every hole must lie strictly inside the outer
shape, holes must not touch each other, and parts must not overlap.
Always reply with a single fenced code block containing only the program."""

_CODE_ONLY = "Reply with a single fenced code block containing only the program."


def build_init_prompt(user_prompt: str, shots: list[str]) -> list[ChatMessage]:
    """System message fixing the language, then examples and the request."""
    sections = []
    if shots:
        blocks = [
            f"Example {i}:\n```\n{shot.strip()}\n```"
            for i, shot in enumerate(shots, start=1)
        ]
        sections.append("Here are example programs:\n\n" + "\n\n".join(blocks))
    sections.append(
        f"{INIT_MARKER} for the request below.\n"
        f"Request: {user_prompt}\n"
        f"{_CODE_ONLY}"
    )
    return [
        ChatMessage("system", _SYSTEM),
        ChatMessage("user", "\n\n".join(sections)),
    ]


def build_describe_prompt(img: Image) -> list[ChatMessage]:
    """Single user message with the render attached."""
    text = (
        f"{DESCRIBE_MARKER} in the image. The four tiles show one object "
        "from an angled view, the front, the top and the right. Work "
        "through it step by step: the overall shape first, then the "
        "distinct features, then count the through holes. End with one "
        "paragraph starting 'Final description:'."
    )
    return [ChatMessage("user", text, images=(img,))]


def build_rank_prompt(user_prompt: str, descriptions: list[tuple[int, str]]) -> list[ChatMessage]:
    """One candidate per line; demands a bare JSON array of ids in reply."""
    lines = [f"- id {i}: {text.replace(chr(10), ' ')}" for i, text in descriptions]
    body = (
        f"{RANK_MARKER} by how well each one matches the request.\n"
        f"Request: {user_prompt}\n"
        "Candidates:\n"
        + "\n".join(lines)
        + "\nReply with only a JSON array of the ids, best match first, "
        "for example [2, 0, 1]."
    )
    return [ChatMessage("user", body)]


def build_crossover_prompt(parents, user_prompt: str) -> list[ChatMessage]:
    """Both parent codes and descriptions, then the merge instruction."""
    (code_a, desc_a), (code_b, desc_b) = parents
    body = (
        "Here are two parent programs with descriptions of their rendered "
        "results.\n"
        f"Parent A:\n```\n{code_a.strip()}\n```\n"
        f"Parent A description: {desc_a}\n"
        f"Parent B:\n```\n{code_b.strip()}\n```\n"
        f"Parent B description: {desc_b}\n"
        f"Request: {user_prompt}\n"
        f"{CROSSOVER_MARKER}: compare them, note what each one does well "
        "and where it falls short, then write one new program that keeps "
        f"the strengths of both. {_CODE_ONLY}"
    )
    return [ChatMessage("system", _SYSTEM), ChatMessage("user", body)]


def build_mutation_prompt(code: str, user_prompt: str) -> list[ChatMessage]:
    """The current code and an instruction to move it toward the request."""
    body = (
        "Here is a program and the request it should satisfy.\n"
        f"```\n{code.strip()}\n```\n"
        f"Request: {user_prompt}\n"
        f"{MUTATION_MARKER} so it matches the request more closely while "
        f"staying valid. {_CODE_ONLY}"
    )
    return [ChatMessage("system", _SYSTEM), ChatMessage("user", body)]


def build_selfdebug_prompt(code: str, compiler_error: str, user_prompt: str) -> list[ChatMessage]:
    """Failing code plus the verbatim compiler error."""
    if not compiler_error:
        raise ValueError("compiler error text must be non-empty")
    body = (
        "The following program failed to compile.\n"
        f"```\n{code.strip()}\n```\n"
        f"Error: {compiler_error}\n"
        f"Request: {user_prompt}\n"
        f"{SELFDEBUG_MARKER} and still satisfies the request. {_CODE_ONLY}"
    )
    return [ChatMessage("system", _SYSTEM), ChatMessage("user", body)]
