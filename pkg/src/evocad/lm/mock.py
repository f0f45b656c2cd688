"""Deterministic offline backend.

Answers every prompt kind the evolution loop produces, using the built-in
solid-modeling language as its genotype.  Every reply is a pure function
of (seed, conversation), so runs replay byte-identically.  The behavior
contract the end-to-end tests rely on:

- code requests emit a flat plate program; the initial hole count is
  drawn with a deliberate bias away from the requested count
- describe requests read the hole count from the render's provenance
  (the source program travels with the image) and state it in digits
- rank requests order candidates by |described holes - requested holes|,
  ties broken by lower id, and reply with a JSON array
- crossover keeps the parent whose hole count is closer to the request
  and adopts the other parent's plate thickness
- mutation usually steps the hole count one toward the request,
  otherwise it rescales one plate dimension

The requested hole count is read from the "Request:" line of the prompt:
the first integer written in digits directly before the word "hole" or
"holes".  No such phrase means zero holes.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from collections import Counter
from dataclasses import replace

import numpy as np

from .. import csg
from ..errors import BackendError
from .base import Backend, ChatMessage, ModelRoleConfig
from . import prompts

_HOLES = re.compile(r"(\d+)\s*holes?\b", re.IGNORECASE)
_REQUEST = re.compile(r"^Request: (.*)$", re.MULTILINE)
_CANDIDATE = re.compile(r"^- id (\d+): (.*)$", re.MULTILINE)
_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)

_MISS_BIAS = 0.12  # chance the initial draw lands on the requested count
_STEP_PROB = 0.8   # chance a mutation steps the hole count toward the request
_MAX_INIT_HOLES = 5


def _target_holes(text: str) -> int:
    m = _HOLES.search(text)
    return int(m.group(1)) if m else 0


def _request_text(user_text: str) -> str:
    m = _REQUEST.search(user_text)
    return m.group(1) if m else user_text


def _transcript_digest(seed: int, messages: list[ChatMessage]) -> int:
    h = hashlib.sha256()
    h.update(str(seed).encode())
    for msg in messages:
        h.update(b"\x00" + msg.role.encode())
        h.update(b"\x01" + msg.text.encode())
        for img in msg.images:
            h.update(b"\x02" + img.provenance.encode())
            h.update(hashlib.sha256(img.rgb).digest())
    return int.from_bytes(h.digest()[:8], "big")


def _fenced(code: str, lead: str) -> str:
    body = code if code.endswith("\n") else code + "\n"
    return f"{lead}\n```\n{body}```\n"


def _plate_params(prog: csg.CsgProgram):
    """Project any program onto the plate family the mock works in."""
    part = prog.parts[0]
    outer = part.profile.outer
    if outer.kind == "rect":
        width, depth = outer.params
    elif outer.kind == "circ":
        width = depth = 2.0 * outer.params[0]
    else:
        pts = outer.outline()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        width, depth = max(xs) - min(xs), max(ys) - min(ys)
    thickness = part.z1 - part.z0
    kind = part.profile.holes[0].kind if part.profile.holes else "circ"
    return float(width), float(depth), float(thickness), prog.hole_count, kind


def _random_plate(rng: np.random.Generator, holes: int) -> csg.CsgProgram:
    width = float(rng.uniform(3.0, 6.0))
    depth = float(rng.uniform(2.0, 4.5))
    thickness = float(rng.uniform(0.3, 0.8))
    kind = "circ" if rng.random() < 0.5 else "rect"
    return csg.plate_program(width, depth, thickness, holes, kind)


class MockBackend(Backend):
    """Seeded stand-in for all three model roles.  Thread-safe."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.identity = f"mock(seed={self.seed})"
        self.call_counts = Counter()
        self._lock = threading.Lock()

    def complete(self, messages: list[ChatMessage], config: ModelRoleConfig) -> str:
        user_text = "\n".join(m.text for m in messages if m.role == "user")
        images = [img for m in messages for img in m.images]
        kind = self._classify(user_text, images)
        with self._lock:
            self.call_counts[kind] += 1
        rng = np.random.default_rng((self.seed, _transcript_digest(self.seed, messages)))
        if kind == "describe":
            return self._describe(images[0])
        if kind == "rank":
            return self._rank(user_text)
        if kind == "crossover":
            return self._crossover(user_text, rng)
        if kind == "mutation":
            return self._mutation(user_text, rng)
        if kind == "selfdebug":
            return self._selfdebug(user_text, rng)
        return self._init(user_text, rng)

    @staticmethod
    def _classify(user_text: str, images) -> str:
        if images:
            return "describe"
        if prompts.RANK_MARKER in user_text:
            return "rank"
        if prompts.SELFDEBUG_MARKER in user_text:
            return "selfdebug"
        if prompts.CROSSOVER_MARKER in user_text:
            return "crossover"
        if prompts.MUTATION_MARKER in user_text:
            return "mutation"
        if prompts.INIT_MARKER in user_text:
            return "init"
        raise BackendError("offline backend cannot classify this prompt")

    def _init(self, user_text: str, rng: np.random.Generator) -> str:
        target = _target_holes(_request_text(user_text))
        weights = np.full(_MAX_INIT_HOLES, 1.0)
        if 0 <= target < _MAX_INIT_HOLES:
            weights[:] = (1.0 - _MISS_BIAS) / (_MAX_INIT_HOLES - 1)
            weights[target] = _MISS_BIAS
        weights /= weights.sum()
        holes = int(rng.choice(_MAX_INIT_HOLES, p=weights))
        prog = _random_plate(rng, holes)
        return _fenced(csg.to_text(prog), "Here is a program for the request.")

    @staticmethod
    def _describe(image) -> str:
        try:
            prog = csg.parse(image.provenance)
        except Exception:
            return (
                "The tiles show a solid object, but its construction is "
                "unclear. Final description: a solid object."
            )
        holes = prog.hole_count
        sections = len(prog.parts)
        noun = "hole" if holes == 1 else "holes"
        return (
            "The four tiles show one object from different sides. It is "
            f"built from {sections} extruded section"
            f"{'' if sections == 1 else 's'}. Openings passing through the "
            f"material: {holes} {noun}. Final description: a flat solid "
            f"with {holes} {noun}."
        )

    @staticmethod
    def _rank(user_text: str) -> str:
        target = _target_holes(_request_text(user_text))
        entries = []
        for m in _CANDIDATE.finditer(user_text):
            ident = int(m.group(1))
            got = _HOLES.search(m.group(2))
            distance = abs(int(got.group(1)) - target) if got else 1000
            entries.append((distance, ident))
        entries.sort()
        return json.dumps([ident for _, ident in entries])

    def _crossover(self, user_text: str, rng: np.random.Generator) -> str:
        target = _target_holes(_request_text(user_text))
        progs = []
        for code in _FENCE.findall(user_text)[:2]:
            try:
                progs.append(csg.parse(code))
            except Exception:
                pass
        if not progs:
            prog = _random_plate(rng, target)
            return _fenced(csg.to_text(prog), "Starting over with a fresh program.")
        if len(progs) == 1:
            return _fenced(csg.to_text(progs[0]), "Keeping the only valid parent.")
        first, second = progs
        if abs(first.hole_count - target) <= abs(second.hole_count - target):
            keep, other = first, second
        else:
            keep, other = second, first
        child = keep
        if len(keep.parts) == 1:
            part = keep.parts[0]
            donor = other.parts[0]
            part = replace(part, z1=part.z0 + (donor.z1 - donor.z0))
            child = csg.CsgProgram((part,))
        return _fenced(
            csg.to_text(child),
            "Merging the better layout with the other parent's thickness.",
        )

    def _mutation(self, user_text: str, rng: np.random.Generator) -> str:
        target = _target_holes(_request_text(user_text))
        blocks = _FENCE.findall(user_text)
        try:
            prog = csg.parse(blocks[0])
        except Exception:
            return _fenced(
                csg.to_text(_random_plate(rng, target)),
                "The program was unreadable, so here is a fresh one.",
            )
        width, depth, thickness, holes, kind = _plate_params(prog)
        if holes != target and rng.random() < _STEP_PROB:
            holes += 1 if target > holes else -1
            note = "Stepping the hole count toward the request."
        else:
            which = int(rng.integers(3))
            factor = float(rng.uniform(0.85, 1.2))
            if which == 0:
                width *= factor
            elif which == 1:
                depth *= factor
            else:
                thickness *= factor
            note = "Adjusting one dimension."
        child = csg.plate_program(width, depth, thickness, holes, kind)
        return _fenced(csg.to_text(child), note)

    def _selfdebug(self, user_text: str, rng: np.random.Generator) -> str:
        target = _target_holes(_request_text(user_text))
        prog = _random_plate(rng, target)
        return _fenced(csg.to_text(prog), "Replacing the broken program.")
