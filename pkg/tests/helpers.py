"""Shared mesh and program builders for the test suite."""

import math

import numpy as np

from evocad.csg import CsgPart, CsgProgram, Profile, Shape
from evocad.geometry import TriMesh, weld

# corner index bits: 4 = +x, 2 = +y, 1 = +z; windings face outward
CUBE_FACES = [
    (0, 1, 3), (0, 3, 2),
    (4, 6, 7), (4, 7, 5),
    (0, 4, 5), (0, 5, 1),
    (2, 3, 7), (2, 7, 6),
    (0, 2, 6), (0, 6, 4),
    (1, 5, 7), (1, 7, 3),
]


def cube_corners(center=(0.0, 0.0, 0.0), size=2.0) -> np.ndarray:
    cx, cy, cz = center
    h = size / 2.0
    return np.array(
        [
            [cx + sx * h, cy + sy * h, cz + sz * h]
            for sx in (-1, 1)
            for sy in (-1, 1)
            for sz in (-1, 1)
        ]
    )


def cube_triangles(center=(0.0, 0.0, 0.0), size=2.0) -> np.ndarray:
    corners = cube_corners(center, size)
    return corners[np.array(CUBE_FACES)]


def cube_mesh(center=(0.0, 0.0, 0.0), size=2.0) -> TriMesh:
    return weld(cube_triangles(center, size))


def open_box_mesh(center=(0.0, 0.0, 0.0), size=2.0) -> TriMesh:
    """Cube missing its +z face: ten facets, not watertight."""
    tris = cube_triangles(center, size)
    return weld(tris[:10])


def _inradius(loop) -> float:
    """Distance from the origin to the nearest edge of a loop around it."""
    arr = np.asarray(loop, dtype=float)
    nxt = np.roll(arr, -1, axis=0)
    v = nxt - arr
    L2 = (v**2).sum(axis=1)
    t = np.clip((-arr * v).sum(axis=1) / L2, 0.0, 1.0)
    closest = arr + t[:, None] * v
    return float(np.linalg.norm(closest, axis=1).min())


def _random_outer(rng) -> Shape:
    kind = rng.choice(["rect", "circ", "poly"])
    if kind == "rect":
        return Shape("rect", (float(rng.uniform(3.0, 6.0)), float(rng.uniform(2.5, 5.0))))
    if kind == "circ":
        return Shape("circ", (float(rng.uniform(1.8, 3.0)),))
    m = int(rng.integers(5, 9))
    angles = (np.arange(m) + rng.uniform(0.15, 0.85, size=m)) * (2 * math.pi / m)
    radii = rng.uniform(1.8, 3.2, size=m)
    params = []
    for ang, r in zip(angles, radii):
        params.extend([float(r * math.cos(ang)), float(r * math.sin(ang))])
    return Shape("poly", tuple(params))


def _random_hole(rng, size: float, cx: float) -> Shape:
    kind = rng.choice(["rect", "circ", "poly"])
    at = (float(cx), 0.0)
    if kind == "rect":
        return Shape("rect", (size, size * float(rng.uniform(0.7, 1.0))), at=at)
    if kind == "circ":
        return Shape("circ", (size / 2,), at=at)
    h = size / 2
    return Shape("poly", (0.0, h, -h, -h, h, -h), at=at)


def random_program(rng) -> CsgProgram:
    """A random program that is valid by construction: holes sit in a row
    well inside the outer shape, parts get disjoint z slabs."""
    parts = []
    z = 0.0
    for _ in range(int(rng.integers(1, 3))):
        z0 = z + float(rng.uniform(0.2, 0.5))
        z1 = z0 + float(rng.uniform(0.3, 1.2))
        z = z1
        outer = _random_outer(rng)
        reach = _inradius(outer.outline())
        n_holes = int(rng.integers(0, 4))
        holes = []
        if n_holes:
            span = 1.2 * reach
            step = span / n_holes
            size = min(0.5 * step, 0.3 * reach)
            for i in range(n_holes):
                cx = -span / 2 + (i + 0.5) * step
                holes.append(_random_hole(rng, float(size), cx))
        parts.append(CsgPart(Profile(outer, tuple(holes)), z0, z1))
    return CsgProgram(tuple(parts))


class ScriptedBackend:
    """Replays canned replies in order and records every transcript."""

    identity = "scripted"

    def __init__(self, replies):
        self.replies = list(replies)
        self.transcripts = []

    def complete(self, messages, config):
        self.transcripts.append((tuple(messages), config.role))
        if not self.replies:
            raise AssertionError("scripted backend ran out of replies")
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply
