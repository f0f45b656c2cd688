"""A miniature solid-modeling language: extruded 2-D profiles with holes.

    part z 0.0 0.5 { rect 4.0 3.0; hole circ 0.5 at -1.0 0.0 }

A program is one or more `part` statements.  Each part extrudes an outer
profile (rect, circ or poly; rect and circ are centered at the origin)
from z0 to z1, minus any through-holes.  `;` separates statements inside
the braces, `#` starts a line comment, whitespace is free-form.  Circles
are regular 32-gons, so every compiled mesh is an exact polyhedron and
its Euler characteristic is predictable: 2 - 2 * holes per part, summed
over parts.

Compilation produces a welded, watertight TriMesh: caps come from ear
clipping after holes are bridged into the outer loop, walls from split
quads along every loop.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ConstraintError, CsgSyntaxError, TriangulationError
from .geometry import TriMesh, weld

CIRCLE_SEGMENTS = 32

_REL_EPS = 1e-9

Vec2 = tuple[float, float]


# ---------------------------------------------------------------------------
# program representation


@dataclass(frozen=True)
class Shape:
    """One 2-D primitive.  params are kind-specific, `at` is the hole offset."""

    kind: str
    params: tuple[float, ...]
    at: Vec2 = (0.0, 0.0)

    def outline(self) -> list[Vec2]:
        """Boundary polygon, counter-clockwise."""
        cx, cy = self.at
        if self.kind == "rect":
            w, h = self.params
            return [
                (cx - w / 2, cy - h / 2),
                (cx + w / 2, cy - h / 2),
                (cx + w / 2, cy + h / 2),
                (cx - w / 2, cy + h / 2),
            ]
        if self.kind == "circ":
            r = self.params[0]
            pts = []
            for k in range(CIRCLE_SEGMENTS):
                ang = 2.0 * math.pi * k / CIRCLE_SEGMENTS
                pts.append((cx + r * math.cos(ang), cy + r * math.sin(ang)))
            return pts
        if self.kind == "poly":
            pts = [
                (self.params[i] + cx, self.params[i + 1] + cy)
                for i in range(0, len(self.params), 2)
            ]
            if _signed_area(pts) < 0:
                pts.reverse()
            return pts
        raise ValueError(f"unknown shape kind {self.kind!r}")


@dataclass(frozen=True)
class Profile:
    outer: Shape
    holes: tuple[Shape, ...] = ()

    def outer_loop(self) -> list[Vec2]:
        return self.outer.outline()

    def hole_loops(self) -> list[list[Vec2]]:
        # holes wind clockwise so the solid interior stays on the left
        return [list(reversed(h.outline())) for h in self.holes]


@dataclass(frozen=True)
class CsgPart:
    profile: Profile
    z0: float
    z1: float


@dataclass(frozen=True)
class CsgProgram:
    parts: tuple[CsgPart, ...]

    @property
    def hole_count(self) -> int:
        return sum(len(p.profile.holes) for p in self.parts)


def expected_chi(prog: CsgProgram) -> int:
    """Euler characteristic the compiled mesh must have: each part is a
    handlebody of genus equal to its hole count."""
    return sum(2 - 2 * len(p.profile.holes) for p in prog.parts)


# ---------------------------------------------------------------------------
# lexing / parsing


class _Token(NamedTuple):
    text: str
    line: int
    col: int


_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\Z")


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for m in re.finditer(r"[{};]|[^\s{};]+", body):
            tokens.append(_Token(m.group(0), lineno, m.start() + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.end_line = text.count("\n") + 1

    def fail(self, message: str, token: _Token | None = None):
        if token is None:
            token = self.tokens[self.pos] if self.pos < len(self.tokens) else None
        if token is None:
            raise CsgSyntaxError(message, line=self.end_line, col=1)
        raise CsgSyntaxError(message, line=token.line, col=token.col)

    def peek(self) -> str | None:
        return self.tokens[self.pos].text if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        if self.pos >= len(self.tokens):
            self.fail("unexpected end of program")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.take()
        if tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text!r}", tok)

    def number(self) -> float:
        tok = self.take()
        if not _NUMBER_RE.match(tok.text):
            self.fail(f"expected a number, found {tok.text!r}", tok)
        return float(tok.text)

    def at_number(self) -> bool:
        nxt = self.peek()
        return nxt is not None and bool(_NUMBER_RE.match(nxt))

    def shape(self) -> Shape:
        tok = self.take()
        if tok.text == "rect":
            return Shape("rect", (self.number(), self.number()))
        if tok.text == "circ":
            return Shape("circ", (self.number(),))
        if tok.text == "poly":
            nums = []
            while self.at_number():
                nums.append(self.number())
            if len(nums) < 6 or len(nums) % 2:
                self.fail("poly needs at least 3 x y pairs", tok)
            return Shape("poly", tuple(nums))
        self.fail(f"expected a shape (rect, circ or poly), found {tok.text!r}", tok)

    def part(self) -> CsgPart:
        self.expect("part")
        self.expect("z")
        z0 = self.number()
        z1 = self.number()
        self.expect("{")
        outer = self.shape()
        holes = []
        while self.peek() == ";":
            self.take()
            if self.peek() == "}":
                break
            self.expect("hole")
            shp = self.shape()
            self.expect("at")
            x = self.number()
            y = self.number()
            holes.append(replace(shp, at=(x, y)))
        self.expect("}")
        return CsgPart(Profile(outer, tuple(holes)), z0, z1)

    def program(self) -> CsgProgram:
        if not self.tokens:
            self.fail("empty program")
        parts = []
        while self.pos < len(self.tokens):
            parts.append(self.part())
        return CsgProgram(tuple(parts))


def parse(text: str) -> CsgProgram:
    """Parse and validate program text.

    Raises CsgSyntaxError (with line and column) for grammar problems and
    ConstraintError for programs that parse but describe impossible solids.
    """
    prog = _Parser(text).program()
    validate_program(prog)
    return prog


def _fmt(x: float) -> str:
    return repr(float(x))


def to_text(prog: CsgProgram) -> str:
    """Canonical text form; parse(to_text(p)) == p."""
    lines = []
    for part in prog.parts:
        bits = [_shape_text(part.profile.outer)]
        for hole in part.profile.holes:
            bits.append(f"hole {_shape_text(hole)} at {_fmt(hole.at[0])} {_fmt(hole.at[1])}")
        lines.append(f"part z {_fmt(part.z0)} {_fmt(part.z1)} {{ {'; '.join(bits)} }}")
    return "\n".join(lines) + "\n"


def _shape_text(shape: Shape) -> str:
    return f"{shape.kind} {' '.join(_fmt(p) for p in shape.params)}"


# ---------------------------------------------------------------------------
# 2-D predicates, vectorized where validation hits them in bulk


def _signed_area(loop: list[Vec2]) -> float:
    total = 0.0
    for (x0, y0), (x1, y1) in zip(loop, loop[1:] + loop[:1]):
        total += x0 * y1 - x1 * y0
    return total / 2.0


def _loop_scale(pts) -> float:
    arr = np.asarray(pts, dtype=np.float64)
    ext = arr.max(axis=0) - arr.min(axis=0)
    return float(max(ext[0], ext[1], 1e-30))


def _points_in_polygon(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Even-odd containment for many points; boundary answers are arbitrary."""
    a = loop
    b = np.roll(loop, -1, axis=0)
    x = points[:, 0:1]
    y = points[:, 1:2]
    spans = (a[:, 1][None, :] > y) != (b[:, 1][None, :] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = a[:, 0][None, :] + (y - a[:, 1][None, :]) * (b[:, 0] - a[:, 0])[None, :] / (
            b[:, 1] - a[:, 1]
        )[None, :]
    hits = spans & (x < xi)
    return hits.sum(axis=1) % 2 == 1


def _points_to_edges_dist(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest edge of the loop."""
    a = loop
    v = np.roll(loop, -1, axis=0) - a
    L2 = (v**2).sum(axis=1)
    L2 = np.where(L2 == 0.0, 1e-300, L2)
    d = points[:, None, :] - a[None, :, :]
    t = np.clip((d * v[None, :, :]).sum(axis=2) / L2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * v[None, :, :]
    dist = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return dist.min(axis=1)


def _segments_properly_cross(p0, p1, q0, q1) -> np.ndarray:
    """Vectorized proper-crossing test: p segment (2,), q segments (E, 2)."""

    def cr(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (
            a[..., 1] - o[..., 1]
        ) * (b[..., 0] - o[..., 0])

    d1 = cr(q0, q1, p0)
    d2 = cr(q0, q1, p1)
    d3 = cr(p0, p1, q0)
    d4 = cr(p0, p1, q1)
    return ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0)) & (d1 != d2) & (d3 != d4)


def _point_to_segments_dist(p: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    v = q1 - q0
    L2 = (v**2).sum(axis=1)
    L2 = np.where(L2 == 0.0, 1e-300, L2)
    t = np.clip(((p - q0) * v).sum(axis=1) / L2, 0.0, 1.0)
    return np.linalg.norm(p - (q0 + t[:, None] * v), axis=1)


def _segment_clearance(m, p, q0: np.ndarray, q1: np.ndarray) -> float:
    """Min distance between segment m-p and a batch of segments; 0 on crossing."""
    if q0.shape[0] == 0:
        return math.inf
    m = np.asarray(m, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if _segments_properly_cross(m, p, q0, q1).any():
        return 0.0
    dists = [
        _point_to_segments_dist(m, q0, q1),
        _point_to_segments_dist(p, q0, q1),
    ]
    v = p - m
    L2 = float((v**2).sum()) or 1e-300
    for ends in (q0, q1):
        t = np.clip(((ends - m) * v).sum(axis=1) / L2, 0.0, 1.0)
        dists.append(np.linalg.norm(ends - (m + t[:, None] * v), axis=1))
    return float(min(d.min() for d in dists))


def _points_to_segments(pts: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Distance matrix (points x segments)."""
    v = q1 - q0
    L2 = (v**2).sum(axis=1)
    L2 = np.where(L2 == 0.0, 1e-300, L2)
    w = pts[:, None, :] - q0[None, :, :]
    t = np.clip((w * v[None, :, :]).sum(axis=2) / L2[None, :], 0.0, 1.0)
    proj = q0[None, :, :] + t[:, :, None] * v[None, :, :]
    return np.linalg.norm(pts[:, None, :] - proj, axis=2)


def _loops_clearance(la: np.ndarray, lb: np.ndarray) -> float:
    """Min distance between two polygon boundaries; 0 if they cross."""
    a0, a1 = la, np.roll(la, -1, axis=0)
    b0, b1 = lb, np.roll(lb, -1, axis=0)
    crossing = _segments_properly_cross(
        a0[:, None, :], a1[:, None, :], b0[None, :, :], b1[None, :, :]
    )
    if crossing.any():
        return 0.0
    # disjoint segments attain their minimum at a vertex of one of them
    return float(min(
        _points_to_segments(la, b0, b1).min(),
        _points_to_segments(lb, a0, a1).min(),
    ))


def _loop_is_simple(loop: list[Vec2], eps: float) -> bool:
    """Non-adjacent edges must stay apart; adjacent ones share one endpoint."""
    n = len(loop)
    arr = np.asarray(loop, dtype=np.float64)
    nxt = np.roll(arr, -1, axis=0)
    for i in range(n):
        # edges j non-adjacent to i
        js = [j for j in range(i + 1, n) if j != i + 1 and not (i == 0 and j == n - 1)]
        if not js:
            continue
        if _segment_clearance(arr[i], nxt[i], arr[js], nxt[js]) <= eps:
            return False
    return True


# ---------------------------------------------------------------------------
# validation


def validate_program(prog: CsgProgram):
    if not prog.parts:
        raise ConstraintError("program has no parts")
    for idx, part in enumerate(prog.parts):
        _validate_part(part, idx)
    for i in range(len(prog.parts)):
        for j in range(i + 1, len(prog.parts)):
            _validate_part_pair(prog.parts[i], prog.parts[j], i, j)


def _validate_shape(shape: Shape, label: str, eps: float):
    if shape.kind == "rect":
        w, h = shape.params
        if w <= 0 or h <= 0:
            raise ConstraintError(f"{label}: rect dimensions must be positive")
    elif shape.kind == "circ":
        if shape.params[0] <= 0:
            raise ConstraintError(f"{label}: circ radius must be positive")
    elif shape.kind == "poly":
        loop = shape.outline()
        if abs(_signed_area(loop)) <= eps * eps:
            raise ConstraintError(f"{label}: poly has (near) zero area")
        if not _loop_is_simple(loop, eps):
            raise ConstraintError(f"{label}: poly is self-intersecting")
    else:
        raise ConstraintError(f"{label}: unknown shape kind {shape.kind!r}")


def _validate_part(part: CsgPart, idx: int):
    label = f"part {idx}"
    if not (part.z1 > part.z0):
        raise ConstraintError(f"{label}: z range must satisfy z1 > z0")
    outer = np.asarray(part.profile.outer_loop(), dtype=np.float64)
    eps = _REL_EPS * max(_loop_scale(outer), 1.0)
    _validate_shape(part.profile.outer, f"{label} outer", eps)
    hole_arrays = []
    for h_idx, hole in enumerate(part.profile.holes):
        hlabel = f"{label} hole {h_idx}"
        _validate_shape(hole, hlabel, eps)
        loop = np.asarray(hole.outline(), dtype=np.float64)
        inside = _points_in_polygon(loop, outer)
        if not inside.all() or _loops_clearance(loop, outer) <= eps:
            raise ConstraintError(f"{hlabel}: must lie strictly inside the outer shape")
        hole_arrays.append((h_idx, loop))
    for k in range(len(hole_arrays)):
        for m in range(k + 1, len(hole_arrays)):
            ia, la = hole_arrays[k]
            ib, lb = hole_arrays[m]
            if (
                _points_in_polygon(la[:1], lb)[0]
                or _points_in_polygon(lb[:1], la)[0]
                or _loops_clearance(la, lb) <= eps
            ):
                raise ConstraintError(f"{label}: holes {ia} and {ib} overlap or touch")


def _validate_part_pair(pa: CsgPart, pb: CsgPart, ia: int, ib: int):
    # closed z intervals: touching slabs would weld into a non-manifold seam
    if pa.z1 < pb.z0 or pb.z1 < pa.z0:
        return
    la = np.asarray(pa.profile.outer_loop(), dtype=np.float64)
    lb = np.asarray(pb.profile.outer_loop(), dtype=np.float64)
    eps = _REL_EPS * max(_loop_scale(la), _loop_scale(lb), 1.0)
    if (
        _points_in_polygon(la[:1], lb)[0]
        or _points_in_polygon(lb[:1], la)[0]
        or _loops_clearance(la, lb) <= eps
    ):
        raise ConstraintError(
            f"parts {ia} and {ib} overlap in space; give them disjoint z ranges "
            "or separated footprints"
        )


# ---------------------------------------------------------------------------
# triangulation


def _bridge_hole(ring: list[int], hole: list[int], pts: np.ndarray,
                 pending: list[list[int]], eps: float) -> list[int]:
    """Splice a hole loop into the ring through a zero-width channel.

    The bridge runs from the hole's rightmost vertex to the nearest ring
    vertex it can see without touching any other boundary.
    """
    h = len(hole)
    mi = max(range(h), key=lambda k: (pts[hole[k]][0], pts[hole[k]][1]))
    m_idx = hole[mi]
    M = pts[m_idx]

    # obstacle edges that never change with the candidate: this hole's own
    # edges not incident to M, plus every not-yet-merged hole
    obs: list[tuple[int, int]] = []
    for k in range(h):
        if k == mi or (k + 1) % h == mi:
            continue
        obs.append((hole[k], hole[(k + 1) % h]))
    for other in pending:
        ho = len(other)
        for k in range(ho):
            obs.append((other[k], other[(k + 1) % ho]))
    obs_a = pts[[e[0] for e in obs]] if obs else np.zeros((0, 2))
    obs_b = pts[[e[1] for e in obs]] if obs else np.zeros((0, 2))

    n = len(ring)
    ring_pts = pts[ring]
    dists = np.linalg.norm(ring_pts - M, axis=1)
    for pos in np.argsort(dists, kind="stable"):
        pos = int(pos)
        P = ring_pts[pos]
        if dists[pos] < eps:
            continue
        keep = [q for q in range(n) if q != pos and q != (pos - 1) % n]
        e0 = ring_pts[keep]
        e1 = ring_pts[[(q + 1) % n for q in keep]]
        if _segment_clearance(M, P, e0, e1) <= eps:
            continue
        if _segment_clearance(M, P, obs_a, obs_b) <= eps:
            continue
        channel = [hole[(mi + k) % h] for k in range(h)] + [m_idx]
        return ring[: pos + 1] + channel + ring[pos:]
    raise TriangulationError("no visible bridge vertex for hole")


def _ear_clip(ring: list[int], pts: np.ndarray) -> list[tuple[int, int, int]]:
    ring = list(ring)
    scale = _loop_scale(pts)
    eps_area = 1e-12 * scale * scale
    eps_len = _REL_EPS * scale
    tris: list[tuple[int, int, int]] = []

    def blocked(k: int, strict: bool) -> bool:
        n = len(ring)
        ia, ib, ic = ring[k - 1], ring[k], ring[(k + 1) % n]
        a, b, c = pts[ia], pts[ib], pts[ic]
        corner = {ia, ib, ic}
        others = [ring[m] for m in range(n)
                  if m not in ((k - 1) % n, k, (k + 1) % n) and ring[m] not in corner]
        if not others:
            return False
        P = pts[others]
        if strict:
            slop = eps_len * scale
            d0 = (b[0] - a[0]) * (P[:, 1] - a[1]) - (b[1] - a[1]) * (P[:, 0] - a[0])
            d1 = (c[0] - b[0]) * (P[:, 1] - b[1]) - (c[1] - b[1]) * (P[:, 0] - b[0])
            d2 = (a[0] - c[0]) * (P[:, 1] - c[1]) - (a[1] - c[1]) * (P[:, 0] - c[0])
            return bool(((d0 >= -slop) & (d1 >= -slop) & (d2 >= -slop)).any())
        # collinear ear: blocked when anything sits on the long edge a-c
        ac = c - a
        L = math.hypot(float(ac[0]), float(ac[1]))
        if L == 0.0:
            return False
        crossd = np.abs((P[:, 0] - a[0]) * ac[1] - (P[:, 1] - a[1]) * ac[0]) / L
        dot = (P[:, 0] - a[0]) * ac[0] + (P[:, 1] - a[1]) * ac[1]
        on = (crossd <= eps_len) & (dot > -eps_len) & (dot < L * L + eps_len)
        return bool(on.any())

    def emit(ia: int, ib: int, ic: int):
        if ia != ib and ib != ic and ic != ia:
            tris.append((ia, ib, ic))

    while len(ring) > 3:
        n = len(ring)
        clipped = False
        for strict in (True, False):
            for k in range(n):
                ia, ib, ic = ring[k - 1], ring[k], ring[(k + 1) % n]
                a, b, c = pts[ia], pts[ib], pts[ic]
                cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if strict:
                    if cr <= eps_area:
                        continue
                elif abs(cr) > eps_area:
                    continue  # fallback pass is only for collinear ears
                if blocked(k, strict):
                    continue
                emit(ia, ib, ic)
                del ring[k]
                clipped = True
                break
            if clipped:
                break
        if not clipped:
            raise TriangulationError("polygon has no clippable ear")
    if len(ring) == 3:
        emit(ring[0], ring[1], ring[2])
    return tris


def triangulate_profile(outer: list[Vec2], holes: list[list[Vec2]]):
    """Index triangles covering the profile; outer CCW, holes CW.

    Returns (vertices, triangles): the flat vertex list (outer first, then
    holes in order) and index triples into it.
    """
    verts: list[Vec2] = list(outer)
    hole_rings: list[list[int]] = []
    for loop in holes:
        start = len(verts)
        verts.extend(loop)
        hole_rings.append(list(range(start, start + len(loop))))
    pts = np.asarray(verts, dtype=np.float64)
    eps = _REL_EPS * max(_loop_scale(pts), 1.0)
    ring = list(range(len(outer)))
    order = sorted(hole_rings, key=lambda hr: -max(float(pts[i][0]) for i in hr))
    for k, hr in enumerate(order):
        ring = _bridge_hole(ring, hr, pts, order[k + 1 :], eps)
    tris = _ear_clip(ring, pts)
    expect = len(verts) + 2 * len(holes) - 2
    if len(tris) != expect:
        raise TriangulationError(
            f"triangulation produced {len(tris)} triangles, expected {expect}"
        )
    return verts, tris


# ---------------------------------------------------------------------------
# compilation to a mesh


def compile_program(prog: CsgProgram) -> TriMesh:
    """Build the welded surface mesh for a validated program."""
    validate_program(prog)
    all_tris: list[np.ndarray] = []
    for part in prog.parts:
        outer = part.profile.outer_loop()
        holes = part.profile.hole_loops()
        verts2d, cap_tris = triangulate_profile(outer, holes)
        v = np.asarray(verts2d, dtype=np.float64)
        z0, z1 = float(part.z0), float(part.z1)
        bottom = np.column_stack([v, np.full(len(v), z0)])
        top = np.column_stack([v, np.full(len(v), z1)])
        idx = np.asarray(cap_tris, dtype=np.int64)
        all_tris.append(top[idx])  # CCW seen from above: +z normals
        all_tris.append(bottom[idx[:, [0, 2, 1]]])  # flipped: -z normals
        for loop in [outer] + holes:
            n = len(loop)
            arr = np.asarray(loop, dtype=np.float64)
            p = arr
            q = np.roll(arr, -1, axis=0)
            bp = np.column_stack([p, np.full(n, z0)])
            bq = np.column_stack([q, np.full(n, z0)])
            tq = np.column_stack([q, np.full(n, z1)])
            tp = np.column_stack([p, np.full(n, z1)])
            all_tris.append(np.stack([bp, bq, tq], axis=1))
            all_tris.append(np.stack([bp, tq, tp], axis=1))
    return weld(np.concatenate(all_tris))


def compile_source(text: str) -> TriMesh:
    """Parse, validate and compile in one step."""
    return compile_program(parse(text))


# ---------------------------------------------------------------------------
# convenience constructor used by tests, the mock backend and the few-shot set


def plate_program(width: float, depth: float, thickness: float, holes: int,
                  hole_kind: str = "rect") -> CsgProgram:
    """A flat plate with `holes` through-holes in an evenly spaced row.

    The layout keeps generous clearances, so the result is always valid.
    """
    if holes < 0:
        raise ValueError("hole count must be non-negative")
    hole_shapes = []
    if holes:
        margin = 0.12 * width
        usable = width - 2 * margin
        step = usable / holes
        size = min(0.5 * step, 0.2 * width, 0.4 * depth)
        for i in range(holes):
            cx = -width / 2 + margin + (i + 0.5) * step
            if hole_kind == "circ":
                hole_shapes.append(Shape("circ", (size / 2,), at=(cx, 0.0)))
            else:
                hole_shapes.append(Shape("rect", (size, size), at=(cx, 0.0)))
    profile = Profile(Shape("rect", (float(width), float(depth))), tuple(hole_shapes))
    return CsgProgram((CsgPart(profile, 0.0, float(thickness)),))
