"""STL reading and writing.

Reader accepts both the 84-byte-header binary layout and the ASCII
`solid ... endsolid` grammar, producing a welded TriMesh either way.
Writer always emits binary: little-endian, 80-byte header, uint32 facet
count, 50 bytes per facet, normals recomputed from the winding order.
"""

from __future__ import annotations

import re
import struct

import numpy as np

from ..errors import MalformedStl
from .mesh import TriMesh, as_triangles, weld

_HEADER_SIZE = 80
_FACET_DTYPE = np.dtype(
    [("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
)
_TOKEN_RE = re.compile(rb"\S+")

_KEYWORDS = (b"facet", b"normal", b"outer", b"loop", b"vertex",
             b"endloop", b"endfacet", b"endsolid", b"solid")


def load_stl(data: bytes) -> TriMesh:
    """Decode STL bytes, deciding binary vs ASCII from the layout itself.

    The facet-count arithmetic is authoritative: a file whose length
    matches 84 + 50 * count is binary no matter what the header says.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("load_stl expects bytes")
    data = bytes(data)
    if len(data) >= _HEADER_SIZE + 4:
        declared = struct.unpack_from("<I", data, _HEADER_SIZE)[0]
        if _HEADER_SIZE + 4 + 50 * declared == len(data):
            return _parse_binary(data, declared)
    if data.lstrip()[:5].lower() == b"solid":
        return _parse_ascii(data)
    if len(data) < _HEADER_SIZE + 4:
        raise MalformedStl(
            f"file of {len(data)} bytes is too short for binary STL and does not start with 'solid'",
            offset=len(data),
        )
    declared = struct.unpack_from("<I", data, _HEADER_SIZE)[0]
    raise MalformedStl(
        f"binary facet count {declared} implies {_HEADER_SIZE + 4 + 50 * declared} bytes "
        f"but file has {len(data)}",
        offset=len(data),
    )


def _parse_binary(data: bytes, count: int) -> TriMesh:
    records = np.frombuffer(data, dtype=_FACET_DTYPE, count=count, offset=_HEADER_SIZE + 4)
    tris = records["verts"].astype(np.float64)
    if count and not np.isfinite(tris).all():
        bad = int(np.argwhere(~np.isfinite(tris))[0][0])
        raise MalformedStl("facet contains non-finite coordinate",
                           offset=_HEADER_SIZE + 4 + 50 * bad)
    return weld(tris)


def _parse_ascii(data: bytes) -> TriMesh:
    tokens = [(m.group(0), m.start()) for m in _TOKEN_RE.finditer(data)]
    pos = 0

    def fail(message: str, offset: int | None = None):
        if offset is None:
            offset = tokens[pos][1] if pos < len(tokens) else len(data)
        raise MalformedStl(message, offset=offset)

    def peek() -> bytes:
        return tokens[pos][0].lower() if pos < len(tokens) else b""

    def take() -> bytes:
        nonlocal pos
        if pos >= len(tokens):
            fail("unexpected end of file")
        tok = tokens[pos][0]
        pos += 1
        return tok

    def expect(keyword: bytes):
        tok = take()
        if tok.lower() != keyword:
            fail(f"expected '{keyword.decode()}', found '{tok.decode(errors='replace')}'",
                 tokens[pos - 1][1])

    def number() -> float:
        tok = take()
        try:
            return float(tok)
        except ValueError:
            fail(f"expected a number, found '{tok.decode(errors='replace')}'",
                 tokens[pos - 1][1])

    def skip_name():
        # free-form solid name: anything up to the next structural keyword
        nonlocal pos
        while pos < len(tokens) and peek() not in (b"facet", b"endsolid"):
            pos += 1

    tris: list[list[float]] = []
    while pos < len(tokens):
        expect(b"solid")
        skip_name()
        while True:
            tok = peek()
            if tok == b"endsolid":
                take()
                # optional trailing name, then maybe another solid
                while pos < len(tokens) and peek() != b"solid":
                    pos += 1
                break
            expect(b"facet")
            expect(b"normal")
            for _ in range(3):
                number()  # stored normal is ignored; winding is authoritative
            expect(b"outer")
            expect(b"loop")
            corners = []
            for _ in range(3):
                expect(b"vertex")
                corners.append([number(), number(), number()])
            expect(b"endloop")
            expect(b"endfacet")
            tris.append(corners)
    return weld(np.array(tris, dtype=np.float64).reshape(-1, 3, 3))


def write_stl(mesh: TriMesh, header_note: bytes = b"evocad binary stl") -> bytes:
    """Serialize to binary STL bytes.  Round-trips through load_stl bit-exactly
    for meshes whose coordinates are representable in float32."""
    if header_note[:5].lower() == b"solid":
        raise ValueError("binary header must not begin with 'solid'")
    tris = as_triangles(mesh)
    count = tris.shape[0]
    normals = np.zeros((count, 3))
    if count:
        cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        length = np.linalg.norm(cross, axis=1)
        ok = length > 0
        normals[ok] = cross[ok] / length[ok, None]
    records = np.zeros(count, dtype=_FACET_DTYPE)
    records["normal"] = normals.astype(np.float32)
    records["verts"] = tris.astype(np.float32)
    header = header_note[:_HEADER_SIZE].ljust(_HEADER_SIZE, b"\x00")
    return header + struct.pack("<I", count) + records.tobytes()
