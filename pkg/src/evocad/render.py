"""Deterministic software renderer: four orthographic views in one image.

The output is a 2x2 grid (isometric, front | top, right) of flat-shaded
tiles rasterized with a z-buffer.  Everything is plain numpy with fixed
light and framing, so the same mesh and size always produce the same
bytes on any machine.  PNG encoding is hand-rolled on top of zlib to keep
the pipeline dependency-free.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, replace

import numpy as np

from .geometry import TriMesh, bounding_box, normalize

MIN_SIZE = 64

_BACKGROUND = np.array([235, 235, 235], dtype=np.uint8)
_BASE_COLOR = np.array([88, 126, 178], dtype=np.float64)
_AMBIENT = 0.35
_DIFFUSE = 0.65
_LIGHT = np.array([0.45, 0.35, 0.82])
_LIGHT = _LIGHT / np.linalg.norm(_LIGHT)
_FILL = 0.82  # fraction of the tile the projected box may cover


def _view_matrices() -> dict[str, np.ndarray]:
    """World -> view rotations; view x is screen right, y screen up,
    z toward the camera (so depth is -z).  World up is +z, the front of
    an object faces -y."""
    front = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]])
    top = np.eye(3)
    right = np.array([[0, 1.0, 0], [0, 0, 1.0], [1.0, 0, 0]])
    # camera on the front-right-top corner
    vz = np.array([1.0, -1.0, 1.0]) / np.sqrt(3.0)
    vx = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    vy = np.cross(vz, vx)
    iso = np.stack([vx, vy, vz])
    return {"iso": iso, "front": front, "top": top, "right": right}


_VIEWS = _view_matrices()
_VIEW_ORDER = [["iso", "front"], ["top", "right"]]


@dataclass(frozen=True)
class Image:
    """Raw RGB image plus a provenance note naming what was rendered."""

    width: int
    height: int
    rgb: bytes
    provenance: str = ""

    def __post_init__(self):
        if len(self.rgb) != self.width * self.height * 3:
            raise ValueError("rgb buffer does not match width * height * 3")

    def with_provenance(self, note: str) -> "Image":
        return replace(self, provenance=note)


def _rasterize_tile(verts: np.ndarray, faces: np.ndarray, view: np.ndarray,
                    tile: int) -> np.ndarray:
    """Flat-shaded z-buffer rasterization of one view into a tile."""
    pix = np.empty((tile, tile, 3), dtype=np.uint8)
    pix[:] = _BACKGROUND
    zbuf = np.full((tile, tile), np.inf)

    v = verts @ view.T  # (V, 3): x right, y up, z toward camera
    # frame from the projected bounding box, centered, uniform scale
    lo = v[:, :2].min(axis=0)
    hi = v[:, :2].max(axis=0)
    center = (lo + hi) / 2.0
    extent = float((hi - lo).max())
    if extent <= 0:
        extent = 1.0
    scale = _FILL * tile / extent
    # pixel coords: u right, screen row grows downward
    uv = (v[:, :2] - center) * scale
    px = uv[:, 0] + tile / 2.0
    py = tile / 2.0 - uv[:, 1]
    depth = -v[:, 2]

    tris = faces
    a2 = np.stack([px[tris[:, 0]], py[tris[:, 0]]], axis=1)
    b2 = np.stack([px[tris[:, 1]], py[tris[:, 1]]], axis=1)
    c2 = np.stack([px[tris[:, 2]], py[tris[:, 2]]], axis=1)
    az, bz, cz = depth[tris[:, 0]], depth[tris[:, 1]], depth[tris[:, 2]]

    # per-face shading from the view-space normal, two-sided
    tv = v[tris]
    n = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    norm = np.linalg.norm(n, axis=1)
    ok = norm > 0
    n[ok] /= norm[ok, None]
    n[n[:, 2] < 0] *= -1.0
    intensity = _AMBIENT + _DIFFUSE * np.clip(n @ _LIGHT, 0.0, None)
    colors = np.clip(_BASE_COLOR[None, :] * intensity[:, None], 0, 255).astype(np.uint8)

    ax, ay = a2[:, 0].tolist(), a2[:, 1].tolist()
    bx, by = b2[:, 0].tolist(), b2[:, 1].tolist()
    cx, cy = c2[:, 0].tolist(), c2[:, 1].tolist()
    azs, bzs, czs = az.tolist(), bz.tolist(), cz.tolist()
    for f in range(tris.shape[0]):
        pax, pay = ax[f], ay[f]
        pbx, pby = bx[f], by[f]
        pcx, pcy = cx[f], cy[f]
        d = (pbx - pax) * (pcy - pay) - (pcx - pax) * (pby - pay)
        if abs(d) < 1e-12:
            continue
        x0 = max(int(min(pax, pbx, pcx)), 0)
        x1 = min(int(max(pax, pbx, pcx)) + 2, tile)
        y0 = max(int(min(pay, pby, pcy)), 0)
        y1 = min(int(max(pay, pby, pcy)) + 2, tile)
        if x0 >= x1 or y0 >= y1:
            continue
        xs = (np.arange(x0, x1) + 0.5)[None, :]
        ys = (np.arange(y0, y1) + 0.5)[:, None]
        w0 = ((pbx - xs) * (pcy - ys) - (pcx - xs) * (pby - ys)) / d
        w1 = ((pcx - xs) * (pay - ys) - (pax - xs) * (pcy - ys)) / d
        w2 = 1.0 - w0 - w1
        mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not mask.any():
            continue
        z = w0 * azs[f] + w1 * bzs[f] + w2 * czs[f]
        window = zbuf[y0:y1, x0:x1]
        closer = mask & (z < window)
        window[closer] = z[closer]
        pix[y0:y1, x0:x1][closer] = colors[f]
    return pix


def render_multiview(mesh: TriMesh, size: int = 256) -> Image:
    """Render the four standard views into one size x size image."""
    if size < MIN_SIZE:
        raise ValueError(f"size must be at least {MIN_SIZE}")
    norm, _ = normalize(mesh)  # raises DegenerateMesh for unrenderable input
    bounding_box(norm)
    half0 = size // 2
    half1 = size - half0
    canvas = np.empty((size, size, 3), dtype=np.uint8)
    canvas[:] = _BACKGROUND
    for row in range(2):
        for col in range(2):
            tile = half0 if row == 0 else half1
            tile_w = half0 if col == 0 else half1
            t = min(tile, tile_w)
            img = _rasterize_tile(norm.vertices, norm.faces,
                                  _VIEWS[_VIEW_ORDER[row][col]], t)
            y0 = 0 if row == 0 else half0
            x0 = 0 if col == 0 else half0
            canvas[y0 : y0 + t, x0 : x0 + t] = img
    return Image(size, size, canvas.tobytes())


def encode_png(img: Image) -> bytes:
    """Minimal RGB8 PNG encoding (filter 0 rows, one IDAT)."""
    raw = bytearray()
    stride = img.width * 3
    for y in range(img.height):
        raw.append(0)
        raw.extend(img.rgb[y * stride : (y + 1) * stride])

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(bytes(raw), 9))
        + chunk(b"IEND", b"")
    )


def write_png(img: Image, path: str):
    """Encode and write to disk; file-system errors surface as OSError."""
    with open(path, "wb") as fh:
        fh.write(encode_png(img))
