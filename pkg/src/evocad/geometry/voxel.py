"""Solid voxelization by vertical parity raycasting.

One ray per (x, y) cell column, cast along +z through the column center.
Each transversal surface crossing flips the inside/outside state of every
cell center above it, so occupancy falls out of a cumulative sum mod 2.
Columns that graze a triangle edge, hit a vertical facet, or cross a
surface exactly at a cell-center height are ambiguous; those are re-cast
with a small deterministic jitter derived from the cell index, never from
global state, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NotWatertight
from .mesh import Aabb, TriMesh, as_triangles, is_watertight

# barycentric coordinates this close to an edge make a column ambiguous
_EDGE_TOL = 1e-9
# crossing heights this close (in cell units) to a cell center are ties
_TIE_TOL = 1e-9
_MAX_RECAST = 8


@dataclass(frozen=True)
class VoxelGrid:
    """Occupancy samples on a cubic lattice anchored at `origin`."""

    origin: np.ndarray
    cell_size: float
    occupancy: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 3:
            raise ValueError(f"occupancy must be 3-D, got shape {occ.shape}")
        if not (self.cell_size > 0):
            raise ValueError("cell_size must be positive")
        occ.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def occupied_volume(self) -> float:
        return self.occupied_count * self.cell_size**3


def _jitter(i: int, j: int, attempt: int, cell: float) -> tuple[float, float]:
    """Deterministic sub-cell offset for re-casting an ambiguous column."""
    h = ((i * 73856093) ^ (j * 19349663) ^ (attempt * 2654435761)) & 0xFFFFFFFF
    ux = (h & 0xFFFF) / 65535.0 - 0.5
    uy = ((h >> 16) & 0xFFFF) / 65535.0 - 0.5
    mag = 0.03 * attempt * cell
    ox = (ux + (0.25 if ux >= 0 else -0.25)) * mag
    oy = (uy + (0.25 if uy >= 0 else -0.25)) * mag
    return ox, oy


class _TriangleTable:
    """Per-triangle arrays shared by the bulk pass and the re-cast fallback."""

    def __init__(self, tris: np.ndarray):
        self.a = tris[:, 0]
        self.b = tris[:, 1]
        self.c = tris[:, 2]
        self.d = (self.b[:, 0] - self.a[:, 0]) * (self.c[:, 1] - self.a[:, 1]) - (
            self.c[:, 0] - self.a[:, 0]
        ) * (self.b[:, 1] - self.a[:, 1])
        span = np.maximum(
            np.abs(self.b[:, :2] - self.a[:, :2]).max(axis=1),
            np.abs(self.c[:, :2] - self.a[:, :2]).max(axis=1),
        )
        # |d| of a healthy triangle scales with its squared footprint
        self.vertical = np.abs(self.d) <= 1e-12 * span**2

    def column_parity(self, x: float, y: float, lo_z: float, cell: float, nz: int):
        """Crossing parity for one ray; returns (occupancy column, clean flag)."""
        keep = ~self.vertical
        a, b, c, d = self.a[keep], self.b[keep], self.c[keep], self.d[keep]
        w0 = ((b[:, 0] - x) * (c[:, 1] - y) - (c[:, 0] - x) * (b[:, 1] - y)) / d
        w1 = ((c[:, 0] - x) * (a[:, 1] - y) - (a[:, 0] - x) * (c[:, 1] - y)) / d
        w2 = 1.0 - w0 - w1
        inside = (w0 > _EDGE_TOL) & (w1 > _EDGE_TOL) & (w2 > _EDGE_TOL)
        graze = (
            (np.abs(w0) <= _EDGE_TOL) | (np.abs(w1) <= _EDGE_TOL) | (np.abs(w2) <= _EDGE_TOL)
        )
        z = w0[inside] * a[inside, 2] + w1[inside] * b[inside, 2] + w2[inside] * c[inside, 2]
        t = (z - lo_z) / cell - 0.5
        clean = not graze.any() and not (np.abs(t - np.round(t)) <= _TIE_TOL).any()
        ks = np.clip(np.floor(t).astype(np.int64) + 1, 0, nz)
        flips = np.zeros(nz + 1, dtype=np.int64)
        np.add.at(flips, ks, 1)
        return (np.cumsum(flips)[:nz] % 2).astype(bool), clean


def voxelize(mesh: TriMesh, bounds: Aabb, resolution: int) -> VoxelGrid:
    """Sample solid occupancy of `mesh` over `bounds`.

    The cell is cubic: bounds.max_extent / resolution on every axis, with
    per-axis cell counts rounded up to cover the box.  The mesh must be
    watertight; parity raycasting has no meaning for open surfaces.
    """
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    if not is_watertight(mesh):
        raise NotWatertight("voxelization needs a closed surface")
    lo = bounds.min
    big = bounds.max_extent
    if big <= 0:
        raise ValueError("bounds have zero extent")
    cell = big / resolution
    dims = np.maximum(1, np.ceil(bounds.extent / cell - 1e-12)).astype(np.int64)
    nx, ny, nz = (int(v) for v in dims)
    xs = lo[0] + (np.arange(nx) + 0.5) * cell
    ys = lo[1] + (np.arange(ny) + 0.5) * cell

    tris = as_triangles(mesh)
    table = _TriangleTable(tris)
    delta = np.zeros((nx, ny, nz + 1), dtype=np.int64)
    ambiguous = np.zeros((nx, ny), dtype=bool)

    for f in range(tris.shape[0]):
        corners = tris[f]
        xmin, ymin = corners[:, 0].min(), corners[:, 1].min()
        xmax, ymax = corners[:, 0].max(), corners[:, 1].max()
        # widen the index window by one column so edge-tolerance checks
        # cannot miss a center sitting just outside the exact bbox
        i0 = max(int(np.searchsorted(xs, xmin)) - 1, 0)
        i1 = min(int(np.searchsorted(xs, xmax)) + 1, nx)
        j0 = max(int(np.searchsorted(ys, ymin)) - 1, 0)
        j1 = min(int(np.searchsorted(ys, ymax)) + 1, ny)
        if i0 >= i1 or j0 >= j1:
            continue
        if table.vertical[f]:
            ambiguous[i0:i1, j0:j1] = True
            continue
        ax, ay, az = corners[0]
        bx, by, bz = corners[1]
        cx, cy, cz = corners[2]
        X = xs[i0:i1, None]
        Y = ys[None, j0:j1]
        d = table.d[f]
        w0 = ((bx - X) * (cy - Y) - (cx - X) * (by - Y)) / d
        w1 = ((cx - X) * (ay - Y) - (ax - X) * (cy - Y)) / d
        w2 = 1.0 - w0 - w1
        inside = (w0 > _EDGE_TOL) & (w1 > _EDGE_TOL) & (w2 > _EDGE_TOL)
        graze = (
            (np.abs(w0) <= _EDGE_TOL) | (np.abs(w1) <= _EDGE_TOL) | (np.abs(w2) <= _EDGE_TOL)
        )
        ambiguous[i0:i1, j0:j1] |= graze
        if not inside.any():
            continue
        z = w0 * az + w1 * bz + w2 * cz
        t = (z - lo[2]) / cell - 0.5
        ambiguous[i0:i1, j0:j1] |= inside & (np.abs(t - np.round(t)) <= _TIE_TOL)
        ks = np.clip(np.floor(t).astype(np.int64) + 1, 0, nz)
        ii, jj = np.nonzero(inside)
        np.add.at(delta, (ii + i0, jj + j0, ks[inside]), 1)

    occupancy = (np.cumsum(delta, axis=2)[:, :, :nz] % 2).astype(bool)

    for i, j in np.argwhere(ambiguous):
        column = None
        for attempt in range(1, _MAX_RECAST + 1):
            ox, oy = _jitter(int(i), int(j), attempt, cell)
            column, clean = table.column_parity(xs[i] + ox, ys[j] + oy, lo[2], cell, nz)
            if clean:
                break
        occupancy[i, j, :] = column

    return VoxelGrid(lo.copy(), cell, occupancy)
