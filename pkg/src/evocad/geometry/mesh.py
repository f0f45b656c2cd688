"""Welded triangle meshes plus the handful of operations everything else needs.

A TriMesh is always in welded form: no two vertices share a quantization
key, every face references three distinct vertices, and no vertex is
unreferenced.  Topology queries (Euler characteristic, watertightness)
only make sense on meshes in this form, which is why construction goes
through weld() rather than raw arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateMesh, EmptyCloud

# vertices closer than this along every axis collapse into one
WELD_GRID = 1e-7

_ROTATION_TOL = 1e-9


def _check_rotation(rotation: np.ndarray) -> np.ndarray:
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    if not np.allclose(r @ r.T, np.eye(3), atol=1e-8):
        raise ValueError("rotation matrix is not orthonormal")
    if np.linalg.det(r) < 0:
        raise ValueError("rotation matrix has negative determinant (reflection)")
    return r


@dataclass(frozen=True)
class RigidTransform:
    """Proper rotation followed by translation: p -> R p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "translation", t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class SimilarityTransform:
    """Uniform scale, proper rotation, translation: p -> s R p + t."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, np.eye(3), np.zeros(3))

    @property
    def rigid(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.translation)

    def is_identity(self) -> bool:
        return (
            self.scale == 1.0
            and np.array_equal(self.rotation, np.eye(3))
            and not self.translation.any()
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return (self.scale * pts) @ self.rotation.T + self.translation

    def compose(self, inner: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equal to applying `inner` first, then self."""
        scale = self.scale * inner.scale
        rotation = self.rotation @ inner.rotation
        translation = self.scale * (self.rotation @ inner.translation) + self.translation
        return SimilarityTransform(scale, rotation, translation)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if not (lo <= hi).all():
            raise ValueError("Aabb min must not exceed max")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def max_extent(self) -> float:
        return float(self.extent.max())

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def padded(self, amount: float) -> "Aabb":
        return Aabb(self.min - amount, self.max + amount)

    @property
    def corners(self) -> np.ndarray:
        lo, hi = self.min, self.max
        return np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
        )


@dataclass(frozen=True)
class PointCloud:
    """Points sampled from a surface, tagged with the seed that produced them."""

    points: np.ndarray
    seed: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle soup in welded form.

    dropped_degenerate counts input facets that collapsed (two corners
    welded together) and were discarded during construction.
    """

    vertices: np.ndarray
    faces: np.ndarray
    dropped_degenerate: int = 0

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (F, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if f.size and ((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])).any():
            raise ValueError("face references the same vertex twice")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def edge_use_counts(self) -> np.ndarray:
        """How many faces use each undirected edge, one entry per distinct edge."""
        cached = self.__dict__.get("_edge_counts")
        if cached is None:
            f = self.faces
            edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
            edges = np.sort(edges, axis=1)
            codes = edges[:, 0] * np.int64(max(self.num_vertices, 1)) + edges[:, 1]
            _, cached = np.unique(codes, return_counts=True)
            object.__setattr__(self, "_edge_counts", cached)
        return cached


def weld(triangles: np.ndarray, grid: float = WELD_GRID) -> TriMesh:
    """Build a TriMesh from raw (F, 3, 3) triangle coordinates.

    Vertices are merged when they quantize to the same integer cell of
    size `grid` on all three axes; the first occurrence's coordinates
    win, so data already welded survives a round trip bit-exactly.
    """
    tris = np.asarray(triangles, dtype=np.float64)
    if tris.size == 0:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    tris = tris.reshape(-1, 3, 3)
    pts = tris.reshape(-1, 3)
    if not np.isfinite(pts).all():
        raise ValueError("triangle coordinates contain NaN or infinity")
    keys = np.round(pts / grid).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    verts = pts[first]
    faces = inverse.reshape(-1)[: pts.shape[0]].reshape(-1, 3).astype(np.int64)
    keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 2] != faces[:, 0])
    dropped = int((~keep).sum())
    faces = faces[keep]
    used = np.unique(faces)
    if used.size != verts.shape[0]:
        remap = np.full(verts.shape[0], -1, dtype=np.int64)
        remap[used] = np.arange(used.size)
        verts = verts[used]
        faces = remap[faces]
    return TriMesh(verts, faces, dropped)


def as_triangles(mesh: TriMesh) -> np.ndarray:
    """Expand back to raw (F, 3, 3) coordinates."""
    return mesh.vertices[mesh.faces]


def merge_meshes(meshes) -> TriMesh:
    """Concatenate several meshes and re-weld into one."""
    parts = [as_triangles(m) for m in meshes if m.num_faces]
    if not parts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    merged = weld(np.concatenate(parts))
    dropped = sum(m.dropped_degenerate for m in meshes)
    return TriMesh(merged.vertices, merged.faces, dropped + merged.dropped_degenerate)


def euler_characteristic(mesh: TriMesh) -> int:
    """V - E + F over the welded mesh."""
    edges = int(mesh.edge_use_counts().shape[0])
    return mesh.num_vertices - edges + mesh.num_faces


def is_watertight(mesh: TriMesh) -> bool:
    """True when every edge is shared by exactly two faces.

    A closed surface needs at least four faces, so anything smaller is
    rejected up front.
    """
    if mesh.num_faces < 4:
        return False
    return bool((mesh.edge_use_counts() == 2).all())


def bounding_box(mesh: TriMesh) -> Aabb:
    if mesh.num_vertices == 0:
        raise DegenerateMesh("empty mesh has no bounding box")
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def transform_mesh(mesh: TriMesh, tf: SimilarityTransform) -> TriMesh:
    return TriMesh(tf.apply(mesh.vertices), mesh.faces, mesh.dropped_degenerate)


def normalize(mesh: TriMesh) -> tuple[TriMesh, SimilarityTransform]:
    """Center on the vertex centroid and scale the longest box side to 1.

    Returns the normalized mesh and the transform that was applied.
    """
    if mesh.num_faces == 0:
        raise DegenerateMesh("cannot normalize a mesh with no faces")
    box = bounding_box(mesh)
    extent = box.max_extent
    if extent <= 0.0:
        raise DegenerateMesh("mesh has zero spatial extent")
    centroid = mesh.vertices.mean(axis=0)
    scale = 1.0 / extent
    tf = SimilarityTransform(scale, np.eye(3), -scale * centroid)
    return transform_mesh(mesh, tf), tf


def _face_areas(mesh: TriMesh) -> np.ndarray:
    tris = as_triangles(mesh)
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def surface_area(mesh: TriMesh) -> float:
    return float(_face_areas(mesh).sum())


def sample_surface(mesh: TriMesh, count: int, seed: int) -> PointCloud:
    """Draw points uniformly over the surface, area-weighted per face.

    Same mesh, count and seed always give the identical cloud.
    """
    if count <= 0:
        raise EmptyCloud("sample count must be positive")
    if mesh.num_faces == 0:
        raise DegenerateMesh("cannot sample an empty mesh")
    areas = _face_areas(mesh)
    total = areas.sum()
    if total <= 0.0:
        raise DegenerateMesh("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    face_idx = rng.choice(mesh.num_faces, size=count, p=areas / total)
    # square-root trick maps unit-square randoms to uniform barycentrics
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    tris = as_triangles(mesh)[face_idx]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    pts = (1.0 - r1)[:, None] * a + (r1 * (1.0 - r2))[:, None] * b + (r1 * r2)[:, None] * c
    return PointCloud(pts, seed)
