from .mesh import (
    Aabb,
    PointCloud,
    RigidTransform,
    SimilarityTransform,
    TriMesh,
    as_triangles,
    bounding_box,
    euler_characteristic,
    is_watertight,
    merge_meshes,
    normalize,
    sample_surface,
    transform_mesh,
    weld,
)
from .stl import load_stl, write_stl
from .voxel import VoxelGrid, voxelize

__all__ = [
    "Aabb",
    "PointCloud",
    "RigidTransform",
    "SimilarityTransform",
    "TriMesh",
    "VoxelGrid",
    "as_triangles",
    "bounding_box",
    "euler_characteristic",
    "is_watertight",
    "load_stl",
    "merge_meshes",
    "normalize",
    "sample_surface",
    "transform_mesh",
    "voxelize",
    "weld",
]
