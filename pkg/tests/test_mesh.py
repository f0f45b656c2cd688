import numpy as np
import pytest

from evocad.errors import DegenerateMesh
from evocad.geometry import (
    SimilarityTransform,
    bounding_box,
    euler_characteristic,
    is_watertight,
    merge_meshes,
    normalize,
    sample_surface,
    transform_mesh,
    weld,
)
from evocad.geometry.mesh import RigidTransform, surface_area

from helpers import cube_mesh, cube_triangles, open_box_mesh


def test_weld_cube_merges_shared_corners():
    mesh = cube_mesh()
    assert mesh.num_vertices == 8
    assert mesh.num_faces == 12
    assert mesh.dropped_degenerate == 0


def test_weld_collapses_near_duplicates_keeping_first_coords():
    tris = cube_triangles()
    jittered = tris.copy()
    # nudge later occurrences by much less than the weld grid
    jittered[6:] += 1e-9
    mesh = weld(np.concatenate([tris[:6], jittered[6:]]))
    assert mesh.num_vertices == 8
    # first occurrence of every corner is unperturbed
    expected = {tuple(p) for p in tris.reshape(-1, 3).round(12)}
    got = {tuple(p) for p in mesh.vertices.round(12)}
    assert got == expected


def test_weld_drops_collapsed_facets():
    good = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=float)
    bad = np.array([[[0, 0, 0], [1e-9, 0, 0], [0, 1, 0]]])
    mesh = weld(np.concatenate([good, bad]))
    assert mesh.num_faces == 1
    assert mesh.dropped_degenerate == 1


def test_weld_drops_unreferenced_vertices():
    good = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=float)
    bad = np.array([[[5, 5, 5], [5 + 1e-9, 5, 5], [9, 9, 9]]])
    mesh = weld(np.concatenate([good, bad]))
    assert mesh.num_vertices == 3
    assert mesh.num_faces == 1


def test_euler_characteristic_cube():
    mesh = cube_mesh()
    assert euler_characteristic(mesh) == 2
    assert mesh.edge_use_counts().shape[0] == 18


def test_euler_two_disjoint_cubes():
    merged = merge_meshes([cube_mesh(center=(0, 0, 0)), cube_mesh(center=(10, 0, 0))])
    assert merged.num_vertices == 16
    assert merged.num_faces == 24
    assert euler_characteristic(merged) == 4
    assert is_watertight(merged)


def test_cube_is_watertight():
    assert is_watertight(cube_mesh())


def test_open_box_is_not_watertight():
    mesh = open_box_mesh()
    assert not is_watertight(mesh)
    counts = mesh.edge_use_counts()
    assert (counts == 1).sum() == 4  # rim of the missing face


def test_single_triangle_not_watertight():
    mesh = weld(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=float))
    assert not is_watertight(mesh)


def test_normalize_cube():
    mesh = cube_mesh(center=(1.0, 1.0, 1.0), size=2.0)
    norm, tf = normalize(mesh)
    box = bounding_box(norm)
    assert np.allclose(box.min, [-0.5, -0.5, -0.5])
    assert np.allclose(box.max, [0.5, 0.5, 0.5])
    assert np.allclose(norm.vertices.mean(axis=0), 0.0)
    # the returned transform reproduces the normalization
    assert np.allclose(tf.apply(mesh.vertices), norm.vertices)


def test_normalize_longest_axis_wins():
    tris = cube_triangles() * np.array([2.0, 1.0, 0.5])
    norm, _ = normalize(weld(tris))
    extent = bounding_box(norm).extent
    assert np.isclose(extent.max(), 1.0)
    assert np.allclose(extent, [1.0, 0.5, 0.25])


def test_normalize_rejects_empty():
    degenerate = weld(np.zeros((2, 3, 3)))
    with pytest.raises(DegenerateMesh):
        normalize(degenerate)


def test_transform_identity_is_bit_exact():
    mesh = cube_mesh(center=(0.3, -0.7, 0.9), size=1.7)
    out = transform_mesh(mesh, SimilarityTransform.identity())
    assert np.array_equal(out.vertices, mesh.vertices)
    assert np.array_equal(out.faces, mesh.faces)


def test_similarity_compose_matches_sequential_apply():
    rng = np.random.default_rng(11)
    for _ in range(20):
        angles = rng.uniform(0, 2 * np.pi, size=2)

        def rot_z(a):
            return np.array(
                [[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]]
            )

        t1 = SimilarityTransform(rng.uniform(0.5, 2), rot_z(angles[0]), rng.normal(size=3))
        t2 = SimilarityTransform(rng.uniform(0.5, 2), rot_z(angles[1]), rng.normal(size=3))
        pts = rng.normal(size=(7, 3))
        assert np.allclose(t1.compose(t2).apply(pts), t1.apply(t2.apply(pts)), atol=1e-12)


def test_rigid_transform_rejects_non_rotation():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 2.0, np.zeros(3))
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))  # reflection


def test_sample_surface_deterministic():
    mesh = cube_mesh()
    a = sample_surface(mesh, 256, seed=5)
    b = sample_surface(mesh, 256, seed=5)
    c = sample_surface(mesh, 256, seed=6)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert a.seed == 5


def test_sample_surface_points_lie_on_cube_faces():
    mesh = cube_mesh(size=2.0)  # faces at +-1
    cloud = sample_surface(mesh, 2000, seed=0)
    face_coord = np.max(np.abs(cloud.points), axis=1)
    assert np.allclose(face_coord, 1.0, atol=1e-12)


def test_sample_surface_mean_near_centroid():
    cloud = sample_surface(cube_mesh(), 10000, seed=1)
    assert np.allclose(cloud.points.mean(axis=0), 0.0, atol=0.05)


def test_sample_surface_is_area_weighted():
    # two parallel squares, areas 1 and 4
    small = [[[0, 0, 0], [1, 0, 0], [1, 1, 0]], [[0, 0, 0], [1, 1, 0], [0, 1, 0]]]
    big = [[[0, 0, 5], [2, 0, 5], [2, 2, 5]], [[0, 0, 5], [2, 2, 5], [0, 2, 5]]]
    mesh = weld(np.array(small + big, dtype=float))
    assert np.isclose(surface_area(mesh), 5.0)
    cloud = sample_surface(mesh, 20000, seed=3)
    frac_big = (cloud.points[:, 2] > 2.5).mean()
    assert abs(frac_big - 0.8) < 0.02


def test_surface_area_cube():
    assert np.isclose(surface_area(cube_mesh(size=2.0)), 24.0)
