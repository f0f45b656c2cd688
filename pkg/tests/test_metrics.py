import numpy as np
import pytest

from evocad.csg import compile_source, plate_program, compile_program
from evocad.errors import EmptyCloud, EmptyUnion
from evocad.geometry import PointCloud, SimilarityTransform, transform_mesh
from evocad.metrics import (
    IcpConfig,
    MetricReport,
    full_report,
    hdd,
    icp_align,
    iou_dsc,
    pcd,
    topology,
)

from helpers import cube_mesh, open_box_mesh


def brute_pcd(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return 0.5 * d.min(axis=1).mean() + 0.5 * d.min(axis=0).mean()


def brute_hdd(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_point_metrics_match_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = rng.normal(size=(200, 3))
        b = rng.normal(size=(200, 3)) * rng.uniform(0.5, 2.0)
        ca, cb = PointCloud(a, 0), PointCloud(b, 0)
        assert abs(pcd(ca, cb) - brute_pcd(a, b)) < 1e-12
        assert abs(hdd(ca, cb) - brute_hdd(a, b)) < 1e-12


def test_point_metrics_are_symmetric():
    rng = np.random.default_rng(3)
    a = PointCloud(rng.normal(size=(100, 3)), 0)
    b = PointCloud(rng.normal(size=(100, 3)), 0)
    assert pcd(a, b) == pcd(b, a)
    assert hdd(a, b) == hdd(b, a)


def test_empty_cloud_rejected():
    ok = PointCloud(np.zeros((3, 3)), 0)
    with pytest.raises(EmptyCloud):
        pcd(PointCloud(np.zeros((0, 3)), 0), ok)


def test_identical_meshes_are_exactly_perfect():
    mesh = compile_program(plate_program(4.0, 3.0, 0.5, 2))
    report = full_report(mesh, mesh)
    assert report.pcd == 0.0
    assert report.hdd == 0.0
    assert report.iou == 1.0
    assert report.dsc == 1.0
    assert report.t_err == 0
    assert report.t_corr is True


def test_icp_recovers_small_rigid_motion():
    mesh = compile_program(plate_program(4.0, 3.0, 0.5, 1))
    angle = np.radians(8.0)
    rot = np.array(
        [
            [np.cos(angle), -np.sin(angle), 0.0],
            [np.sin(angle), np.cos(angle), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    moved = transform_mesh(mesh, SimilarityTransform(1.0, rot, np.array([0.1, -0.05, 0.02])))
    _, aligned = icp_align(moved, mesh, IcpConfig(seed=4))
    gap = np.abs(aligned.vertices - mesh.vertices).max()
    assert gap < 1e-6


def test_iou_dsc_half_overlapping_cubes():
    a = cube_mesh(center=(0.5, 0.5, 0.5), size=1.0)
    b = cube_mesh(center=(1.0, 0.5, 0.5), size=1.0)
    iou, dsc = iou_dsc(a, b, resolution=64)
    assert abs(iou - 1.0 / 3.0) < 0.02
    assert abs(dsc - 0.5) < 0.02


def test_iou_dsc_disjoint_cubes():
    a = cube_mesh(center=(0.0, 0.0, 0.0), size=1.0)
    b = cube_mesh(center=(3.0, 0.0, 0.0), size=1.0)
    iou, dsc = iou_dsc(a, b, resolution=32)
    assert iou == 0.0
    assert dsc == 0.0


def test_iou_empty_union():
    # a sheet far thinner than any voxel never straddles a cell center
    sheet = compile_source("part z 0 0.0001 { rect 2 2 }")
    with pytest.raises(EmptyUnion):
        iou_dsc(sheet, sheet, resolution=4)


def test_topology_requires_closed_meshes():
    assert topology(open_box_mesh(), cube_mesh()) is None
    result = topology(cube_mesh(), cube_mesh())
    assert result is not None
    assert result.t_err == 0 and result.t_corr


def test_topology_hole_count_gap():
    cube = compile_source("part z 0 1 { rect 2 2 }")
    plate1 = compile_program(plate_program(4.0, 3.0, 0.5, 1))
    plate2 = compile_program(plate_program(4.0, 3.0, 0.5, 2))
    r1 = topology(cube, plate1)
    assert (r1.chi_gen, r1.chi_gt, r1.t_err, r1.t_corr) == (2, 0, 2, False)
    r2 = topology(cube, plate2)
    assert (r2.chi_gen, r2.chi_gt, r2.t_err) == (2, -2, 4)


def test_full_report_open_mesh_drops_topology_and_overlap():
    report = full_report(open_box_mesh(), cube_mesh())
    assert not report.gen_watertight
    assert report.gt_watertight
    assert report.t_err is None
    assert report.t_corr is None
    assert report.chi_gen is None
    assert report.iou is None
    assert report.dsc is None
    # point metrics still present
    assert report.pcd is not None and report.pcd >= 0.0
    assert report.hdd is not None


def test_full_report_is_scale_invariant():
    mesh = compile_program(plate_program(4.0, 3.0, 0.5, 2))
    tripled = transform_mesh(mesh, SimilarityTransform(3.0, np.eye(3), np.zeros(3)))
    report = full_report(tripled, mesh)
    assert report.pcd < 1e-9
    assert report.hdd < 1e-9
    assert report.iou > 0.99
    assert report.t_err == 0


def test_metric_report_dict_round_trip():
    report = full_report(cube_mesh(), cube_mesh())
    data = report.to_dict()
    assert set(data) == {
        "pcd", "hdd", "iou", "dsc", "t_err", "t_corr",
        "chi_gen", "chi_gt", "gen_watertight", "gt_watertight",
    }
    assert MetricReport.from_dict(data) == report
