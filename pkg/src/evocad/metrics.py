"""Geometric and topological similarity between a generated mesh and a target.

Spatial metrics follow a fixed protocol: topology is compared on the raw
meshes, then both are normalized (centroid to origin, longest box side 1),
the generated mesh is aligned onto the target, and point metrics are
computed on fresh surface samples.  Volume overlap uses a shared voxel
lattice over the padded union box and is only defined when both meshes
are watertight.  Topology fields are absent whenever either mesh is open,
because an open mesh has no meaningful Euler characteristic.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, EmptyUnion
from .geometry import (
    Aabb,
    PointCloud,
    SimilarityTransform,
    TriMesh,
    bounding_box,
    euler_characteristic,
    is_watertight,
    normalize,
    sample_surface,
    transform_mesh,
    voxelize,
)

DEFAULT_SAMPLE_COUNT = 10_000
DEFAULT_RESOLUTION = 64
# fraction of the longest union-box side added as padding on every side
UNION_PADDING = 0.02


@dataclass(frozen=True)
class IcpConfig:
    max_iterations: int = 50
    convergence_tol: float = 1e-6
    sample_count: int = 2048
    seed: int = 0
    with_scaling: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.sample_count < 3:
            raise ValueError("sample_count must be at least 3")


def pcd(a: PointCloud, b: PointCloud) -> float:
    """Symmetric chamfer distance: half the mean nearest-neighbor distance
    from a to b plus half the mean from b to a."""
    pa, pb = _cloud_pair(a, b)
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    return 0.5 * float(d_ab.mean()) + 0.5 * float(d_ba.mean())


def hdd(a: PointCloud, b: PointCloud) -> float:
    """Symmetric Hausdorff distance: the worst nearest-neighbor distance
    in either direction."""
    pa, pb = _cloud_pair(a, b)
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    return max(float(d_ab.max()), float(d_ba.max()))


def _cloud_pair(a: PointCloud, b: PointCloud):
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("point metrics need non-empty clouds")
    return a.points, b.points


def _umeyama(src: np.ndarray, dst: np.ndarray, with_scaling: bool) -> SimilarityTransform:
    """Least-squares similarity (or rigid) fit mapping src points onto dst."""
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    cs = src - mu_s
    cd = dst - mu_d
    cov = cd.T @ cs / src.shape[0]
    U, S, Vt = np.linalg.svd(cov)
    sign = np.sign(np.linalg.det(U @ Vt))
    D = np.diag([1.0, 1.0, sign])
    R = U @ D @ Vt
    if with_scaling:
        var_s = (cs**2).sum() / src.shape[0]
        scale = float((S * np.diag(D)).sum() / var_s) if var_s > 0 else 1.0
        scale = max(scale, 1e-12)
    else:
        scale = 1.0
    t = mu_d - scale * R @ mu_s
    return SimilarityTransform(scale, R, t)


def _run_icp(src: np.ndarray, dst: np.ndarray, tree: cKDTree,
             init: SimilarityTransform, cfg: IcpConfig):
    total = init
    current = src if init.is_identity() else init.apply(src)
    prev_rms = None
    rms = np.inf
    for _ in range(cfg.max_iterations):
        dist, idx = tree.query(current)
        rms = float(np.sqrt((dist**2).mean()))
        if rms == 0.0:
            return total, rms
        step = _umeyama(current, dst[idx], cfg.with_scaling)
        total = step.compose(total)
        current = step.apply(current)
        if prev_rms is not None and abs(prev_rms - rms) < cfg.convergence_tol:
            break
        prev_rms = rms
    dist, _ = tree.query(current)
    return total, float(np.sqrt((dist**2).mean()))


def _pca_starts(src: np.ndarray, dst: np.ndarray):
    """Candidate initial poses that map the principal axes of src onto dst."""
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    cs = src - mu_s
    cd = dst - mu_d
    var_s = float((cs**2).sum())
    var_d = float((cd**2).sum())
    scale = np.sqrt(var_d / var_s) if var_s > 0 else 1.0
    _, vs = np.linalg.eigh(cs.T @ cs)
    _, vd = np.linalg.eigh(cd.T @ cd)
    if np.linalg.det(vs) < 0:
        vs = vs * np.array([1.0, 1.0, -1.0])
    if np.linalg.det(vd) < 0:
        vd = vd * np.array([1.0, 1.0, -1.0])
    starts = []
    for signs in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
        rot = vd @ np.diag(signs) @ vs.T
        starts.append(SimilarityTransform(scale, rot, mu_d - scale * rot @ mu_s))
    return starts


def icp_align(moving: TriMesh, fixed: TriMesh,
              cfg: IcpConfig | None = None) -> tuple[SimilarityTransform, TriMesh]:
    """Iterative closest point from `moving` onto `fixed`.

    Runs once from the identity pose and once from each principal-axes
    alignment, keeping whichever converges tightest; the multi-start is
    what lets moderate rotations escape local minima.  Both meshes are
    sampled with the same seed, so aligning a mesh with a transformed
    copy of itself converges to machine precision.  Returns the winning
    transform and the transformed moving mesh.
    """
    cfg = cfg or IcpConfig()
    src = sample_surface(moving, cfg.sample_count, cfg.seed).points
    dst = sample_surface(fixed, cfg.sample_count, cfg.seed).points
    tree = cKDTree(dst)
    best_tf, best_rms = _run_icp(src, dst, tree, SimilarityTransform.identity(), cfg)
    if best_rms > 1e-12:
        for start in _pca_starts(src, dst):
            tf, rms = _run_icp(src, dst, tree, start, cfg)
            if rms < best_rms:
                best_tf, best_rms = tf, rms
    if best_tf.is_identity():
        return SimilarityTransform.identity(), moving
    return best_tf, transform_mesh(moving, best_tf)


def iou_dsc(a: TriMesh, b: TriMesh, resolution: int = DEFAULT_RESOLUTION) -> tuple[float, float]:
    """Volume overlap on a shared voxel lattice: intersection-over-union
    and the dice coefficient.  Both meshes must be watertight."""
    box = bounding_box(a).union(bounding_box(b))
    bounds = Aabb(*_padded(box))
    grid_a = voxelize(a, bounds, resolution)
    grid_b = voxelize(b, bounds, resolution)
    occ_a, occ_b = _common_shape(grid_a.occupancy, grid_b.occupancy)
    n_a = int(occ_a.sum())
    n_b = int(occ_b.sum())
    inter = int((occ_a & occ_b).sum())
    union = n_a + n_b - inter
    if union == 0:
        raise EmptyUnion("neither mesh occupies any voxel")
    iou = inter / union
    dsc = 2.0 * inter / (n_a + n_b)
    return float(iou), float(dsc)


def _padded(box: Aabb):
    pad = UNION_PADDING * box.max_extent
    return box.min - pad, box.max + pad


def _common_shape(a: np.ndarray, b: np.ndarray):
    # identical bounds and resolution give identical dims; guard anyway
    if a.shape == b.shape:
        return a, b
    dims = [min(x, y) for x, y in zip(a.shape, b.shape)]
    return a[: dims[0], : dims[1], : dims[2]], b[: dims[0], : dims[1], : dims[2]]


class TopologyResult(NamedTuple):
    t_err: int
    t_corr: bool
    chi_gen: int
    chi_gt: int


def topology(gen: TriMesh, gt: TriMesh) -> TopologyResult | None:
    """Euler-characteristic agreement on the raw meshes.

    None when either mesh is open: topology error and match are undefined
    without a closed surface.
    """
    if not (is_watertight(gen) and is_watertight(gt)):
        return None
    chi_gen = euler_characteristic(gen)
    chi_gt = euler_characteristic(gt)
    return TopologyResult(abs(chi_gt - chi_gen), chi_gen == chi_gt, chi_gen, chi_gt)


@dataclass(frozen=True)
class MetricReport:
    """Flat metric record; None marks fields the protocol leaves undefined."""

    pcd: float | None = None
    hdd: float | None = None
    iou: float | None = None
    dsc: float | None = None
    t_err: int | None = None
    t_corr: bool | None = None
    chi_gen: int | None = None
    chi_gt: int | None = None
    gen_watertight: bool = False
    gt_watertight: bool = False

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def full_report(gen: TriMesh, gt: TriMesh, cfg: IcpConfig | None = None,
                resolution: int = DEFAULT_RESOLUTION, seed: int = 0,
                sample_count: int = DEFAULT_SAMPLE_COUNT) -> MetricReport:
    """Run the whole comparison protocol for one generated/target pair."""
    cfg = cfg or IcpConfig(seed=seed)
    gen_wt = is_watertight(gen)
    gt_wt = is_watertight(gt)
    topo = topology(gen, gt)

    gen_n, _ = normalize(gen)
    gt_n, _ = normalize(gt)
    _, gen_aligned = icp_align(gen_n, gt_n, cfg)

    cloud_gen = sample_surface(gen_aligned, sample_count, seed)
    cloud_gt = sample_surface(gt_n, sample_count, seed)
    pcd_val = pcd(cloud_gen, cloud_gt)
    hdd_val = hdd(cloud_gen, cloud_gt)

    iou_val = dsc_val = None
    if gen_wt and gt_wt:
        iou_val, dsc_val = iou_dsc(gen_aligned, gt_n, resolution)

    return MetricReport(
        pcd=pcd_val,
        hdd=hdd_val,
        iou=iou_val,
        dsc=dsc_val,
        t_err=topo.t_err if topo else None,
        t_corr=topo.t_corr if topo else None,
        chi_gen=topo.chi_gen if topo else None,
        chi_gt=topo.chi_gt if topo else None,
        gen_watertight=gen_wt,
        gt_watertight=gt_wt,
    )
