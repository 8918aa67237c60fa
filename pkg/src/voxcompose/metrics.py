"""Fidelity metrics: squared Chamfer distance, volumetric mesh IoU,
reference composites, and t-based confidence intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .decode import OccupancyGrid
from .geometry import (
    GeometryError,
    Transform3,
    TriMesh,
    apply_transform,
    is_watertight,
    sample_surface,
)
from .voxelize import cube_from_aabb, solid_occupancy

# brute force below this size: doubles as the oracle path for the spatial index
_EXHAUSTIVE_LIMIT = 256

DEFAULT_IOU_RESOLUTION = 128
DEFAULT_SAMPLE_COUNT = 10_000


@dataclass(frozen=True)
class MetricRecord:
    chamfer_sq: float
    iou: float

    def __post_init__(self):
        if not self.chamfer_sq >= 0:
            raise GeometryError(f"chamfer_sq must be >= 0, got {self.chamfer_sq}")
        if not 0.0 <= self.iou <= 1.0:
            raise GeometryError(f"iou must be in [0, 1], got {self.iou}")


def chamfer_sq(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric squared Chamfer distance, sum-of-means convention.

    mean over a of squared nearest distance into b, plus the same with the
    roles swapped. Exhaustive for small sets, KD-tree above that.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise GeometryError("chamfer distance of an empty point set")
    if max(len(a), len(b)) <= _EXHAUSTIVE_LIMIT:
        diff = a[:, None, :] - b[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())
    da = cKDTree(b).query(a)[0]
    db = cKDTree(a).query(b)[0]
    return float(np.mean(da * da) + np.mean(db * db))


def mesh_iou(a: TriMesh, b: TriMesh, resolution: int = DEFAULT_IOU_RESOLUTION) -> float:
    """Volumetric IoU of two watertight meshes on a shared cubic grid.

    Both meshes are voxelized as solids (surface shell plus flood-filled
    interior) over the joint bounding cube with one voxel of padding.
    """
    if resolution < 32:
        raise GeometryError(f"iou resolution must be >= 32, got {resolution}")
    for name, mesh in (("first", a), ("second", b)):
        if not is_watertight(mesh):
            raise GeometryError(f"{name} mesh is not watertight; interior undefined")
    joint = a.bounds().union(b.bounds())
    origin, edge = cube_from_aabb(joint, resolution, pad_voxels=1)
    occ_a = solid_occupancy(a, origin, edge, resolution)
    occ_b = solid_occupancy(b, origin, edge, resolution)
    union = int(np.count_nonzero(occ_a | occ_b))
    if union == 0:
        raise GeometryError("both meshes voxelized to nothing; IoU undefined")
    inter = int(np.count_nonzero(occ_a & occ_b))
    return inter / union


def reference_composite(
    instances: list[tuple[TriMesh, Transform3]],
    total_samples: int = DEFAULT_SAMPLE_COUNT,
    resolution: int = 64,
    seed: int = 0,
) -> tuple[np.ndarray, OccupancyGrid]:
    """Union-of-inputs reference: surface samples plus solid voxel union.

    The sample budget is split across instances proportionally to transformed
    surface area (cumulative rounding, so the total is exact). Occupancy is
    the OR of each transformed mesh's solid voxelization on the joint cube.
    """
    if not instances:
        raise GeometryError("reference composite needs at least one instance")
    if total_samples < 1:
        raise GeometryError("total_samples must be >= 1")
    meshes = [apply_transform(m, t) for m, t in instances]
    areas = np.array([m.area() for m in meshes])
    if not areas.sum() > 0:
        raise GeometryError("reference composite has zero total area")
    cum = np.round(np.cumsum(areas) / areas.sum() * total_samples).astype(np.int64)
    budgets = np.diff(np.concatenate([[0], cum]))
    chunks = [
        sample_surface(m, int(n), seed + i)
        for i, (m, n) in enumerate(zip(meshes, budgets))
        if n > 0
    ]
    points = np.concatenate(chunks)

    joint = meshes[0].bounds()
    for m in meshes[1:]:
        joint = joint.union(m.bounds())
    origin, edge = cube_from_aabb(joint, resolution, pad_voxels=1)
    occ = np.zeros((resolution,) * 3, dtype=bool)
    for m in meshes:
        occ |= solid_occupancy(m, origin, edge, resolution)
    g2w = Transform3.translation(*origin) @ Transform3.scaling(edge)
    return points, OccupancyGrid(resolution, occ, g2w)


def confidence_interval_95(values) -> tuple[float, float]:
    """Mean and t-distribution 95% half-width over a sample of size >= 2."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(v) < 2:
        raise GeometryError(f"confidence interval needs n >= 2, got n = {len(v)}")
    mean = float(v.mean())
    s = float(v.std(ddof=1))
    t = float(stats.t.ppf(0.975, len(v) - 1))
    return mean, t * s / np.sqrt(len(v))
