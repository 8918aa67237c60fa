"""Sparse latent voxel volumes: encode, selection filtering, transform, union.

A volume is a set of active voxels on a cubic grid plus one feature vector
per voxel. The default feature layout is 6 numbers: mean RGB of the surface
samples in the voxel followed by their mean unit normal. Features are only
ever copied, never blended; the union step assigns each output voxel the
feature of its nearest source voxel.

Transforms are lazy: moving a volume rewrites its grid_to_world matrix and
the normal part of the features, not the voxel coordinates. The union step
re-normalizes everything into one fixed cubic grid; squeezing a larger world
extent into the same resolution is what makes far-apart or rescaled parts
decode coarser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import GeometryError, Transform3, TriMesh, sample_surface_detailed
from .voxelize import cube_from_aabb

DEFAULT_RESOLUTION = 64
# surface samples = budget * resolution^2; sized so even the largest-area
# unit shape (the cube, area 6) expects far under one missed shell voxel
DEFAULT_SAMPLE_BUDGET = 128
FEATURE_DIM = 6

# relative slack for "same distance" when picking the nearest source voxel
_TIE_REL = 1e-9


@dataclass
class SparseLatentVolume:
    """Active voxels with features on a cubic grid of the given resolution."""

    resolution: int
    coords: np.ndarray  # (V, 3) int64, unique, each in [0, resolution)
    features: np.ndarray  # (V, D) float64
    grid_to_world: Transform3

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=np.int64).reshape(-1, 3)
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or len(self.features) != len(self.coords):
            raise GeometryError("feature rows must match voxel count")
        if self.resolution < 1:
            raise GeometryError(f"resolution must be >= 1, got {self.resolution}")
        if len(self.coords):
            if self.coords.min() < 0 or self.coords.max() >= self.resolution:
                raise GeometryError("voxel coordinate out of range")
            lin = np.ravel_multi_index(self.coords.T, (self.resolution,) * 3)
            if len(np.unique(lin)) != len(lin):
                raise GeometryError("duplicate voxel coordinates")

    @property
    def n_voxels(self) -> int:
        return len(self.coords)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1] if self.features.size else FEATURE_DIM

    def is_empty(self) -> bool:
        return len(self.coords) == 0

    def voxel_edge_world(self) -> float:
        return self.grid_to_world.uniform_scale()

    def world_centers(self) -> np.ndarray:
        return self.grid_to_world.apply_points(self.coords + 0.5)

    def copy(self) -> "SparseLatentVolume":
        return SparseLatentVolume(
            self.resolution, self.coords.copy(), self.features.copy(), self.grid_to_world
        )

    def dense(self) -> np.ndarray:
        grid = np.zeros((self.resolution,) * 3, dtype=bool)
        if len(self.coords):
            grid[self.coords[:, 0], self.coords[:, 1], self.coords[:, 2]] = True
        return grid


def _empty_like(vol: SparseLatentVolume) -> SparseLatentVolume:
    return SparseLatentVolume(
        vol.resolution,
        np.zeros((0, 3), dtype=np.int64),
        np.zeros((0, vol.feature_dim)),
        vol.grid_to_world,
    )


def encode_mesh(
    mesh: TriMesh,
    resolution: int = DEFAULT_RESOLUTION,
    samples_per_voxel_budget: int = DEFAULT_SAMPLE_BUDGET,
    seed: int = 0,
) -> SparseLatentVolume:
    """Surface-sample the mesh into active voxels over its bounding cube.

    A voxel is active iff at least one of the budget * resolution^2
    area-weighted samples lands in it. Feature = mean sample color (white when
    the mesh has no colors) plus mean face normal of the samples.
    """
    if resolution < 8:
        raise GeometryError(f"encode resolution must be >= 8, got {resolution}")
    if samples_per_voxel_budget < 1:
        raise GeometryError("sample budget must be >= 1")
    box = mesh.bounds()
    origin, edge = cube_from_aabb(box, resolution, pad_voxels=0)

    n = samples_per_voxel_budget * resolution * resolution
    pts, tri, bary = sample_surface_detailed(mesh, n, seed)
    normals = mesh.face_normals()[tri]
    if mesh.colors is None:
        colors = np.ones((n, 3))
    else:
        f = mesh.faces[tri]
        colors = (
            mesh.colors[f[:, 0]] * bary[:, 0:1]
            + mesh.colors[f[:, 1]] * bary[:, 1:2]
            + mesh.colors[f[:, 2]] * bary[:, 2:3]
        )

    idx = np.floor((pts - origin) / edge).astype(np.int64)
    np.clip(idx, 0, resolution - 1, out=idx)
    lin = np.ravel_multi_index(idx.T, (resolution,) * 3)
    uniq, inverse = np.unique(lin, return_inverse=True)
    counts = np.bincount(inverse).astype(np.float64)
    feats = np.empty((len(uniq), 6))
    for ch in range(3):
        feats[:, ch] = np.bincount(inverse, weights=colors[:, ch]) / counts
        feats[:, 3 + ch] = np.bincount(inverse, weights=normals[:, ch]) / counts
    coords = np.column_stack(np.unravel_index(uniq, (resolution,) * 3)).astype(np.int64)
    g2w = Transform3.translation(*origin) @ Transform3.scaling(edge)
    return SparseLatentVolume(resolution, coords, feats, g2w)


# ---------------------------------------------------------------------------
# selection propagation
# ---------------------------------------------------------------------------


def _point_triangle_sqdist(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Exact squared point-triangle distances, elementwise over matched rows."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    closest = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    reg = (d1 <= 0) & (d2 <= 0)
    closest[reg] = a[reg]
    done |= reg
    reg = ~done & (d3 >= 0) & (d4 <= d3)
    closest[reg] = b[reg]
    done |= reg
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        reg = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1 / (d1 - d3)
        closest[reg] = a[reg] + t[reg, None] * ab[reg]
        done |= reg
        reg = ~done & (d6 >= 0) & (d5 <= d6)
        closest[reg] = c[reg]
        done |= reg
        vb = d5 * d2 - d1 * d6
        reg = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = d2 / (d2 - d6)
        closest[reg] = a[reg] + t[reg, None] * ac[reg]
        done |= reg
        va = d3 * d6 - d5 * d4
        reg = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        closest[reg] = b[reg] + t[reg, None] * (c[reg] - b[reg])
        done |= reg
        reg = ~done
        denom = va + vb + vc
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
        closest[reg] = a[reg] + v[reg, None] * ab[reg] + w[reg, None] * ac[reg]
    d = p - closest
    return np.einsum("ij,ij->i", d, d)


def filter_by_mask(
    vol: SparseLatentVolume,
    mesh: TriMesh,
    mask: np.ndarray,
    threshold_voxels: float = 1.0,
) -> SparseLatentVolume:
    """Keep the voxels within threshold_voxels * voxel edge of the kept surface.

    The kept surface consists of the triangles whose three vertices are all
    kept. An all-kept mask keeps every voxel (any active voxel contains a
    surface sample, which is at most half a voxel diagonal from its center);
    a mask keeping no complete triangle empties the volume.
    """
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if len(mask) != mesh.n_vertices:
        raise GeometryError(
            f"mask length {len(mask)} does not match vertex count {mesh.n_vertices}"
        )
    if not threshold_voxels > 0:
        raise GeometryError(f"threshold must be positive, got {threshold_voxels}")
    if vol.is_empty() or mask.all():
        return vol.copy()
    kept_faces = mask[mesh.faces].all(axis=1)
    if not kept_faces.any():
        return _empty_like(vol)

    tau = threshold_voxels * vol.voxel_edge_world()
    centers = vol.world_centers()
    tris = mesh.vertices[mesh.faces[kept_faces]]
    centroids = tris.mean(axis=1)
    circum = np.linalg.norm(tris - centroids[:, None, :], axis=2).max()
    tree = cKDTree(centroids)
    hits = tree.query_ball_point(centers, tau + circum + 1e-12)

    counts = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
    keep = np.zeros(len(centers), dtype=bool)
    cand = counts > 0
    if cand.any():
        vox_idx = np.repeat(np.nonzero(cand)[0], counts[cand])
        tri_idx = np.concatenate([hits[i] for i in np.nonzero(cand)[0]]).astype(np.int64)
        d2 = _point_triangle_sqdist(
            centers[vox_idx], tris[tri_idx, 0], tris[tri_idx, 1], tris[tri_idx, 2]
        )
        within = d2 <= tau * tau
        keep[np.unique(vox_idx[within])] = True
    return SparseLatentVolume(
        vol.resolution, vol.coords[keep].copy(), vol.features[keep].copy(), vol.grid_to_world
    )


def transform_volume(vol: SparseLatentVolume, t: Transform3) -> SparseLatentVolume:
    """Lazily move the volume: compose grid_to_world, rotate feature normals.

    Voxel coordinates are untouched. The normal slots (features[:, 3:6], when
    present) are rotated by the scale-normalized linear block; norms pushed
    above 1 by anisotropy are clipped back to 1.
    """
    g2w = t @ vol.grid_to_world
    feats = vol.features.copy()
    if feats.shape[1] >= 6 and len(feats):
        rot = t.linear / t.uniform_scale()
        n = feats[:, 3:6] @ rot.T
        norms = np.linalg.norm(n, axis=1)
        over = norms > 1.0
        if over.any():
            n[over] /= norms[over, None]
        feats[:, 3:6] = n
    return SparseLatentVolume(vol.resolution, vol.coords.copy(), feats, g2w)


def latent_union(vols: list[SparseLatentVolume], output_resolution: int = DEFAULT_RESOLUTION) -> SparseLatentVolume:
    """Re-normalize all source voxels into one cubic grid and union them.

    The output grid spans the world AABB of every source voxel center plus
    one output voxel of padding. An output voxel is active iff a source
    center falls inside it or lies within half a source voxel edge of its
    center. Each active voxel copies the feature of its nearest source
    center; exact ties resolve to the lowest (volume, voxel) index.
    """
    if output_resolution < 4:
        raise GeometryError(f"output resolution must be >= 4, got {output_resolution}")
    live = [v for v in vols if not v.is_empty()]
    if not live:
        raise GeometryError("latent union of empty volumes")
    centers_per_vol = [v.world_centers() for v in live]
    all_centers = np.concatenate(centers_per_vol)
    all_features = np.concatenate([v.features for v in live])

    R = output_resolution
    lo = all_centers.min(axis=0)
    hi = all_centers.max(axis=0)
    extent = float((hi - lo).max())
    max_h = max(v.voxel_edge_world() for v in live)
    if extent <= 0:
        edge = max_h
    else:
        edge = extent / (R - 2)
    origin = 0.5 * (lo + hi) - 0.5 * R * edge

    active = np.zeros((R, R, R), dtype=bool)
    base = (all_centers - origin) / edge
    idx = np.clip(np.floor(base).astype(np.int64), 0, R - 1)
    active[idx[:, 0], idx[:, 1], idx[:, 2]] = True

    # source voxels coarser than the output grid also claim the output
    # voxels whose centers they cover
    for v, centers in zip(live, centers_per_vol):
        reach = 0.5 * v.voxel_edge_world()
        m = int(np.ceil(reach / edge))
        if m < 1:
            continue
        offs = np.arange(-m, m + 1)
        oi, oj, ok = np.meshgrid(offs, offs, offs, indexing="ij")
        offsets = np.column_stack([oi.ravel(), oj.ravel(), ok.ravel()])
        nb = np.floor((centers - origin) / edge).astype(np.int64)
        cand = nb[:, None, :] + offsets[None, :, :]
        ok_range = np.all((cand >= 0) & (cand < R), axis=2)
        cand_centers = origin + (cand + 0.5) * edge
        d = np.linalg.norm(cand_centers - centers[:, None, :], axis=2)
        sel = ok_range & (d <= reach)
        flat = cand[sel]
        active[flat[:, 0], flat[:, 1], flat[:, 2]] = True

    out_coords = np.argwhere(active).astype(np.int64)
    out_centers = origin + (out_coords + 0.5) * edge

    tree = cKDTree(all_centers)
    k = min(2, len(all_centers))
    dist, near = tree.query(out_centers, k=k)
    if k == 1:
        chosen = np.full(len(out_centers), 0, dtype=np.int64)
    else:
        chosen = near[:, 0].astype(np.int64)
        ties = dist[:, 1] - dist[:, 0] <= _TIE_REL * edge
        for i in np.nonzero(ties)[0]:
            cands = tree.query_ball_point(out_centers[i], dist[i, 0] + _TIE_REL * edge)
            diff = all_centers[cands] - out_centers[i]
            d2 = np.einsum("ij,ij->i", diff, diff)
            best = d2.min()
            chosen[i] = min(c for c, dd in zip(cands, d2) if dd == best)

    g2w = Transform3.translation(*origin) @ Transform3.scaling(edge)
    return SparseLatentVolume(R, out_coords, all_features[chosen].copy(), g2w)


def dump_volume(vol: SparseLatentVolume, path) -> None:
    """Debug CSV: JSON header line, then one `i,j,k,f0..f(D-1)` row per voxel."""
    header = {
        "resolution": vol.resolution,
        "grid_to_world": vol.grid_to_world.to_list(),
    }
    d = vol.feature_dim
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        fh.write("i,j,k," + ",".join(f"f{i}" for i in range(d)) + "\n")
        for (i, j, k), feat in zip(vol.coords, vol.features):
            fh.write(f"{i},{j},{k}," + ",".join(repr(float(x)) for x in feat) + "\n")
