"""Mesh voxelization helpers shared by the latent, decode, and metrics layers.

Two independent routes are provided on purpose:

* rasterize/solid_occupancy — surface lattice sampling plus exterior flood
  fill. The lattice density guarantees every surface point lies within a
  quarter voxel of a sample, so a closed surface cannot be crossed by the
  6-connected background fill.
* parity_occupancy — voxel-center point-in-mesh classification by ray
  parity. Unbiased (no half-voxel shell inflation); used for round-trip
  support checks and as an oracle against the first route.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .geometry import AABB, GeometryError, TriMesh

# subdivision factor 4/sqrt(3): every triangle point is then within a quarter
# voxel of a lattice sample (vertex-disk covering radius of a triangle with
# longest edge e is e/sqrt(3))
_LATTICE_FACTOR = 4.0 / np.sqrt(3.0)

_SIX_CONN = ndimage.generate_binary_structure(3, 1)


def cube_from_aabb(box: AABB, resolution: int, pad_voxels: int = 1) -> tuple[np.ndarray, float]:
    """Cubic grid over the box with pad_voxels of margin on the long axis.

    Returns (origin, voxel edge). Grid point (i,j,k) spans
    origin + [i,i+1)*edge per axis; voxel centers sit at origin + (i+0.5)*edge.
    """
    if resolution < 2 * pad_voxels + 2:
        raise GeometryError(f"resolution {resolution} too small for {pad_voxels}-voxel padding")
    extent = float(box.extents.max())
    if extent <= 0:
        raise GeometryError("cannot build a grid over a zero-extent box")
    edge = extent / (resolution - 2 * pad_voxels)
    origin = box.center - 0.5 * resolution * edge
    return origin, edge


def _to_grid(mesh: TriMesh, origin: np.ndarray, edge: float) -> np.ndarray:
    """Triangle corner coordinates in grid units, shape (T, 3, 3)."""
    g = (mesh.vertices - origin) / edge
    return g[mesh.faces]


def triangle_lattice_points(tris: np.ndarray) -> np.ndarray:
    """Barycentric lattice samples on triangles given in grid units.

    Subdivision per triangle scales with its longest edge so the sample
    spacing never exceeds sqrt(3)/4 grid units.
    """
    if len(tris) == 0:
        return np.zeros((0, 3))
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    e = np.maximum(
        np.linalg.norm(b - a, axis=1),
        np.maximum(np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)),
    )
    n = np.maximum(1, np.ceil(_LATTICE_FACTOR * e).astype(np.int64))
    chunks = []
    for nv in np.unique(n):
        sel = n == nv
        i, j = np.meshgrid(np.arange(nv + 1), np.arange(nv + 1), indexing="ij")
        keep = (i + j) <= nv
        u = (i[keep] / nv)[None, :, None]
        v = (j[keep] / nv)[None, :, None]
        aa, ab, ac = a[sel][:, None, :], b[sel][:, None, :], c[sel][:, None, :]
        pts = aa + u * (ab - aa) + v * (ac - aa)
        chunks.append(pts.reshape(-1, 3))
    return np.concatenate(chunks)


def rasterize_surface(mesh: TriMesh, origin: np.ndarray, edge: float, resolution: int) -> np.ndarray:
    """Boolean shell grid: voxels hit by the guaranteed-density surface lattice."""
    pts = triangle_lattice_points(_to_grid(mesh, origin, edge))
    idx = np.floor(pts).astype(np.int64)
    np.clip(idx, 0, resolution - 1, out=idx)
    grid = np.zeros((resolution,) * 3, dtype=bool)
    grid[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return grid


def fill_interior(shell: np.ndarray) -> np.ndarray:
    """Occupy everything not reachable from the grid boundary through empty voxels."""
    labels, _ = ndimage.label(~shell, structure=_SIX_CONN)
    boundary = np.unique(
        np.concatenate(
            [
                labels[0].ravel(), labels[-1].ravel(),
                labels[:, 0].ravel(), labels[:, -1].ravel(),
                labels[:, :, 0].ravel(), labels[:, :, -1].ravel(),
            ]
        )
    )
    exterior = np.isin(labels, boundary[boundary != 0])
    return ~exterior


def solid_occupancy(mesh: TriMesh, origin: np.ndarray, edge: float, resolution: int) -> np.ndarray:
    """Conservative solid voxelization: surface shell plus flood-filled interior."""
    return fill_interior(rasterize_surface(mesh, origin, edge, resolution))


def parity_occupancy(mesh: TriMesh, origin: np.ndarray, edge: float, resolution: int) -> np.ndarray:
    """Voxel centers classified inside/outside by x-ray crossing parity.

    Rays run along +x through each (y, z) column of voxel centers, offset by
    a fixed sub-voxel nudge to dodge exact edge hits.
    """
    R = resolution
    tris = _to_grid(mesh, origin, edge)
    dy, dz = 6.180339887e-7, 2.7182818e-7
    grid = np.zeros((R, R, R), dtype=bool)

    # candidate (triangle, column) pairs from projected yz bounding boxes
    ymin = tris[:, :, 1].min(axis=1)
    ymax = tris[:, :, 1].max(axis=1)
    zmin = tris[:, :, 2].min(axis=1)
    zmax = tris[:, :, 2].max(axis=1)
    j0 = np.clip(np.ceil(ymin - 0.5 - dy).astype(np.int64), 0, R)
    j1 = np.clip(np.floor(ymax - 0.5 - dy).astype(np.int64) + 1, 0, R)
    k0 = np.clip(np.ceil(zmin - 0.5 - dz).astype(np.int64), 0, R)
    k1 = np.clip(np.floor(zmax - 0.5 - dz).astype(np.int64) + 1, 0, R)
    nj = np.maximum(j1 - j0, 0)
    nk = np.maximum(k1 - k0, 0)
    counts = nj * nk
    if counts.sum() == 0:
        return grid

    tri_idx = np.repeat(np.arange(len(tris)), counts)
    # per-pair local (j, k) offsets inside each triangle's column range
    starts = np.cumsum(counts) - counts
    local = np.arange(int(counts.sum())) - np.repeat(starts, counts)
    nk_rep = np.repeat(nk, counts)
    jj = np.repeat(j0, counts) + local // np.maximum(nk_rep, 1)
    kk = np.repeat(k0, counts) + local % np.maximum(nk_rep, 1)

    a, b, c = tris[tri_idx, 0], tris[tri_idx, 1], tris[tri_idx, 2]
    py = jj + 0.5 + dy
    pz = kk + 0.5 + dz
    # 2D barycentric in the yz plane
    v0y, v0z = b[:, 1] - a[:, 1], b[:, 2] - a[:, 2]
    v1y, v1z = c[:, 1] - a[:, 1], c[:, 2] - a[:, 2]
    det = v0y * v1z - v0z * v1y
    ok = np.abs(det) > 1e-14
    wy, wz = py - a[:, 1], pz - a[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (wy * v1z - wz * v1y) / det
        v = (v0y * wz - v0z * wy) / det
        hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1)
    if not hit.any():
        return grid
    xs = a[hit, 0] + u[hit] * (b[hit, 0] - a[hit, 0]) + v[hit] * (c[hit, 0] - a[hit, 0])
    cols = jj[hit] * R + kk[hit]

    order = np.lexsort((xs, cols))
    cols, xs = cols[order], xs[order]
    col_ids, col_starts = np.unique(cols, return_index=True)
    col_ends = np.append(col_starts[1:], len(cols))
    centers_x = np.arange(R) + 0.5
    for cid, s, e in zip(col_ids, col_starts, col_ends):
        inside = (np.searchsorted(xs[s:e], centers_x) % 2).astype(bool)
        grid[:, cid // R, cid % R] = inside
    return grid
