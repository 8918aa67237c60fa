"""Procedural watertight test shapes.

Five category analogs used by the benchmark (elongated capsule, bent tube,
torus, thin ring, icosphere) plus box/block primitives for scene building.
All generators produce closed manifolds with outward-facing triangles and a
flat per-kind default color.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import GeometryError, TriMesh

SHAPE_KINDS = ("elongated", "bent_tube", "torus", "thin_ring", "sphere", "box", "block")

# flat default colors, one hue per family
_COLORS = {
    "elongated": (0.72, 0.74, 0.78),
    "bent_tube": (0.93, 0.82, 0.25),
    "torus": (0.62, 0.38, 0.22),
    "thin_ring": (0.85, 0.68, 0.21),
    "sphere": (0.92, 0.92, 0.90),
    "box": (0.45, 0.55, 0.75),
    "block": (0.75, 0.35, 0.30),
}


def gen_shape(kind: str, params: dict | None = None, seed: int = 0) -> TriMesh:
    """Generate a watertight procedural mesh of the named family.

    kind: one of SHAPE_KINDS. params: per-kind overrides (see the generator
    functions for names and defaults). seed: accepted for interface stability;
    the generators are fully deterministic and do not consume it.
    """
    if kind not in SHAPE_KINDS:
        raise GeometryError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    del seed
    p = dict(params or {})
    builder = {
        "elongated": _capsule,
        "bent_tube": _bent_tube,
        "torus": _torus,
        "thin_ring": _thin_ring,
        "sphere": _icosphere,
        "box": _box,
        "block": _block,
    }[kind]
    verts, faces = builder(p)
    if p:
        raise GeometryError(f"unknown {kind} parameters: {sorted(p)}")
    colors = np.tile(np.array(_COLORS[kind], dtype=np.float64), (len(verts), 1))
    mesh = TriMesh(verts, faces, colors)
    mesh.validate()
    return mesh


def _take(p: dict, name: str, default, *, positive: bool = True):
    val = p.pop(name, default)
    if positive and not val > 0:
        raise GeometryError(f"parameter {name} must be positive, got {val}")
    return val


# ---------------------------------------------------------------------------
# lattice builders
# ---------------------------------------------------------------------------


def _revolve_x(profile: np.ndarray, nseg: int) -> tuple[np.ndarray, np.ndarray]:
    """Revolve an open profile [(x, r), ...] around the x axis.

    First and last profile entries must have r == 0 (the poles); interior
    radii must be positive. Triangles wind outward.
    """
    px, pr = profile[:, 0], profile[:, 1]
    ang = np.arange(nseg) * (2.0 * math.pi / nseg)
    cy, sz = np.cos(ang), np.sin(ang)
    verts = [np.array([[px[0], 0.0, 0.0]])]
    ring_start = []
    for x, r in zip(px[1:-1], pr[1:-1]):
        ring_start.append(1 + nseg * len(ring_start))
        verts.append(np.column_stack([np.full(nseg, x), r * cy, r * sz]))
    last = 1 + nseg * len(ring_start)
    verts.append(np.array([[px[-1], 0.0, 0.0]]))
    v = np.concatenate(verts)

    faces = []
    j = np.arange(nseg)
    j1 = (j + 1) % nseg
    r0 = ring_start[0]
    faces.append(np.column_stack([np.zeros(nseg, int), r0 + j1, r0 + j]))
    for ra, rb in zip(ring_start[:-1], ring_start[1:]):
        a, b, c, d = ra + j, ra + j1, rb + j, rb + j1
        faces.append(np.column_stack([a, b, d]))
        faces.append(np.column_stack([a, d, c]))
    rl = ring_start[-1]
    faces.append(np.column_stack([np.full(nseg, last), rl + j, rl + j1]))
    return v, np.concatenate(faces)


def _closed_lattice(nu: int, nv: int) -> np.ndarray:
    """Faces of a doubly wrapped nu x nv vertex lattice (torus topology)."""
    faces = []
    jv = np.arange(nv)
    jv1 = (jv + 1) % nv
    for iu in range(nu):
        iu1 = (iu + 1) % nu
        a = iu * nv + jv
        b = iu1 * nv + jv
        c = iu * nv + jv1
        d = iu1 * nv + jv1
        faces.append(np.column_stack([a, b, d]))
        faces.append(np.column_stack([a, d, c]))
    return np.concatenate(faces)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _icosphere(p: dict) -> tuple[np.ndarray, np.ndarray]:
    radius = _take(p, "radius", 0.5)
    subdivisions = int(_take(p, "subdivisions", 3, positive=False))
    if not 0 <= subdivisions <= 6:
        raise GeometryError(f"subdivisions must be in 0..6, got {subdivisions}")
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    for _ in range(subdivisions):
        verts, faces = _subdivide(verts, faces)
        verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    return verts * radius, faces


def _subdivide(verts: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # one midpoint vertex per undirected edge, shared between both faces
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    mid = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    mid_idx = len(verts) + np.arange(len(uniq))
    m01, m12, m20 = (mid_idx[inverse[i * len(faces):(i + 1) * len(faces)]] for i in range(3))
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([b, m12, m01]),
            np.column_stack([c, m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.concatenate([verts, mid]), new_faces


def _torus_lattice(R: float, r: float, nmaj: int, nmin: int) -> tuple[np.ndarray, np.ndarray]:
    if not r < R:
        raise GeometryError(f"minor radius {r} must be smaller than major radius {R}")
    phi = np.arange(nmaj) * (2.0 * math.pi / nmaj)
    psi = np.arange(nmin) * (2.0 * math.pi / nmin)
    cph, sph = np.cos(phi)[:, None], np.sin(phi)[:, None]
    cps, sps = np.cos(psi)[None, :], np.sin(psi)[None, :]
    ring = R + r * cps
    x = (ring * cph).ravel()
    y = (ring * sph).ravel()
    z = np.broadcast_to(r * sps, (nmaj, nmin)).ravel()
    verts = np.column_stack([x, y, z])
    return verts, _closed_lattice(nmaj, nmin)


def _torus(p: dict) -> tuple[np.ndarray, np.ndarray]:
    R = _take(p, "major_radius", 0.35)
    r = _take(p, "minor_radius", 0.15)
    nmaj = int(_take(p, "major_segments", 48))
    nmin = int(_take(p, "minor_segments", 24))
    return _torus_lattice(R, r, nmaj, nmin)


def _thin_ring(p: dict) -> tuple[np.ndarray, np.ndarray]:
    R = _take(p, "major_radius", 0.45)
    r = _take(p, "minor_radius", 0.06)
    nmaj = int(_take(p, "major_segments", 72))
    nmin = int(_take(p, "minor_segments", 16))
    return _torus_lattice(R, r, nmaj, nmin)


def _capsule(p: dict) -> tuple[np.ndarray, np.ndarray]:
    length = _take(p, "length", 1.0)
    radius = _take(p, "radius", 0.05)
    nseg = int(_take(p, "segments", 24))
    cap_rings = int(_take(p, "cap_rings", 6))
    shaft_rings = int(_take(p, "shaft_rings", 24))
    if 2 * radius >= length:
        raise GeometryError(f"capsule needs length > 2*radius, got {length} vs {radius}")
    half = length / 2.0
    c = half - radius
    t = np.linspace(0.0, math.pi / 2.0, cap_rings + 1)
    profile = [(-half, 0.0)]
    for ti in t[1:]:
        profile.append((-c - radius * math.cos(ti), radius * math.sin(ti)))
    for x in np.linspace(-c, c, shaft_rings + 1)[1:-1]:
        profile.append((x, radius))
    for ti in t[::-1][1:]:
        profile.append((c + radius * math.cos(ti), radius * math.sin(ti)))
    profile.append((half, 0.0))
    return _revolve_x(np.array(profile), nseg)


def _bent_tube(p: dict) -> tuple[np.ndarray, np.ndarray]:
    arc_radius = _take(p, "arc_radius", 0.35)
    tube_radius = _take(p, "tube_radius", 0.08)
    bend = float(_take(p, "bend_degrees", 150.0))
    narc = int(_take(p, "arc_segments", 48))
    ntube = int(_take(p, "tube_segments", 20))
    if not 0.0 < bend < 360.0:
        raise GeometryError(f"bend_degrees must be in (0, 360), got {bend}")
    if not tube_radius < arc_radius:
        raise GeometryError("tube radius must be smaller than arc radius")
    half = math.radians(bend) / 2.0
    theta = np.linspace(-half, half, narc + 1)
    psi = np.arange(ntube) * (2.0 * math.pi / ntube)
    er = np.column_stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)])
    center = arc_radius * er
    cps, sps = np.cos(psi), np.sin(psi)
    # ring points: center + r*(cos(psi)*radial + sin(psi)*z)
    rings = (
        center[:, None, :]
        + tube_radius * cps[None, :, None] * er[:, None, :]
        + tube_radius * sps[None, :, None] * np.array([0.0, 0.0, 1.0])
    )
    verts = rings.reshape(-1, 3)

    faces = []
    j = np.arange(ntube)
    j1 = (j + 1) % ntube
    for i in range(narc):
        a = i * ntube + j
        b = (i + 1) * ntube + j
        c = i * ntube + j1
        d = (i + 1) * ntube + j1
        faces.append(np.column_stack([a, b, d]))
        faces.append(np.column_stack([a, d, c]))
    # cap fans close the two open ends
    start_center = len(verts)
    end_center = len(verts) + 1
    verts = np.concatenate([verts, center[[0]], center[[-1]]])
    faces.append(np.column_stack([np.full(ntube, start_center), j, j1]))
    last = narc * ntube
    faces.append(np.column_stack([np.full(ntube, end_center), last + j1, last + j]))
    return verts, np.concatenate(faces)


def _box_lattice(sizes, nseg: int) -> tuple[np.ndarray, np.ndarray]:
    sx, sy, sz = (float(s) for s in sizes)
    if min(sx, sy, sz) <= 0:
        raise GeometryError(f"box sizes must be positive, got {(sx, sy, sz)}")
    axes = [np.linspace(-sx / 2, sx / 2, nseg + 1),
            np.linspace(-sy / 2, sy / 2, nseg + 1),
            np.linspace(-sz / 2, sz / 2, nseg + 1)]
    # (fixed axis, side index into its linspace, u axis, v axis) with u x v facing out
    plan = [
        (0, -1, 1, 2), (0, 0, 2, 1),
        (1, -1, 2, 0), (1, 0, 0, 2),
        (2, -1, 0, 1), (2, 0, 1, 0),
    ]
    all_verts, all_faces = [], []
    offset = 0
    for fixed, side, ua, va in plan:
        u, v = axes[ua], axes[va]
        grid = np.zeros(((nseg + 1) * (nseg + 1), 3))
        uu, vv = np.meshgrid(u, v, indexing="ij")
        grid[:, ua] = uu.ravel()
        grid[:, va] = vv.ravel()
        grid[:, fixed] = axes[fixed][side]
        iu, iv = np.meshgrid(np.arange(nseg), np.arange(nseg), indexing="ij")
        a = (iu * (nseg + 1) + iv).ravel() + offset
        b = ((iu + 1) * (nseg + 1) + iv).ravel() + offset
        c = (iu * (nseg + 1) + iv + 1).ravel() + offset
        d = ((iu + 1) * (nseg + 1) + iv + 1).ravel() + offset
        all_verts.append(grid)
        all_faces.append(np.column_stack([a, b, d]))
        all_faces.append(np.column_stack([a, d, c]))
        offset += len(grid)
    verts = np.concatenate(all_verts)
    faces = np.concatenate(all_faces)
    # weld shared edge/corner vertices; coordinates come from the same
    # linspace arrays so duplicates are bitwise equal
    uniq, inverse = np.unique(verts, axis=0, return_inverse=True)
    return uniq, inverse[faces]


def _box(p: dict) -> tuple[np.ndarray, np.ndarray]:
    size = _take(p, "size", 1.0)
    nseg = int(_take(p, "segments", 10))
    return _box_lattice((size, size, size), nseg)


def _block(p: dict) -> tuple[np.ndarray, np.ndarray]:
    sizes = p.pop("sizes", (0.8, 0.4, 0.4))
    if np.shape(sizes) != (3,):
        raise GeometryError(f"block sizes must be three numbers, got {sizes!r}")
    nseg = int(_take(p, "segments", 10))
    return _box_lattice(sizes, nseg)
