"""Triangle mesh core: types, OBJ IO, transforms, sampling, submesh extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_DET_EPS = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (degenerate mesh, singular transform, ...)."""


class MeshParseError(GeometryError):
    """OBJ file violates the supported subset; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptySelectionError(GeometryError):
    """Submesh extraction produced no geometry (all vertices dropped)."""


@dataclass(frozen=True)
class Transform3:
    """4x4 homogeneous transform, row-major. Last row must be (0,0,0,1)."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "m", m)
        if not np.all(np.isfinite(m)):
            raise GeometryError("transform has non-finite entries")
        if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise GeometryError("last transform row must be (0, 0, 0, 1)")
        if abs(np.linalg.det(m[:3, :3])) <= _DET_EPS:
            raise GeometryError("transform linear block is singular")

    @classmethod
    def identity(cls) -> "Transform3":
        return cls(np.eye(4))

    @classmethod
    def translation(cls, x: float, y: float, z: float) -> "Transform3":
        m = np.eye(4)
        m[:3, 3] = (x, y, z)
        return cls(m)

    @classmethod
    def scaling(cls, s: float) -> "Transform3":
        m = np.eye(4)
        m[0, 0] = m[1, 1] = m[2, 2] = s
        return cls(m)

    @classmethod
    def rotation_x(cls, radians: float) -> "Transform3":
        c, s = math.cos(radians), math.sin(radians)
        m = np.eye(4)
        m[1, 1], m[1, 2], m[2, 1], m[2, 2] = c, -s, s, c
        return cls(m)

    @classmethod
    def rotation_y(cls, radians: float) -> "Transform3":
        c, s = math.cos(radians), math.sin(radians)
        m = np.eye(4)
        m[0, 0], m[0, 2], m[2, 0], m[2, 2] = c, s, -s, c
        return cls(m)

    @classmethod
    def rotation_z(cls, radians: float) -> "Transform3":
        c, s = math.cos(radians), math.sin(radians)
        m = np.eye(4)
        m[0, 0], m[0, 1], m[1, 0], m[1, 1] = c, -s, s, c
        return cls(m)

    @property
    def linear(self) -> np.ndarray:
        return self.m[:3, :3]

    @property
    def translation_vector(self) -> np.ndarray:
        return self.m[:3, 3]

    def __matmul__(self, other: "Transform3") -> "Transform3":
        return Transform3(self.m @ other.m)

    def inverse(self) -> "Transform3":
        return Transform3(np.linalg.inv(self.m))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.linear.T + self.translation_vector

    def apply_directions(self, dirs: np.ndarray) -> np.ndarray:
        """Transform directions (no translation)."""
        return np.asarray(dirs, dtype=np.float64) @ self.linear.T

    def uniform_scale(self) -> float:
        """Cube root of |det| of the linear block."""
        return float(abs(np.linalg.det(self.linear)) ** (1.0 / 3.0))

    def to_list(self) -> list[float]:
        return [float(v) for v in self.m.reshape(-1)]

    @classmethod
    def from_list(cls, values) -> "Transform3":
        vals = np.asarray(values, dtype=np.float64)
        if vals.size != 16:
            raise GeometryError(f"expected 16 matrix entries, got {vals.size}")
        return cls(vals.reshape(4, 4))


@dataclass(frozen=True)
class AABB:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64).reshape(3))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64).reshape(3))
        if np.any(self.min > self.max):
            raise GeometryError("AABB min exceeds max")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def longest_side(self) -> float:
        return float(self.extents.max())

    def union(self, other: "AABB") -> "AABB":
        return AABB(np.minimum(self.min, other.min), np.maximum(self.max, other.max))


@dataclass
class TriMesh:
    """Indexed triangle mesh with optional per-vertex colors and a keep/drop mask.

    vertices: (N, 3) float64. faces: (M, 3) int64 indices. colors: optional
    (N, 3) float64 in [0, 1]. mask: (N,) bool, True = kept; defaults to all-kept.
    """

    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.ascontiguousarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if self.mask is None:
            self.mask = np.ones(len(self.vertices), dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def validate(self) -> None:
        """Check the mesh invariants; raise GeometryError on violation."""
        if not np.all(np.isfinite(self.vertices)):
            raise GeometryError("mesh has non-finite vertex coordinates")
        if self.n_faces and (self.faces.min() < 0 or self.faces.max() >= self.n_vertices):
            raise GeometryError("face index out of range")
        degen = _degenerate_faces(self.faces)
        if degen.size:
            raise GeometryError(f"degenerate faces (repeated vertex index): {degen.tolist()}")
        if self.colors is not None:
            if len(self.colors) != self.n_vertices:
                raise GeometryError("color count does not match vertex count")
            if self.colors.size and (self.colors.min() < 0.0 or self.colors.max() > 1.0):
                raise GeometryError("vertex colors must lie in [0, 1]")
        if len(self.mask) != self.n_vertices:
            raise GeometryError("mask length does not match vertex count")

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.vertices.copy(),
            self.faces.copy(),
            None if self.colors is None else self.colors.copy(),
            self.mask.copy(),
        )

    def bounds(self) -> AABB:
        if self.n_vertices == 0:
            raise GeometryError("empty mesh has no bounds")
        return AABB(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def face_areas(self) -> np.ndarray:
        v = self.vertices
        a, b, c = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_normals(self) -> np.ndarray:
        """Unit face normals; zero-area faces get a zero normal."""
        v = self.vertices
        a, b, c = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        n = np.cross(b - a, c - a)
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 0)

    def area(self) -> float:
        return float(self.face_areas().sum())


def _degenerate_faces(faces: np.ndarray) -> np.ndarray:
    """Indices of faces with a repeated vertex."""
    f = faces
    bad = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    return np.nonzero(bad)[0]


def is_watertight(mesh: TriMesh) -> bool:
    """True iff every undirected edge is shared by exactly two faces."""
    if mesh.n_faces == 0:
        return False
    e = np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def euler_characteristic(mesh: TriMesh) -> int:
    e = np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    n_edges = len(np.unique(e, axis=0))
    return mesh.n_vertices - n_edges + mesh.n_faces


# ---------------------------------------------------------------------------
# OBJ subset IO
#
# Supported: `v x y z` (optionally `v x y z r g b`), `f a b c` with 1-based
# indices (slash suffixes like a/b/c tolerated, only the vertex index is used).
# vt/vn/o/g/s/usemtl/mtllib lines are ignored. Written files are UTF-8 with LF
# endings; colors are quantized to 6 decimals (<= 1/255 round-trip error).
# ---------------------------------------------------------------------------


def load_mesh(path) -> TriMesh:
    """Load a mesh from the supported OBJ subset.

    Raises MeshParseError with a line number for malformed input and
    GeometryError listing face indices for degenerate faces.
    """
    verts: list[list[float]] = []
    colors: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            tag = tokens[0]
            if tag == "v":
                if len(tokens) not in (4, 7):
                    raise MeshParseError(
                        f"vertex line needs 3 or 6 floats, got {len(tokens) - 1}", lineno
                    )
                try:
                    vals = [float(t) for t in tokens[1:]]
                except ValueError as exc:
                    raise MeshParseError(f"bad vertex float: {exc}", lineno) from None
                verts.append(vals[:3])
                if len(vals) == 6:
                    colors.append(vals[3:])
                elif colors:
                    raise MeshParseError("mixed colored and uncolored vertices", lineno)
            elif tag == "f":
                if len(tokens) != 4:
                    raise MeshParseError(
                        f"only triangle faces supported, got {len(tokens) - 1} indices", lineno
                    )
                idx = []
                for t in tokens[1:]:
                    head = t.split("/", 1)[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise MeshParseError(f"bad face index {head!r}", lineno) from None
                    if i <= 0:
                        raise MeshParseError(
                            f"face index {i} invalid (OBJ indices are 1-based, "
                            "negative indices unsupported)",
                            lineno,
                        )
                    idx.append(i - 1)
                faces.append(idx)
            elif tag in ("vt", "vn", "o", "g", "s", "usemtl", "mtllib"):
                continue
            else:
                raise MeshParseError(f"unsupported OBJ directive {tag!r}", lineno)
    if not verts:
        raise MeshParseError("no vertices in file")
    if colors and len(colors) != len(verts):
        raise MeshParseError("some vertices have colors and some do not")
    mesh = TriMesh(
        np.array(verts, dtype=np.float64),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        np.array(colors, dtype=np.float64) if colors else None,
    )
    if mesh.n_faces and mesh.faces.max() >= mesh.n_vertices:
        bad = int(np.nonzero(mesh.faces.max(axis=1) >= mesh.n_vertices)[0][0])
        raise MeshParseError(f"face {bad} references missing vertex {int(mesh.faces[bad].max()) + 1}")
    mesh.validate()
    return mesh


def save_mesh(mesh: TriMesh, path) -> None:
    """Write the OBJ subset; positions keep full precision, colors 6 decimals."""
    with open(path, "wb") as fh:
        fh.write(mesh_to_obj_bytes(mesh))


def mesh_to_obj_bytes(mesh: TriMesh) -> bytes:
    """OBJ subset serialization as bytes (LF endings, full-precision floats)."""
    mesh.validate()
    lines = []
    if mesh.colors is not None:
        for (x, y, z), (r, g, b) in zip(mesh.vertices.tolist(), mesh.colors.tolist()):
            lines.append(f"v {x!r} {y!r} {z!r} {r:.6f} {g:.6f} {b:.6f}")
    else:
        for x, y, z in map(tuple, mesh.vertices.tolist()):
            lines.append(f"v {x!r} {y!r} {z!r}")
    for a, b, c in mesh.faces.tolist():
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


# ---------------------------------------------------------------------------
# Transforms and normalization
# ---------------------------------------------------------------------------


def apply_transform(mesh: TriMesh, t: Transform3) -> TriMesh:
    """Return a new mesh with transformed vertices; topology/colors/mask shared state copied."""
    return TriMesh(
        t.apply_points(mesh.vertices),
        mesh.faces.copy(),
        None if mesh.colors is None else mesh.colors.copy(),
        mesh.mask.copy(),
    )


def normalize_unit_bbox(mesh: TriMesh) -> tuple[TriMesh, Transform3]:
    """Scale/translate so the longest bbox side is 1 and the bbox center is the origin.

    Returns the normalized mesh and the transform mapping normalized
    coordinates back to the original ones.
    """
    if mesh.n_vertices == 0:
        raise GeometryError("cannot normalize an empty mesh")
    box = mesh.bounds()
    longest = box.longest_side
    if longest <= 0:
        raise GeometryError("zero-extent mesh (all vertices coincident)")
    center = box.center
    scale = 1.0 / longest
    normalized = TriMesh(
        (mesh.vertices - center) * scale,
        mesh.faces.copy(),
        None if mesh.colors is None else mesh.colors.copy(),
        mesh.mask.copy(),
    )
    back = Transform3.translation(*center) @ Transform3.scaling(longest)
    return normalized, back


# ---------------------------------------------------------------------------
# Surface sampling
# ---------------------------------------------------------------------------


def _rng(seed: int) -> np.random.Generator:
    # Philox: counter-based, identical streams across platforms.
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def sample_surface_detailed(
    mesh: TriMesh, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Area-weighted surface samples with provenance.

    Returns (points (n,3), face index (n,), barycentric coords (n,3)).
    """
    if n < 1:
        raise GeometryError("sample count must be >= 1")
    areas = mesh.face_areas()
    total = areas.sum()
    if not total > 0:
        raise GeometryError("mesh has zero surface area")
    rng = _rng(seed)
    cdf = np.cumsum(areas)
    tri = np.searchsorted(cdf, rng.random(n) * total, side="right")
    tri = np.minimum(tri, len(areas) - 1)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    w = 1.0 - u - v
    bary = np.column_stack([w, u, v])
    f = mesh.faces[tri]
    pts = (
        mesh.vertices[f[:, 0]] * bary[:, 0:1]
        + mesh.vertices[f[:, 1]] * bary[:, 1:2]
        + mesh.vertices[f[:, 2]] * bary[:, 2:3]
    )
    return pts, tri, bary


def sample_surface(mesh: TriMesh, n: int, seed: int) -> np.ndarray:
    """n area-weighted surface points, deterministic per seed."""
    return sample_surface_detailed(mesh, n, seed)[0]


# ---------------------------------------------------------------------------
# Submesh extraction
# ---------------------------------------------------------------------------


def extract_submesh(mesh: TriMesh) -> TriMesh:
    """Keep masked vertices and the faces whose three corners are all kept.

    Raises EmptySelectionError when nothing is kept.
    """
    kept = mesh.mask
    if not kept.any():
        raise EmptySelectionError("selection mask keeps no vertices")
    new_index = np.full(mesh.n_vertices, -1, dtype=np.int64)
    new_index[kept] = np.arange(int(kept.sum()))
    face_kept = kept[mesh.faces].all(axis=1)
    faces = new_index[mesh.faces[face_kept]]
    out = TriMesh(
        mesh.vertices[kept].copy(),
        faces,
        None if mesh.colors is None else mesh.colors[kept].copy(),
    )
    return out


def merge_meshes(meshes: list[TriMesh]) -> TriMesh:
    """Concatenate meshes into one (vertex indices offset); colors kept if all have them."""
    if not meshes:
        raise GeometryError("nothing to merge")
    verts, faces, colors = [], [], []
    all_colored = all(m.colors is not None for m in meshes)
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        if all_colored:
            colors.append(m.colors)
        offset += m.n_vertices
    return TriMesh(
        np.concatenate(verts),
        np.concatenate(faces),
        np.concatenate(colors) if all_colored else None,
    )
