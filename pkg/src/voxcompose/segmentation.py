"""Stroke-based vertex painting: keep/drop selection masks.

A brush stroke is a world-space polyline with a world-space radius. The
stroke is mapped into the mesh's local frame via the inverse of the mesh's
world transform, and the radius is divided by the world uniform scale factor
so the painted region matches what the user sees. Each vertex within the
effective radius of the polyline takes the stroke's mode; later strokes
override earlier ones per vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .geometry import GeometryError, Transform3, TriMesh

# spherical brushes are ill-defined under anisotropic scale; reject beyond this
MAX_SCALE_ANISOTROPY = 1.2


@dataclass(frozen=True)
class BrushStroke:
    """World-space polyline brush. mode: keep or drop."""

    path: np.ndarray
    radius_world: float
    mode: Literal["keep", "drop"] = "keep"

    def __post_init__(self):
        path = np.asarray(self.path, dtype=np.float64).reshape(-1, 3)
        if len(path) == 0:
            raise GeometryError("stroke path is empty")
        if not np.all(np.isfinite(path)):
            raise GeometryError("stroke path has non-finite points")
        object.__setattr__(self, "path", path)
        if not self.radius_world > 0:
            raise GeometryError(f"stroke radius must be positive, got {self.radius_world}")
        if self.mode not in ("keep", "drop"):
            raise GeometryError(f"stroke mode must be 'keep' or 'drop', got {self.mode!r}")


def stroke_to_json(stroke: BrushStroke) -> dict:
    return {
        "path": [[float(c) for c in p] for p in stroke.path],
        "radius": float(stroke.radius_world),
        "mode": stroke.mode,
    }


def stroke_from_json(record: dict) -> BrushStroke:
    try:
        return BrushStroke(
            np.asarray(record["path"], dtype=np.float64),
            float(record["radius"]),
            record.get("mode", "keep"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GeometryError(f"bad stroke record: {exc}") from exc


def _world_uniform_scale(t: Transform3) -> float:
    """Uniform scale factor of t; rejects anisotropy beyond MAX_SCALE_ANISOTROPY."""
    sing = np.linalg.svd(t.linear, compute_uv=False)
    if sing[0] > MAX_SCALE_ANISOTROPY * sing[-1]:
        raise GeometryError(
            f"world scale is anisotropic ({sing[0] / sing[-1]:.3f}:1 exceeds "
            f"{MAX_SCALE_ANISOTROPY}:1); spherical brush undefined"
        )
    return t.uniform_scale()


def polyline_distances(points: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Min Euclidean distance from each point to the polyline (segments, not samples)."""
    pts = np.asarray(points, dtype=np.float64)
    if len(path) == 1:
        return np.linalg.norm(pts - path[0], axis=1)
    best = np.full(len(pts), np.inf)
    for a, b in zip(path[:-1], path[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:  # repeated path point
            d = np.linalg.norm(pts - a, axis=1)
        else:
            t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
            d = np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)
        np.minimum(best, d, out=best)
    return best


def apply_stroke(mesh: TriMesh, stroke: BrushStroke, world_transform: Transform3) -> np.ndarray:
    """Return the mesh's selection mask updated by one stroke (mesh unmodified).

    Vertices within radius_world / s of the stroke path (in local space, path
    mapped through the inverse world transform; s = world uniform scale) are
    set to the stroke mode. All other vertices keep their previous state.
    """
    s = _world_uniform_scale(world_transform)
    local_path = world_transform.inverse().apply_points(stroke.path)
    r_eff = stroke.radius_world / s
    inside = polyline_distances(mesh.vertices, local_path) <= r_eff
    mask = mesh.mask.copy()
    mask[inside] = stroke.mode == "keep"
    return mask


def set_all(mesh: TriMesh, kept: bool) -> np.ndarray:
    """Reset the mesh mask to uniformly kept or dropped; returns the new mask."""
    mesh.mask = np.full(mesh.n_vertices, bool(kept))
    return mesh.mask


def mask_stats(mask: np.ndarray) -> tuple[int, int]:
    m = np.asarray(mask, dtype=bool)
    return int(m.sum()), int(m.size)


@dataclass
class PaintedAsset:
    """A mesh plus its stroke history; replaying strokes rebuilds the mask."""

    mesh: TriMesh
    strokes: list[BrushStroke] = field(default_factory=list)

    def add_stroke(self, stroke: BrushStroke, world_transform: Transform3 | None = None) -> None:
        wt = world_transform if world_transform is not None else Transform3.identity()
        self.mesh.mask = apply_stroke(self.mesh, stroke, wt)
        self.strokes.append(stroke)
