"""Scene files: assets (mesh file or generator, plus stroke history),
placed instances, and compose parameters. Plain JSON on disk, validated
against a schema with JSON-path diagnostics, self-contained enough that a
fresh process composes a saved scene to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .geometry import GeometryError, Transform3, TriMesh, load_mesh
from .segmentation import BrushStroke, apply_stroke, stroke_from_json, stroke_to_json
from .shapes import SHAPE_KINDS, gen_shape


class SceneError(ValueError):
    """Scene file violates the schema or its referential invariants."""


_STROKE_SCHEMA = {
    "type": "object",
    "required": ["path", "radius"],
    "additionalProperties": False,
    "properties": {
        "path": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 3,
                "maxItems": 3,
                "items": {"type": "number"},
            },
        },
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": ["keep", "drop"]},
    },
}

SCENE_SCHEMA = {
    "type": "object",
    "required": ["version", "assets", "instances"],
    "additionalProperties": False,
    "properties": {
        "version": {"type": "integer", "minimum": 1},
        "assets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "additionalProperties": False,
                "oneOf": [{"required": ["mesh_path"]}, {"required": ["generator"]}],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "mesh_path": {"type": "string", "minLength": 1},
                    "generator": {
                        "type": "object",
                        "required": ["kind"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"enum": list(SHAPE_KINDS)},
                            "params": {"type": "object"},
                            "seed": {"type": "integer"},
                        },
                    },
                    "strokes": {"type": "array", "items": _STROKE_SCHEMA},
                },
            },
        },
        "instances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["asset_id", "transform"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "asset_id": {"type": "string", "minLength": 1},
                    "transform": {
                        "type": "array",
                        "minItems": 16,
                        "maxItems": 16,
                        "items": {"type": "number"},
                    },
                },
            },
        },
        "compose_params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "resolution": {"type": "integer", "minimum": 8},
                "selection_threshold_voxels": {"type": "number", "exclusiveMinimum": 0},
                "closing_passes": {"type": "integer", "minimum": 0, "maximum": 3},
            },
        },
    },
}


@dataclass
class ComposeParams:
    resolution: int = 64
    selection_threshold_voxels: float = 1.0
    closing_passes: int = 1


@dataclass
class SceneAsset:
    id: str
    mesh_path: str | None = None
    generator: dict | None = None
    strokes: list[BrushStroke] = field(default_factory=list)


@dataclass
class SceneInstance:
    id: str
    asset_id: str
    transform: Transform3


@dataclass
class Scene:
    version: int = 1
    assets: list[SceneAsset] = field(default_factory=list)
    instances: list[SceneInstance] = field(default_factory=list)
    compose_params: ComposeParams = field(default_factory=ComposeParams)
    base_dir: Path | None = None  # directory mesh_path entries resolve against

    def asset(self, asset_id: str) -> SceneAsset:
        for a in self.assets:
            if a.id == asset_id:
                return a
        raise SceneError(f"unknown asset id {asset_id!r}")

    def instance(self, instance_id: str) -> SceneInstance:
        for i in self.instances:
            if i.id == instance_id:
                return i
        raise SceneError(f"unknown instance id {instance_id!r}")


def scene_from_json(data: dict, base_dir: Path | None = None) -> Scene:
    """Build a Scene from parsed JSON; raises SceneError with a JSON path."""
    errors = sorted(
        jsonschema.Draft202012Validator(SCENE_SCHEMA).iter_errors(data),
        key=lambda e: len(e.absolute_path),
    )
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise SceneError(f"scene schema violation at {best.json_path}: {best.message}")

    assets = []
    seen = set()
    for i, a in enumerate(data["assets"]):
        if a["id"] in seen:
            raise SceneError(f"duplicate asset id at $.assets[{i}].id: {a['id']!r}")
        seen.add(a["id"])
        try:
            strokes = [stroke_from_json(s) for s in a.get("strokes", [])]
        except GeometryError as exc:
            raise SceneError(f"bad stroke in $.assets[{i}].strokes: {exc}") from exc
        assets.append(
            SceneAsset(a["id"], a.get("mesh_path"), a.get("generator"), strokes)
        )

    instances = []
    inst_ids = {inst.get("id") for inst in data["instances"] if inst.get("id")}
    auto = 0
    for i, inst in enumerate(data["instances"]):
        if inst["asset_id"] not in seen:
            raise SceneError(
                f"$.instances[{i}].asset_id references unknown asset {inst['asset_id']!r}"
            )
        iid = inst.get("id")
        if iid is None:
            while f"i{auto}" in inst_ids:
                auto += 1
            iid = f"i{auto}"
            inst_ids.add(iid)
        elif sum(1 for j in data["instances"] if j.get("id") == iid) > 1:
            raise SceneError(f"duplicate instance id at $.instances[{i}].id: {iid!r}")
        try:
            t = Transform3.from_list(inst["transform"])
        except GeometryError as exc:
            raise SceneError(f"$.instances[{i}].transform: {exc}") from exc
        instances.append(SceneInstance(iid, inst["asset_id"], t))

    cp = data.get("compose_params", {})
    params = ComposeParams(
        resolution=cp.get("resolution", 64),
        selection_threshold_voxels=cp.get("selection_threshold_voxels", 1.0),
        closing_passes=cp.get("closing_passes", 1),
    )
    return Scene(data["version"], assets, instances, params, base_dir)


def scene_to_json(scene: Scene) -> dict:
    """Canonical JSON form: every field explicit, instance ids always present."""
    return {
        "version": scene.version,
        "assets": [
            {
                "id": a.id,
                **({"mesh_path": a.mesh_path} if a.mesh_path is not None else {}),
                **({"generator": a.generator} if a.generator is not None else {}),
                "strokes": [stroke_to_json(s) for s in a.strokes],
            }
            for a in scene.assets
        ],
        "instances": [
            {"id": i.id, "asset_id": i.asset_id, "transform": i.transform.to_list()}
            for i in scene.instances
        ],
        "compose_params": {
            "resolution": scene.compose_params.resolution,
            "selection_threshold_voxels": scene.compose_params.selection_threshold_voxels,
            "closing_passes": scene.compose_params.closing_passes,
        },
    }


def scene_load(path) -> Scene:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file is not valid JSON: {exc}") from exc
    return scene_from_json(data, base_dir=p.parent)


def scene_save(scene: Scene, path) -> None:
    p = Path(path)
    p.write_text(json.dumps(scene_to_json(scene), indent=2) + "\n", encoding="utf-8")


def resolve_asset_mesh(asset: SceneAsset, base_dir: Path | None = None) -> TriMesh:
    """Load or generate the asset mesh and replay its strokes into the mask.

    Stroke paths are stored in asset-local coordinates, so replay uses the
    identity world transform; instance placement happens later in the
    pipeline.
    """
    if asset.generator is not None:
        gen = asset.generator
        mesh = gen_shape(gen["kind"], gen.get("params"), gen.get("seed", 0))
    else:
        p = Path(asset.mesh_path)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        mesh = load_mesh(p)
    ident = Transform3.identity()
    for stroke in asset.strokes:
        mesh.mask = apply_stroke(mesh, stroke, ident)
    return mesh
