"""HTTP facade over scenes: in-memory sessions, each a Scene plus a monotone
revision counter. Every mutation bumps the revision; composition results are
tagged with the revision they were computed from so clients can tell when a
result has gone stale. Mutations are serialized per session; reads run freely.

Session state lives in memory, but asset files and scene JSON go to a plain
directory per session, so any session can be reproduced by loading its scene
file in a fresh process.
"""

from __future__ import annotations

import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .decode import compose
from .geometry import GeometryError, Transform3, TriMesh, load_mesh, mesh_to_obj_bytes
from .scene import (
    Scene,
    SceneAsset,
    SceneError,
    SceneInstance,
    resolve_asset_mesh,
    scene_save,
    scene_to_json,
)
from .segmentation import apply_stroke, mask_stats, stroke_from_json

ASSETS_ENV = "VOXCOMPOSE_ASSETS"
FRONTEND_ENV = "VOXCOMPOSE_FRONTEND"

OBJ_MEDIA_TYPE = "model/obj"


class TransformBody(BaseModel):
    transform: list[float]


class InstanceBody(BaseModel):
    asset_id: str | None = None
    duplicate_of: str | None = None
    transform: list[float] | None = None


@dataclass
class SessionState:
    scene: Scene
    lock: threading.RLock = field(default_factory=threading.RLock)
    revision: int = 0
    next_asset: int = 0
    next_instance: int = 0
    meshes: dict[str, TriMesh] = field(default_factory=dict)  # stroke-replayed
    result: TriMesh | None = None
    result_revision: int | None = None
    result_error: str | None = None
    composing: bool = False

    def bump(self) -> int:
        self.revision += 1
        return self.revision


class SessionRegistry:
    def __init__(self, assets_root: Path):
        self.assets_root = assets_root
        self._sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def create(self) -> tuple[str, SessionState]:
        sid = "s" + uuid.uuid4().hex[:12]
        base = self.assets_root / sid
        base.mkdir(parents=True, exist_ok=True)
        state = SessionState(Scene(base_dir=base))
        with self._lock:
            self._sessions[sid] = state
        return sid, state

    def get(self, sid: str) -> SessionState:
        with self._lock:
            state = self._sessions.get(sid)
        if state is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return state

    def drop(self, sid: str) -> None:
        with self._lock:
            if self._sessions.pop(sid, None) is None:
                raise HTTPException(404, f"unknown session {sid!r}")


def _painted_mesh(state: SessionState, asset: SceneAsset) -> TriMesh:
    """Asset mesh with its stroke history replayed into the mask, cached."""
    mesh = state.meshes.get(asset.id)
    if mesh is None:
        mesh = resolve_asset_mesh(asset, state.scene.base_dir)
        state.meshes[asset.id] = mesh
    return mesh


def _mask_payload(state: SessionState, mesh: TriMesh) -> dict:
    kept, total = mask_stats(mesh.mask)
    return {
        "revision": state.revision,
        "kept": kept,
        "dropped": total - kept,
        "mask": mesh.mask.astype(int).tolist(),
    }


def _require_transform(values) -> Transform3:
    try:
        return Transform3.from_list(values)
    except GeometryError as exc:
        raise HTTPException(422, str(exc)) from exc


def _get_asset(state: SessionState, aid: str) -> SceneAsset:
    try:
        return state.scene.asset(aid)
    except SceneError as exc:
        raise HTTPException(404, str(exc)) from exc


def _get_instance(state: SessionState, iid: str) -> SceneInstance:
    try:
        return state.scene.instance(iid)
    except SceneError as exc:
        raise HTTPException(404, str(exc)) from exc


def create_app(assets_dir=None, frontend_dir=None) -> FastAPI:
    """Build the service. assets_dir falls back to $VOXCOMPOSE_ASSETS, then a
    temp directory; frontend_dir (or $VOXCOMPOSE_FRONTEND), when it exists, is
    mounted last as the static viewer bundle so API routes keep precedence.
    """
    root = assets_dir or os.environ.get(ASSETS_ENV) or tempfile.mkdtemp(prefix="voxcompose-")
    registry = SessionRegistry(Path(root))
    app = FastAPI(title="voxcompose")
    app.state.registry = registry

    @app.exception_handler(SceneError)
    @app.exception_handler(GeometryError)
    async def _domain_error(_req, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/sessions")
    def create_session():
        sid, state = registry.create()
        return {"id": sid, "revision": state.revision}

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        registry.drop(sid)
        return {"deleted": sid}

    @app.get("/sessions/{sid}/scene")
    def get_scene(sid: str, response: Response):
        state = registry.get(sid)
        response.headers["X-Scene-Revision"] = str(state.revision)
        return scene_to_json(state.scene)

    @app.post("/sessions/{sid}/assets")
    async def add_asset(sid: str, request: Request):
        state = registry.get(sid)
        ctype = request.headers.get("content-type", "")
        with state.lock:
            aid = f"a{state.next_asset}"
            state.next_asset += 1
            if ctype.startswith("multipart/"):
                form = await request.form()
                upload = form.get("file")
                if upload is None:
                    raise HTTPException(422, "multipart upload needs a 'file' part")
                path = state.scene.base_dir / f"{aid}.obj"
                path.write_bytes(await upload.read())
                try:
                    mesh = load_mesh(path)
                except GeometryError as exc:
                    path.unlink()
                    state.next_asset -= 1
                    raise HTTPException(422, str(exc)) from exc
                asset = SceneAsset(aid, mesh_path=f"{aid}.obj")
            else:
                body = await request.json()
                gen = body.get("generator") if isinstance(body, dict) else None
                if gen is None:
                    raise HTTPException(
                        422, "expected multipart OBJ or a JSON body with 'generator'"
                    )
                asset = SceneAsset(aid, generator=gen)
                try:
                    mesh = _painted_mesh(state, asset)
                except (GeometryError, KeyError) as exc:
                    state.next_asset -= 1
                    raise HTTPException(422, f"bad generator spec: {exc}") from exc
            state.scene.assets.append(asset)
            state.meshes[aid] = mesh
            return {
                "asset_id": aid,
                "revision": state.bump(),
                "n_vertices": mesh.n_vertices,
                "n_faces": mesh.n_faces,
            }

    @app.get("/sessions/{sid}/assets/{aid}/mesh")
    def get_asset_mesh(sid: str, aid: str):
        state = registry.get(sid)
        mesh = _painted_mesh(state, _get_asset(state, aid))
        return Response(mesh_to_obj_bytes(mesh), media_type=OBJ_MEDIA_TYPE)

    @app.get("/sessions/{sid}/assets/{aid}/mask")
    def get_asset_mask(sid: str, aid: str):
        state = registry.get(sid)
        return _mask_payload(state, _painted_mesh(state, _get_asset(state, aid)))

    @app.post("/sessions/{sid}/assets/{aid}/strokes")
    async def add_stroke(sid: str, aid: str, request: Request):
        state = registry.get(sid)
        record = await request.json()
        stroke = stroke_from_json(record)
        with state.lock:
            asset = _get_asset(state, aid)
            mesh = _painted_mesh(state, asset)
            mesh.mask = apply_stroke(mesh, stroke, Transform3.identity())
            asset.strokes.append(stroke)
            state.bump()
            return _mask_payload(state, mesh)

    @app.delete("/sessions/{sid}/assets/{aid}")
    def delete_asset(sid: str, aid: str):
        state = registry.get(sid)
        with state.lock:
            asset = _get_asset(state, aid)
            survivors = [i for i in state.scene.instances if i.asset_id != aid]
            cascaded = len(state.scene.instances) - len(survivors)
            state.scene.instances = survivors
            state.scene.assets.remove(asset)
            state.meshes.pop(aid, None)
            return {"revision": state.bump(), "deleted_instances": cascaded}

    @app.post("/sessions/{sid}/instances")
    def add_instance(sid: str, body: InstanceBody):
        state = registry.get(sid)
        with state.lock:
            if (body.asset_id is None) == (body.duplicate_of is None):
                raise HTTPException(
                    422, "provide exactly one of 'asset_id' or 'duplicate_of'"
                )
            if body.duplicate_of is not None:
                src = _get_instance(state, body.duplicate_of)
                asset_id, transform = src.asset_id, src.transform
            else:
                asset_id = _get_asset(state, body.asset_id).id
                transform = Transform3.identity()
            if body.transform is not None:
                transform = _require_transform(body.transform)
            iid = f"i{state.next_instance}"
            state.next_instance += 1
            state.scene.instances.append(SceneInstance(iid, asset_id, transform))
            return {"instance_id": iid, "revision": state.bump()}

    @app.put("/sessions/{sid}/instances/{iid}/transform")
    def set_transform(sid: str, iid: str, body: TransformBody):
        state = registry.get(sid)
        with state.lock:
            inst = _get_instance(state, iid)
            inst.transform = _require_transform(body.transform)
            return {"revision": state.bump()}

    @app.delete("/sessions/{sid}/instances/{iid}")
    def delete_instance(sid: str, iid: str):
        state = registry.get(sid)
        with state.lock:
            inst = _get_instance(state, iid)
            state.scene.instances.remove(inst)
            return {"revision": state.bump()}

    @app.post("/sessions/{sid}/compose")
    def compose_session(sid: str):
        state = registry.get(sid)
        with state.lock:
            state.composing = True
            try:
                state.result = compose(state.scene)
                state.result_revision = state.revision
                state.result_error = None
            except GeometryError as exc:
                state.result = None
                state.result_revision = state.revision
                state.result_error = str(exc)
                raise HTTPException(422, {"stage": "compose", "message": str(exc)})
            finally:
                state.composing = False
            return {
                "revision": state.revision,
                "n_vertices": state.result.n_vertices,
                "n_faces": state.result.n_faces,
            }

    @app.get("/sessions/{sid}/compose/status")
    def compose_status(sid: str):
        state = registry.get(sid)
        if state.composing:
            phase = "running"
        elif state.result_error is not None:
            phase = "error"
        elif state.result is not None:
            phase = "done"
        else:
            phase = "idle"
        return {
            "state": phase,
            "scene_revision": state.revision,
            "result_revision": state.result_revision,
            "stale": state.result_revision is not None
            and state.result_revision != state.revision,
            "error": state.result_error,
        }

    @app.get("/sessions/{sid}/result")
    def get_result(sid: str):
        state = registry.get(sid)
        if state.result is None:
            raise HTTPException(404, "no composition result; POST …/compose first")
        headers = {
            "X-Result-Revision": str(state.result_revision),
            "X-Scene-Revision": str(state.revision),
            "X-Stale": "true" if state.result_revision != state.revision else "false",
        }
        return Response(
            mesh_to_obj_bytes(state.result), media_type=OBJ_MEDIA_TYPE, headers=headers
        )

    @app.post("/sessions/{sid}/save")
    def save_scene(sid: str):
        state = registry.get(sid)
        with state.lock:
            path = state.scene.base_dir / "scene.json"
            scene_save(state.scene, path)
            return {"path": str(path), "revision": state.revision}

    static = frontend_dir or os.environ.get(FRONTEND_ENV)
    if static and Path(static).is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="viewer")

    return app
