"""Session API: revisions, asset/stroke/instance lifecycle, compose + staleness."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from voxcompose.decode import compose
from voxcompose.geometry import Transform3, is_watertight, mesh_to_obj_bytes
from voxcompose.scene import scene_load
from voxcompose.segmentation import BrushStroke, apply_stroke
from voxcompose.shapes import gen_shape
from voxcompose.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(assets_dir=tmp_path / "assets")
    with TestClient(app) as c:
        yield c


def new_session(client):
    r = client.post("/sessions")
    assert r.status_code == 200
    body = r.json()
    assert body["revision"] == 0
    return body["id"]


def add_sphere(client, sid, **gen):
    spec = {"kind": "sphere", **gen}
    r = client.post(f"/sessions/{sid}/assets", json={"generator": spec})
    assert r.status_code == 200
    return r.json()


def add_instance(client, sid, asset_id):
    r = client.post(f"/sessions/{sid}/instances", json={"asset_id": asset_id})
    assert r.status_code == 200
    return r.json()["instance_id"]


# ---------------------------------------------------------------------------
# sessions and assets
# ---------------------------------------------------------------------------


def test_new_session_is_empty(client):
    sid = new_session(client)
    r = client.get(f"/sessions/{sid}/scene")
    assert r.status_code == 200
    assert r.headers["X-Scene-Revision"] == "0"
    assert r.json() == {
        "version": 1,
        "assets": [],
        "instances": [],
        "compose_params": {
            "resolution": 64,
            "selection_threshold_voxels": 1.0,
            "closing_passes": 1,
        },
    }


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope/scene").status_code == 404
    assert client.post("/sessions/nope/compose").status_code == 404
    assert client.delete("/sessions/nope").status_code == 404


def test_upload_asset_roundtrip(client):
    sid = new_session(client)
    mesh = gen_shape("torus")
    payload = mesh_to_obj_bytes(mesh)
    r = client.post(
        f"/sessions/{sid}/assets",
        files={"file": ("torus.obj", payload, "model/obj")},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["asset_id"] == "a0"
    assert body["revision"] == 1
    assert body["n_vertices"] == mesh.n_vertices

    fetched = client.get(f"/sessions/{sid}/assets/a0/mesh")
    assert fetched.status_code == 200
    assert fetched.headers["content-type"].startswith("model/obj")
    assert fetched.content == payload

    scene = client.get(f"/sessions/{sid}/scene").json()
    assert scene["assets"][0]["mesh_path"] == "a0.obj"


def test_upload_rejects_garbage_with_diagnostic(client):
    sid = new_session(client)
    r = client.post(
        f"/sessions/{sid}/assets",
        files={"file": ("bad.obj", b"v 1 2\nf 1 2 3\n", "model/obj")},
    )
    assert r.status_code == 422
    assert "line" in r.json()["detail"]
    # the failed upload must not burn an id or leave scene residue
    assert client.get(f"/sessions/{sid}/scene").json()["assets"] == []
    assert add_sphere(client, sid)["asset_id"] == "a0"


def test_generator_asset_and_mask(client):
    sid = new_session(client)
    body = add_sphere(client, sid, seed=3)
    n = body["n_vertices"]
    mask = client.get(f"/sessions/{sid}/assets/a0/mask").json()
    assert mask["kept"] == n and mask["dropped"] == 0
    assert mask["mask"] == [1] * n


def test_generator_asset_rejects_unknown_kind(client):
    sid = new_session(client)
    r = client.post(f"/sessions/{sid}/assets", json={"generator": {"kind": "teapot"}})
    assert r.status_code == 422
    r = client.post(f"/sessions/{sid}/assets", json={"not_generator": 1})
    assert r.status_code == 422


# ---------------------------------------------------------------------------
# strokes
# ---------------------------------------------------------------------------


def test_stroke_updates_mask_and_matches_library(client):
    sid = new_session(client)
    add_sphere(client, sid)
    stroke = {"path": [[0.0, 0.5, 0.0]], "radius": 0.3, "mode": "drop"}
    r = client.post(f"/sessions/{sid}/assets/a0/strokes", json=stroke)
    assert r.status_code == 200
    body = r.json()
    assert body["revision"] == 2
    assert body["dropped"] > 0
    assert body["kept"] + body["dropped"] == len(body["mask"])

    mesh = gen_shape("sphere")
    expected = apply_stroke(
        mesh, BrushStroke(np.array([[0.0, 0.5, 0.0]]), 0.3, "drop"), Transform3.identity()
    )
    assert body["mask"] == expected.astype(int).tolist()

    # the stroke is part of the scene record now
    scene = client.get(f"/sessions/{sid}/scene").json()
    assert scene["assets"][0]["strokes"] == [
        {"path": [[0.0, 0.5, 0.0]], "radius": 0.3, "mode": "drop"}
    ]


def test_stroke_validation_and_unknown_asset(client):
    sid = new_session(client)
    add_sphere(client, sid)
    bad = {"path": [], "radius": 0.3}
    assert client.post(f"/sessions/{sid}/assets/a0/strokes", json=bad).status_code == 422
    ok = {"path": [[0, 0, 0]], "radius": 0.1}
    assert client.post(f"/sessions/{sid}/assets/a9/strokes", json=ok).status_code == 404


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def test_instance_add_duplicate_and_transform(client):
    sid = new_session(client)
    add_sphere(client, sid)
    iid = add_instance(client, sid, "a0")
    assert iid == "i0"

    t = Transform3.translation(2.0, 0.0, 0.0).to_list()
    r = client.put(f"/sessions/{sid}/instances/i0/transform", json={"transform": t})
    assert r.status_code == 200

    r = client.post(f"/sessions/{sid}/instances", json={"duplicate_of": "i0"})
    assert r.json()["instance_id"] == "i1"

    scene = client.get(f"/sessions/{sid}/scene").json()
    assert [i["id"] for i in scene["instances"]] == ["i0", "i1"]
    assert scene["instances"][0]["transform"] == t
    # duplicate starts from the source placement
    assert scene["instances"][1]["transform"] == t
    assert scene["instances"][1]["asset_id"] == "a0"


def test_instance_body_validation(client):
    sid = new_session(client)
    add_sphere(client, sid)
    url = f"/sessions/{sid}/instances"
    assert client.post(url, json={}).status_code == 422
    assert client.post(url, json={"asset_id": "a0", "duplicate_of": "i0"}).status_code == 422
    assert client.post(url, json={"asset_id": "missing"}).status_code == 404
    assert client.post(url, json={"duplicate_of": "i9"}).status_code == 404
    singular = [0.0] * 16
    r = client.post(url, json={"asset_id": "a0", "transform": singular})
    assert r.status_code == 422
    r = client.put(
        f"/sessions/{sid}/instances/i9/transform",
        json={"transform": Transform3.identity().to_list()},
    )
    assert r.status_code == 404


def test_delete_asset_cascades_to_instances(client):
    sid = new_session(client)
    add_sphere(client, sid)
    add_sphere(client, sid, seed=1)
    add_instance(client, sid, "a0")
    add_instance(client, sid, "a0")
    add_instance(client, sid, "a1")

    r = client.delete(f"/sessions/{sid}/assets/a0")
    assert r.status_code == 200
    assert r.json()["deleted_instances"] == 2
    scene = client.get(f"/sessions/{sid}/scene").json()
    assert [a["id"] for a in scene["assets"]] == ["a1"]
    assert [i["asset_id"] for i in scene["instances"]] == ["a1"]


def test_delete_instance(client):
    sid = new_session(client)
    add_sphere(client, sid)
    add_instance(client, sid, "a0")
    assert client.delete(f"/sessions/{sid}/instances/i0").status_code == 200
    assert client.get(f"/sessions/{sid}/scene").json()["instances"] == []
    assert client.delete(f"/sessions/{sid}/instances/i0").status_code == 404


def test_revision_bumps_on_every_mutation(client):
    sid = new_session(client)
    revs = [add_sphere(client, sid)["revision"]]
    revs.append(
        client.post(
            f"/sessions/{sid}/assets/a0/strokes",
            json={"path": [[0, 0, 0]], "radius": 0.1},
        ).json()["revision"]
    )
    revs.append(client.post(f"/sessions/{sid}/instances", json={"asset_id": "a0"}).json()["revision"])
    revs.append(
        client.put(
            f"/sessions/{sid}/instances/i0/transform",
            json={"transform": Transform3.identity().to_list()},
        ).json()["revision"]
    )
    revs.append(client.delete(f"/sessions/{sid}/instances/i0").json()["revision"])
    assert revs == [1, 2, 3, 4, 5]


def test_sessions_are_independent(client):
    a = new_session(client)
    b = new_session(client)
    add_sphere(client, a)
    assert client.get(f"/sessions/{b}/scene").headers["X-Scene-Revision"] == "0"
    assert client.get(f"/sessions/{b}/scene").json()["assets"] == []


# ---------------------------------------------------------------------------
# compose, result, staleness
# ---------------------------------------------------------------------------


def test_compose_result_and_staleness(client):
    sid = new_session(client)
    add_sphere(client, sid)
    add_instance(client, sid, "a0")

    status = client.get(f"/sessions/{sid}/compose/status").json()
    assert status["state"] == "idle" and status["result_revision"] is None

    r = client.post(f"/sessions/{sid}/compose")
    assert r.status_code == 200
    assert r.json()["n_vertices"] > 0

    res = client.get(f"/sessions/{sid}/result")
    assert res.status_code == 200
    assert res.headers["X-Stale"] == "false"
    assert res.headers["X-Result-Revision"] == res.headers["X-Scene-Revision"]

    # mutation after compose flags the stored result as stale
    client.put(
        f"/sessions/{sid}/instances/i0/transform",
        json={"transform": Transform3.translation(1.0, 0, 0).to_list()},
    )
    status = client.get(f"/sessions/{sid}/compose/status").json()
    assert status["state"] == "done" and status["stale"] is True
    assert client.get(f"/sessions/{sid}/result").headers["X-Stale"] == "true"

    client.post(f"/sessions/{sid}/compose")
    assert client.get(f"/sessions/{sid}/result").headers["X-Stale"] == "false"


def test_result_is_a_watertight_obj(client, tmp_path):
    sid = new_session(client)
    add_sphere(client, sid)
    add_instance(client, sid, "a0")
    client.post(f"/sessions/{sid}/compose")
    data = client.get(f"/sessions/{sid}/result").content
    p = tmp_path / "result.obj"
    p.write_bytes(data)
    from voxcompose.geometry import load_mesh

    assert is_watertight(load_mesh(p))


def test_compose_error_paths(client):
    sid = new_session(client)
    r = client.post(f"/sessions/{sid}/compose")
    assert r.status_code == 422
    assert r.json()["detail"]["stage"] == "compose"
    assert client.get(f"/sessions/{sid}/result").status_code == 404
    assert client.get(f"/sessions/{sid}/compose/status").json()["state"] == "error"

    # drop everything, then compose: the empty selection names the instance
    add_sphere(client, sid)
    add_instance(client, sid, "a0")
    client.post(
        f"/sessions/{sid}/assets/a0/strokes",
        json={"path": [[0.0, 0.0, 0.0]], "radius": 10.0, "mode": "drop"},
    )
    r = client.post(f"/sessions/{sid}/compose")
    assert r.status_code == 422
    assert "i0" in r.json()["detail"]["message"]


def test_saved_scene_composes_to_identical_bytes(client):
    sid = new_session(client)
    add_sphere(client, sid)
    client.post(
        f"/sessions/{sid}/assets/a0/strokes",
        json={"path": [[0.0, 0.5, 0.0]], "radius": 0.4, "mode": "drop"},
    )
    add_instance(client, sid, "a0")
    iid2 = client.post(f"/sessions/{sid}/instances", json={"duplicate_of": "i0"}).json()[
        "instance_id"
    ]
    t = (Transform3.translation(0.8, 0, 0) @ Transform3.rotation_y(0.7)).to_list()
    client.put(f"/sessions/{sid}/instances/{iid2}/transform", json={"transform": t})

    client.post(f"/sessions/{sid}/compose")
    service_bytes = client.get(f"/sessions/{sid}/result").content

    saved = client.post(f"/sessions/{sid}/save").json()["path"]
    mesh = compose(scene_load(saved))
    assert mesh_to_obj_bytes(mesh) == service_bytes
