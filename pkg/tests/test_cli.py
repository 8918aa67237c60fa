"""End-to-end checks for the command line entry points."""

import dataclasses
import json

import numpy as np
import pytest
from click.testing import CliRunner

from voxcompose import cli
from voxcompose.bench import run_sweep
from voxcompose.geometry import is_watertight, load_mesh


@pytest.fixture
def runner():
    return CliRunner()


def _write_scene(path, resolution=32):
    doc = {
        "version": 1,
        "assets": [{"id": "ball", "generator": {"kind": "sphere", "params": {}}, "strokes": []}],
        "instances": [
            {
                "id": "i0",
                "asset_id": "ball",
                "transform": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1],
            }
        ],
        "compose_params": {
            "resolution": resolution,
            "selection_threshold_voxels": 1.0,
            "closing_passes": 1,
        },
    }
    path.write_text(json.dumps(doc))


def test_gen_writes_obj(runner, tmp_path):
    out = tmp_path / "shape.obj"
    result = runner.invoke(cli.main, ["gen", "torus", "--out", str(out)])
    assert result.exit_code == 0, result.output
    mesh = load_mesh(out)
    assert mesh.n_vertices > 0
    assert result.output.strip() == f"{out}: {mesh.n_vertices} vertices, {mesh.n_faces} faces"


def test_gen_param_overrides(runner, tmp_path):
    out = tmp_path / "ball.obj"
    result = runner.invoke(
        cli.main,
        ["gen", "sphere", "--out", str(out), "--param", "radius=1.25", "--param", "subdivisions=2"],
    )
    assert result.exit_code == 0, result.output
    mesh = load_mesh(out)
    # two subdivision rounds of an icosahedron
    assert mesh.n_vertices == 162
    assert np.linalg.norm(mesh.vertices, axis=1).max() == pytest.approx(1.25)


def test_gen_rejects_malformed_param(runner, tmp_path):
    out = str(tmp_path / "x.obj")
    result = runner.invoke(cli.main, ["gen", "sphere", "--out", out, "--param", "radius"])
    assert result.exit_code == 2
    assert "expected KEY=VALUE" in result.output
    result = runner.invoke(cli.main, ["gen", "sphere", "--out", out, "--param", "radius=big"])
    assert result.exit_code == 2
    assert "non-numeric" in result.output


def test_gen_rejects_unknown_kind(runner, tmp_path):
    result = runner.invoke(cli.main, ["gen", "pyramid", "--out", str(tmp_path / "x.obj")])
    assert result.exit_code == 2


def test_compose_scene_file(runner, tmp_path):
    scene_file = tmp_path / "scene.json"
    _write_scene(scene_file)
    out = tmp_path / "composed.obj"
    result = runner.invoke(cli.main, ["compose", str(scene_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert is_watertight(load_mesh(out))


def test_compose_resolution_override(runner, tmp_path):
    scene_file = tmp_path / "scene.json"
    _write_scene(scene_file)
    base = tmp_path / "base.obj"
    fine = tmp_path / "fine.obj"
    assert runner.invoke(cli.main, ["compose", str(scene_file), "--out", str(base)]).exit_code == 0
    result = runner.invoke(
        cli.main, ["compose", str(scene_file), "--out", str(fine), "--resolution", "48"]
    )
    assert result.exit_code == 0, result.output
    assert base.read_bytes() != fine.read_bytes()


def test_compose_reports_scene_errors(runner, tmp_path):
    scene_file = tmp_path / "broken.json"
    scene_file.write_text(json.dumps({"assets": [], "instances": [{"id": "i0"}]}))
    out = str(tmp_path / "x.obj")
    result = runner.invoke(cli.main, ["compose", str(scene_file), "--out", out])
    assert result.exit_code == 1
    assert "Error" in result.output


def test_sweep_writes_csv_and_plots(runner, tmp_path, monkeypatch):
    # keep the fidelity knobs small; the flag wiring under test is unchanged
    def small(spec):
        return run_sweep(
            dataclasses.replace(
                spec,
                categories=("sphere", "box", "block", "torus", "bent_tube"),
                chamfer_samples=300,
                iou_resolution=32,
            )
        )

    monkeypatch.setattr(cli, "run_sweep", small)
    csv_path = tmp_path / "sweep.csv"
    plot_dir = tmp_path / "plots"
    result = runner.invoke(
        cli.main,
        [
            "sweep", "--kind", "translation", "--steps", "2", "--resolution", "48",
            "--workers", "1", "--out-csv", str(csv_path), "--out-plot", str(plot_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = csv_path.read_text().splitlines()
    # header, 25 pairs x 2 steps, one aggregate row per step
    assert len(lines) == 1 + 50 + 2
    svgs = sorted(p.name for p in plot_dir.glob("*.svg"))
    assert len(svgs) == 2
    echoed = result.output.splitlines()
    assert echoed[0] == f"{csv_path}: 50 cells, 0 failed"
    assert echoed[1:] == [str(plot_dir / name) for name in svgs]


def test_sweep_validates_spec(runner, tmp_path):
    result = runner.invoke(
        cli.main,
        ["sweep", "--kind", "translation", "--steps", "1", "--out-csv", str(tmp_path / "x.csv")],
    )
    assert result.exit_code == 1
    assert "steps must be >= 2" in result.output


def test_serve_merges_config_with_flag_priority(runner, tmp_path, monkeypatch):
    calls = []
    monkeypatch.setattr("uvicorn.run", lambda app, host, port: calls.append((app, host, port)))
    cfg = tmp_path / "server.json"
    cfg.write_text(json.dumps({"port": 9100, "host": "0.0.0.0", "assets": str(tmp_path / "a")}))

    result = runner.invoke(cli.main, ["serve", "--config", str(cfg)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(cli.main, ["serve", "--config", str(cfg), "--port", "7777"])
    assert result.exit_code == 0, result.output

    (_, host0, port0), (_, host1, port1) = calls
    assert (host0, port0) == ("0.0.0.0", 9100)
    # explicit flag beats the config file, the rest still comes from it
    assert (host1, port1) == ("0.0.0.0", 7777)


def test_serve_rejects_malformed_config(runner, tmp_path, monkeypatch):
    monkeypatch.setattr("uvicorn.run", lambda *a, **k: None)
    cfg = tmp_path / "server.json"
    cfg.write_text("{not json")
    result = runner.invoke(cli.main, ["serve", "--config", str(cfg)])
    assert result.exit_code == 1
    assert "bad config file" in result.output
