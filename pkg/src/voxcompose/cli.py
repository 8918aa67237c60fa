"""Command line umbrella: generate procedural meshes, compose scene files,
run fidelity sweeps, and serve the HTTP API.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .bench import SWEEP_KINDS, SweepSpec, emit_csv, emit_plot, run_sweep
from .decode import compose as compose_scene
from .geometry import GeometryError, save_mesh
from .scene import SceneError, scene_load
from .service import ASSETS_ENV, FRONTEND_ENV, create_app
from .shapes import SHAPE_KINDS, gen_shape


def _numeric(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


@click.group()
def main():
    """Compositional 3D modeling toolkit."""


@main.command()
@click.argument("kind", type=click.Choice(SHAPE_KINDS))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output OBJ path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--param",
    "params",
    multiple=True,
    metavar="KEY=VALUE",
    help="Generator parameter override; repeatable.",
)
def gen(kind, out, seed, params):
    """Generate a procedural shape and write it as OBJ."""
    overrides = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected KEY=VALUE, got {item!r}", param_hint="--param")
        try:
            overrides[key] = _numeric(value)
        except ValueError:
            raise click.BadParameter(f"{item!r} has a non-numeric value", param_hint="--param")
    try:
        mesh = gen_shape(kind, overrides or None, seed)
    except GeometryError as exc:
        raise click.ClickException(str(exc))
    save_mesh(mesh, out)
    click.echo(f"{out}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")


@main.command()
@click.argument("scene_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output OBJ path.")
@click.option("--resolution", type=int, default=None, help="Override scene compose resolution.")
def compose(scene_file, out, resolution):
    """Compose a scene file into a single surface mesh."""
    try:
        scene = scene_load(scene_file)
        if resolution is not None:
            scene.compose_params.resolution = resolution
        mesh = compose_scene(scene)
    except (SceneError, GeometryError) as exc:
        raise click.ClickException(str(exc))
    save_mesh(mesh, out)
    click.echo(f"{out}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")


@main.command()
@click.option("--kind", type=click.Choice(SWEEP_KINDS), required=True)
@click.option("--steps", type=int, default=33, show_default=True)
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--baseline", type=float, default=1.8, show_default=True)
@click.option("--workers", type=int, default=None, help="Worker processes; default all CPUs.")
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True)
@click.option("--out-plot", type=click.Path(file_okay=False), default=None)
def sweep(kind, steps, resolution, seed, baseline, workers, out_csv, out_plot):
    """Run one transform sweep and write per-cell CSV plus optional plots."""
    try:
        spec = SweepSpec(
            kind=kind,
            steps=steps,
            compose_resolution=resolution,
            seed=seed,
            baseline_offset_extents=baseline,
            workers=workers,
        )
    except GeometryError as exc:
        raise click.ClickException(str(exc))
    result = run_sweep(spec)
    emit_csv(result, out_csv)
    failed = sum(1 for c in result.cells if not c.ok)
    click.echo(f"{out_csv}: {len(result.cells)} cells, {failed} failed")
    if out_plot is not None:
        Path(out_plot).mkdir(parents=True, exist_ok=True)
        for name in emit_plot(result, out_plot):
            click.echo(f"{Path(out_plot) / name}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--assets", type=click.Path(file_okay=False), default=None, help=f"Asset root; default ${ASSETS_ENV} or a temp dir.")
@click.option("--frontend", type=click.Path(file_okay=False), default=None, help=f"Static viewer bundle; default ${FRONTEND_ENV}.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config with port/host/assets/frontend; flags override.")
def serve(port, host, assets, frontend, config):
    """Serve the session API (and the viewer bundle when present)."""
    import uvicorn

    if config is not None:
        with open(config, encoding="utf-8") as fh:
            try:
                settings = json.load(fh)
            except json.JSONDecodeError as exc:
                raise click.ClickException(f"bad config file: {exc}")
        ctx = click.get_current_context()
        if ctx.get_parameter_source("port").name == "DEFAULT":
            port = settings.get("port", port)
        if ctx.get_parameter_source("host").name == "DEFAULT":
            host = settings.get("host", host)
        assets = assets or settings.get("assets")
        frontend = frontend or settings.get("frontend")
    app = create_app(assets_dir=assets, frontend_dir=frontend)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
