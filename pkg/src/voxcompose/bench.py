"""Transform-sweep benchmark over shape-category pairs.

Two normalized shapes sit a fixed baseline apart along x. One transform
parameter sweeps across its range; every (pair, step) cell runs the full
compose pipeline and is scored against the union-of-inputs reference with
squared Chamfer distance and volumetric IoU. Cells are independent, so the
sweep parallelizes over a process pool.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
from dataclasses import dataclass, field

import numpy as np

from .decode import decode_surface, solidify
from .geometry import (
    GeometryError,
    Transform3,
    apply_transform,
    merge_meshes,
    normalize_unit_bbox,
    sample_surface,
)
from .latent import encode_mesh, latent_union, transform_volume
from .metrics import (
    DEFAULT_IOU_RESOLUTION,
    DEFAULT_SAMPLE_COUNT,
    chamfer_sq,
    confidence_interval_95,
    mesh_iou,
    reference_composite,
)
from .shapes import SHAPE_KINDS, gen_shape

SWEEP_KINDS = ("translation", "rotation", "scale")
DEFAULT_CATEGORIES = ("elongated", "bent_tube", "torus", "thin_ring", "sphere")

DETAIL_COLUMNS = ("sweep_kind", "anchor", "other", "step", "param_value",
                  "chamfer_sq", "iou", "status")
AGGREGATE_COLUMNS = ("mean_chamfer_sq", "ci_chamfer_sq", "mean_iou", "ci_iou",
                     "n_valid")
CSV_HEADER = ",".join(DETAIL_COLUMNS + AGGREGATE_COLUMNS)


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    steps: int = 33
    baseline_offset_extents: float = 1.8
    compose_resolution: int = 64
    seed: int = 0
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    chamfer_samples: int = DEFAULT_SAMPLE_COUNT
    iou_resolution: int = DEFAULT_IOU_RESOLUTION
    workers: int | None = None  # None = one per available CPU

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise GeometryError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        if self.steps < 2:
            raise GeometryError(f"steps must be >= 2, got {self.steps}")
        if not self.baseline_offset_extents > 0:
            raise GeometryError("baseline offset must be positive")
        unknown = [c for c in self.categories if c not in SHAPE_KINDS]
        if unknown:
            raise GeometryError(f"unknown categories: {unknown}")
        if self.workers is not None and self.workers < 1:
            raise GeometryError("workers must be >= 1")


@dataclass(frozen=True)
class SweepCell:
    anchor: str
    other: str
    step: int
    param_value: float
    chamfer_sq: float | None
    iou: float | None
    status: str  # "ok" or "error:<kind>"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class StepAggregate:
    step: int
    param_value: float
    mean_chamfer_sq: float | None
    ci_chamfer_sq: float | None
    mean_iou: float | None
    ci_iou: float | None
    n_valid: int


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list[SweepCell] = field(default_factory=list)

    def aggregates(self) -> list[StepAggregate]:
        params = sweep_parameters(self.spec)
        out = []
        for step, value in enumerate(params):
            good = [c for c in self.cells if c.step == step and c.ok]
            ch = [c.chamfer_sq for c in good]
            io_ = [c.iou for c in good]
            if len(good) >= 2:
                mc, cc = confidence_interval_95(ch)
                mi, ci = confidence_interval_95(io_)
            elif len(good) == 1:
                mc, cc, mi, ci = ch[0], None, io_[0], None
            else:
                mc = cc = mi = ci = None
            out.append(StepAggregate(step, float(value), mc, cc, mi, ci, len(good)))
        return out


def sweep_parameters(spec: SweepSpec) -> np.ndarray:
    """Per-step parameter values: extents, degrees, or scale factors."""
    if spec.kind == "translation":
        return np.linspace(0.0, 5.0, spec.steps)
    if spec.kind == "rotation":
        return np.linspace(-180.0, 180.0, spec.steps)
    return 10.0 ** np.linspace(-1.0, 1.0, spec.steps)  # 0.1x .. 10x geometric


def enumerate_pairs(categories=DEFAULT_CATEGORIES) -> list[tuple[str, str]]:
    """All ordered category pairs, self-pairs included, anchor-major order."""
    cats = tuple(categories)
    if len(cats) != 5:
        raise GeometryError(f"expected exactly 5 categories, got {len(cats)}")
    return [(a, b) for a in cats for b in cats]


def step_transform(spec: SweepSpec, value: float) -> Transform3:
    """Placement of the swept object for one parameter value.

    The baseline offset keeps the pair separated at the identity parameter;
    rotation and scale act about the object's own center before placement.
    """
    base = Transform3.translation(spec.baseline_offset_extents, 0.0, 0.0)
    if spec.kind == "translation":
        return Transform3.translation(spec.baseline_offset_extents + value, 0.0, 0.0)
    if spec.kind == "rotation":
        return base @ Transform3.rotation_y(math.radians(value))
    return base @ Transform3.scaling(value)


# ---------------------------------------------------------------------------
# cell evaluation (worker side)
# ---------------------------------------------------------------------------

# populated per process by _init_worker; read-only afterwards
_WORKER: dict = {}


def _init_worker(spec: SweepSpec) -> None:
    meshes = {}
    volumes = {}
    for cat in set(spec.categories):
        mesh, _ = normalize_unit_bbox(gen_shape(cat))
        meshes[cat] = mesh
        volumes[cat] = encode_mesh(mesh, spec.compose_resolution, seed=spec.seed)
    _WORKER["spec"] = spec
    _WORKER["meshes"] = meshes
    _WORKER["volumes"] = volumes
    _WORKER["pairs"] = enumerate_pairs(spec.categories)
    _WORKER["params"] = sweep_parameters(spec)


def _eval_cell(job: tuple[int, int]) -> SweepCell:
    pair_idx, step = job
    spec: SweepSpec = _WORKER["spec"]
    anchor, other = _WORKER["pairs"][pair_idx]
    value = float(_WORKER["params"][step])
    cell_seed = spec.seed + 1009 * (pair_idx * spec.steps + step)
    try:
        t = step_transform(spec, value)
        union = latent_union(
            [_WORKER["volumes"][anchor], transform_volume(_WORKER["volumes"][other], t)],
            spec.compose_resolution,
        )
        decoded = decode_surface(solidify(union), union)

        anchor_mesh = _WORKER["meshes"][anchor]
        other_mesh = _WORKER["meshes"][other]
        ref_points, _ = reference_composite(
            [(anchor_mesh, Transform3.identity()), (other_mesh, t)],
            spec.chamfer_samples,
            spec.compose_resolution,
            seed=cell_seed,
        )
        decoded_points = sample_surface(decoded, spec.chamfer_samples, seed=cell_seed + 1)
        ch = chamfer_sq(decoded_points, ref_points)

        reference_mesh = merge_meshes([anchor_mesh, apply_transform(other_mesh, t)])
        iou = mesh_iou(decoded, reference_mesh, spec.iou_resolution)
        return SweepCell(anchor, other, step, value, ch, iou, "ok")
    except (GeometryError, ValueError, MemoryError) as exc:
        return SweepCell(anchor, other, step, value, None, None,
                         f"error:{type(exc).__name__}")


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every (pair, step) cell, in parallel when workers allow.

    Results are deterministic for a given spec regardless of worker count:
    cell seeds derive from cell indices, never from scheduling order.
    """
    pairs = enumerate_pairs(spec.categories)
    jobs = [(pi, si) for pi in range(len(pairs)) for si in range(spec.steps)]
    workers = spec.workers if spec.workers is not None else (os.cpu_count() or 1)
    if workers == 1:
        _init_worker(spec)
        cells = [_eval_cell(j) for j in jobs]
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker, initargs=(spec,)) as pool:
            cells = pool.map(_eval_cell, jobs, chunksize=max(1, len(jobs) // (workers * 8)))
    return SweepResult(spec, cells)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def emit_csv(result: SweepResult, path) -> None:
    """Single table: detail rows first, then one aggregate row per step.

    Aggregate rows carry anchor=* other=* and fill only the aggregate
    columns; floats print at full precision so parsing is lossless.
    """
    lines = [CSV_HEADER]
    kind = result.spec.kind
    for c in result.cells:
        lines.append(
            f"{kind},{c.anchor},{c.other},{c.step},{_fmt(c.param_value)},"
            f"{_fmt(c.chamfer_sq)},{_fmt(c.iou)},{c.status},,,,,"
        )
    for a in result.aggregates():
        lines.append(
            f"{kind},*,*,{a.step},{_fmt(a.param_value)},,,,"
            f"{_fmt(a.mean_chamfer_sq)},{_fmt(a.ci_chamfer_sq)},"
            f"{_fmt(a.mean_iou)},{_fmt(a.ci_iou)},{a.n_valid}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def emit_plot(result: SweepResult, out_dir) -> list[str]:
    """One SVG per metric: mean line plus shaded 95% CI band."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    aggs = result.aggregates()
    x = np.array([a.param_value for a in aggs])
    written = []
    for metric, mean_of, ci_of in (
        ("chamfer_sq", lambda a: a.mean_chamfer_sq, lambda a: a.ci_chamfer_sq),
        ("iou", lambda a: a.mean_iou, lambda a: a.ci_iou),
    ):
        mean = np.array([np.nan if mean_of(a) is None else mean_of(a) for a in aggs])
        ci = np.array([0.0 if ci_of(a) is None else ci_of(a) for a in aggs])
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(x, mean, lw=1.5)
        ax.fill_between(x, mean - ci, mean + ci, alpha=0.3, lw=0)
        if result.spec.kind == "scale":
            ax.set_xscale("log")
        ax.set_xlabel(_AXIS_LABELS[result.spec.kind])
        ax.set_ylabel(metric)
        ax.set_title(f"{result.spec.kind} sweep, {len(result.cells)} cells")
        fig.tight_layout()
        name = f"sweep_{result.spec.kind}_{metric}.svg"
        fig.savefig(os.path.join(out_dir, name), format="svg")
        plt.close(fig)
        written.append(name)
    return written


_AXIS_LABELS = {
    "translation": "offset beyond baseline (object extents)",
    "rotation": "rotation about y (degrees)",
    "scale": "uniform scale factor",
}
