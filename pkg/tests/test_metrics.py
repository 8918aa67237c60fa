"""Metrics against independent oracles: brute-force Chamfer, analytic IoU
volumes, high-precision t quantiles."""

import math

import mpmath
import numpy as np
import pytest

from voxcompose.geometry import (
    GeometryError,
    Transform3,
    TriMesh,
    apply_transform,
    sample_surface,
)
from voxcompose.metrics import (
    MetricRecord,
    chamfer_sq,
    confidence_interval_95,
    mesh_iou,
    reference_composite,
)
from voxcompose.shapes import gen_shape
from voxcompose.voxelize import cube_from_aabb, solid_occupancy


def chamfer_brute(a, b):
    # O(n*m) literal definition, evaluated without any spatial index
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def t_quantile_975_oracle(df):
    # integrate the t density at 50 digits and invert; no scipy involved
    mpmath.mp.dps = 50
    c = mpmath.gamma((df + 1) / 2) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))

    def cdf(x):
        return 0.5 + mpmath.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2.0), [0, x])

    return mpmath.findroot(lambda x: cdf(x) - mpmath.mpf("0.975"), mpmath.mpf(2))


# ---------------------------------------------------------------------------
# squared Chamfer distance
# ---------------------------------------------------------------------------


def test_chamfer_identical_sets_is_zero():
    pts = np.random.default_rng(0).normal(size=(500, 3))
    assert chamfer_sq(pts, pts.copy()) == 0.0


def test_chamfer_two_points_analytic():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[1.0, 0.0, 0.0]])
    assert chamfer_sq(a, b) == 2.0  # 1^2 each way


def test_chamfer_matches_brute_force_small():
    rng = np.random.default_rng(4)
    for _ in range(10):
        a = rng.normal(size=(rng.integers(1, 256), 3))
        b = rng.normal(size=(rng.integers(1, 256), 3))
        assert abs(chamfer_sq(a, b) - chamfer_brute(a, b)) < 1e-12


def test_chamfer_tree_path_matches_brute_force():
    # above the exhaustive cutoff the KD-tree path takes over; cross-check it
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2000, 3))
    b = rng.normal(size=(1500, 3)) + 0.5
    assert abs(chamfer_sq(a, b) - chamfer_brute(a, b)) < 1e-12


def test_chamfer_symmetric():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(300, 3))
    b = rng.normal(size=(400, 3))
    assert chamfer_sq(a, b) == chamfer_sq(b, a)


def test_chamfer_rigid_invariance():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(800, 3))
    b = rng.normal(size=(900, 3))
    t = Transform3.translation(3, -1, 2) @ Transform3.rotation_y(1.1) @ Transform3.rotation_x(0.4)
    before = chamfer_sq(a, b)
    after = chamfer_sq(t.apply_points(a), t.apply_points(b))
    assert abs(before - after) < 1e-9


def test_chamfer_translation_shifts_quadratically():
    pts = sample_surface(gen_shape("torus"), 2000, seed=1)
    d = chamfer_sq(pts, pts + [10.0, 0, 0])
    # far apart, every nearest neighbor is ~10 away: ~ 2 * 10^2
    assert 150.0 < d < 250.0


def test_chamfer_rejects_empty():
    with pytest.raises(GeometryError):
        chamfer_sq(np.zeros((0, 3)), np.zeros((5, 3)))


# ---------------------------------------------------------------------------
# volumetric IoU
# ---------------------------------------------------------------------------


def test_iou_self_is_exactly_one():
    m = gen_shape("bent_tube")
    assert mesh_iou(m, m) == 1.0


def test_iou_disjoint_is_zero():
    a = gen_shape("box")
    b = apply_transform(a, Transform3.translation(5, 0, 0))
    assert mesh_iou(a, b, resolution=64) == 0.0


def test_iou_half_overlap_cubes():
    # unit cubes offset by half: intersection 0.5, union 1.5
    a = gen_shape("box")
    b = apply_transform(a, Transform3.translation(0.5, 0, 0))
    assert abs(mesh_iou(a, b, resolution=128) - 1.0 / 3.0) < 0.02


def test_iou_symmetric():
    a = gen_shape("sphere")
    b = apply_transform(gen_shape("box"), Transform3.translation(0.3, 0.1, 0))
    assert mesh_iou(a, b, resolution=64) == mesh_iou(b, a, resolution=64)


def test_iou_resolution_convergence():
    a = gen_shape("sphere")
    b = apply_transform(gen_shape("torus"), Transform3.translation(0.2, 0, 0))
    lo = mesh_iou(a, b, resolution=128)
    hi = mesh_iou(a, b, resolution=256)
    assert abs(lo - hi) < 0.02


def test_iou_rejects_open_mesh():
    a = gen_shape("sphere")
    broken = TriMesh(a.vertices.copy(), a.faces[:-1].copy(), None)
    with pytest.raises(GeometryError) as exc:
        mesh_iou(broken, a, resolution=64)
    assert "first" in str(exc.value)
    with pytest.raises(GeometryError) as exc:
        mesh_iou(a, broken, resolution=64)
    assert "second" in str(exc.value)


def test_iou_rejects_tiny_resolution():
    m = gen_shape("box")
    with pytest.raises(GeometryError):
        mesh_iou(m, m, resolution=16)


def test_metric_record_validation():
    MetricRecord(0.0, 1.0)
    with pytest.raises(GeometryError):
        MetricRecord(-1e-9, 0.5)
    with pytest.raises(GeometryError):
        MetricRecord(0.1, 1.5)


# ---------------------------------------------------------------------------
# reference composite
# ---------------------------------------------------------------------------


def test_reference_single_instance_matches_direct_sampling():
    mesh = gen_shape("torus")
    pts, grid = reference_composite([(mesh, Transform3.identity())], 5000, 64, seed=3)
    direct = sample_surface(mesh, 5000, seed=3)
    np.testing.assert_array_equal(pts, direct)
    origin, edge = cube_from_aabb(mesh.bounds(), 64, pad_voxels=1)
    np.testing.assert_array_equal(grid.occ, solid_occupancy(mesh, origin, edge, 64))


def test_reference_budget_split_by_area():
    # boxes with side 1 and side 2 have areas 6 and 24: a 1:4 split
    small = gen_shape("box", {"size": 1.0})
    big = gen_shape("box", {"size": 2.0})
    pts, _ = reference_composite(
        [(small, Transform3.identity()), (big, Transform3.translation(8, 0, 0))],
        total_samples=10_000,
        seed=1,
    )
    assert len(pts) == 10_000
    near_small = int((pts[:, 0] < 4.0).sum())
    assert near_small == 2000


def test_reference_disjoint_occupancy_adds():
    a = gen_shape("box")
    b = gen_shape("sphere")
    ta = Transform3.identity()
    tb = Transform3.translation(3, 0, 0)
    _, joint_grid = reference_composite([(a, ta), (b, tb)], 1000, 64)
    moved_b = apply_transform(b, tb)
    joint = a.bounds().union(moved_b.bounds())
    origin, edge = cube_from_aabb(joint, 64, pad_voxels=1)
    occ_a = solid_occupancy(a, origin, edge, 64)
    occ_b = solid_occupancy(moved_b, origin, edge, 64)
    assert not (occ_a & occ_b).any()
    assert joint_grid.occupied_count == occ_a.sum() + occ_b.sum()


def test_reference_overlap_union_volume_analytic():
    cube = gen_shape("box")
    pair = [(cube, Transform3.identity()), (cube, Transform3.translation(0.5, 0, 0))]
    _, grid = reference_composite(pair, 100, resolution=128)
    edge = grid.grid_to_world.uniform_scale()
    volume = grid.occupied_count * edge**3
    # the solid includes every surface-touching voxel, so it brackets the
    # analytic 1.5 from above by at most one voxel layer over the union
    # surface (area 10)
    assert 1.5 - 1e-9 <= volume <= 1.5 + 12.0 * edge


def test_reference_transform_applied_to_samples():
    mesh = gen_shape("sphere")
    t = Transform3.translation(10, 0, 0)
    pts, _ = reference_composite([(mesh, t)], 1000, 64)
    assert np.linalg.norm(pts.mean(axis=0) - [10, 0, 0]) < 0.1


def test_reference_requires_instances():
    with pytest.raises(GeometryError):
        reference_composite([], 100)


# ---------------------------------------------------------------------------
# confidence intervals
# ---------------------------------------------------------------------------


def test_ci_constant_sample():
    mean, half = confidence_interval_95([1.0, 1.0, 1.0, 1.0])
    assert mean == 1.0
    assert half == 0.0


def test_ci_two_point_textbook_value():
    mean, half = confidence_interval_95([0.0, 2.0])
    assert mean == 1.0
    # t(df=1) at 97.5% is 12.7062047361747...; s/sqrt(n) = 1 here
    assert abs(half - 12.706204736174746) < 1e-9


def test_ci_needs_two_values():
    with pytest.raises(GeometryError):
        confidence_interval_95([1.0])


def test_ci_matches_mpmath_oracle():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        values = rng.normal(size=n)
        mean, half = confidence_interval_95(values)
        mpmath.mp.dps = 50
        mv = [mpmath.mpf(float(x)) for x in values]
        omean = mpmath.fsum(mv) / n
        ovar = mpmath.fsum((x - omean) ** 2 for x in mv) / (n - 1)
        oracle = t_quantile_975_oracle(n - 1) * mpmath.sqrt(ovar / n)
        assert abs(mean - float(omean)) < 1e-9
        assert abs(half - float(oracle)) < 1e-9


def test_ci_shrinks_with_sample_size():
    rng = np.random.default_rng(9)
    base = rng.normal(size=200)
    _, wide = confidence_interval_95(base[:10])
    _, narrow = confidence_interval_95(base)
    assert narrow < wide
