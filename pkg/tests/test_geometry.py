import numpy as np
import pytest

from conftest import random_rotation
from rugos.core import AABB, PointCloud, RigidTransform, apply_transform, bounding_box
from rugos.exceptions import (
    AmbiguousOrientation,
    DegenerateNeighborhood,
    InvalidPolygon,
    TooFewPoints,
    ZeroExtent,
)
from rugos.geometry import (
    PolygonRegion,
    align_to_dominant_plane,
    crop_box,
    crop_polygon,
    estimate_normals,
    fit_plane,
    load_polygon,
    normalize_scale,
    signed_point_plane_distance,
)


def angle(u, v):
    # unsigned angle between lines; atan2 stays accurate near zero
    return np.arctan2(np.linalg.norm(np.cross(u, v)), abs(np.dot(u, v)))


def test_fit_plane_triangle():
    p = fit_plane([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    np.testing.assert_allclose(p.normal, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(p.centroid, [1 / 3, 1 / 3, 0], atol=1e-15)


def test_fit_plane_collinear():
    with pytest.raises(DegenerateNeighborhood):
        fit_plane([[0, 0, 0], [1, 0, 0], [2, 0, 0]])


def test_fit_plane_too_few():
    with pytest.raises(TooFewPoints):
        fit_plane([[0, 0, 0], [1, 0, 0]])


def test_fit_plane_tilted_beats_perturbed_candidates(rng):
    xy = rng.uniform(-1, 1, (200, 2))
    z = 0.3 * xy[:, 0] + 0.4 * xy[:, 1] + rng.normal(0, 1e-4, 200)
    P = np.column_stack([xy, z])
    plane = fit_plane(P)
    expected = np.array([-0.3, -0.4, 1.0]) / np.linalg.norm([-0.3, -0.4, 1.0])
    assert angle(plane.normal, expected) < 1e-3

    def rss(c, n):
        return np.sum(((P - c) @ n) ** 2)

    best = rss(plane.centroid, plane.normal)
    for _ in range(10_000):
        n = plane.normal + rng.normal(0, 1e-3, 3)
        n /= np.linalg.norm(n)
        c = plane.centroid + rng.normal(0, 1e-4, 3)
        assert best <= rss(c, n) * (1 + 1e-12)


def test_normal_orientation_is_up(rng):
    for _ in range(20):
        P = rng.normal(size=(30, 3)) * [1, 1, 0.01]
        R = random_rotation(rng)
        n = fit_plane(P @ R.T).normal
        assert n[2] > 0 or (n[2] == 0 and n[1] >= 0)


def test_signed_distance():
    plane = fit_plane([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    assert signed_point_plane_distance([0.3, 0.2, 0], plane) == 0
    assert signed_point_plane_distance([0, 0, 2], plane) == pytest.approx(2)
    assert signed_point_plane_distance([0, 0, -2], plane) == pytest.approx(-2)


def test_normals_on_plane(rng):
    P = np.column_stack([rng.uniform(0, 1, (2000, 2)), np.zeros(2000)])
    c, undefined = estimate_normals(PointCloud(P), r=0.1)
    assert undefined == 0
    ang = [angle(n, [0, 0, 1]) for n in c.normals]
    assert max(ang) < 1e-6


def test_isolated_point_normal_undefined():
    P = np.vstack([np.column_stack([np.random.default_rng(0).uniform(0, 1, (100, 2)),
                                    np.zeros(100)]), [[10, 10, 10]]])
    c, undefined = estimate_normals(PointCloud(P), r=0.2)
    assert undefined >= 1
    assert np.all(np.isnan(c.normals[-1]))


def test_sphere_pole_normals(rng):
    # uniform samples of a polar cap; ~ 50+ points per r-ball
    n = 20_000
    z = rng.uniform(np.cos(0.5), 1.0, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    s = np.sqrt(1 - z * z)
    P = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    r = 0.05
    c, _ = estimate_normals(PointCloud(P), r=r)
    inner = z > np.cos(0.5 - r)
    counts = [len(np.flatnonzero(np.sum((P - p) ** 2, axis=1) <= r * r)) for p in P[inner][:200]]
    assert min(counts) >= 50
    ang = np.degrees([angle(nv, p) for nv, p in zip(c.normals[inner], P[inner])])
    assert ang.max() < 2.0


def test_align_already_flat(rng):
    P = np.column_stack([rng.uniform(-1, 1, (500, 2)) * [2, 1], np.zeros(500)])
    P -= P.mean(axis=0)
    out, t = align_to_dominant_plane(PointCloud(P))
    R = t.rotation
    np.testing.assert_allclose(R[2], [0, 0, 1], atol=1e-12)
    np.testing.assert_allclose(R[:2, 2], 0, atol=1e-12)
    np.testing.assert_allclose(t.translation, 0, atol=1e-12)
    np.testing.assert_allclose(fit_plane(out.points).normal, [0, 0, 1], atol=1e-12)


def test_align_tilted_plane(rng):
    x, y = rng.uniform(-1, 1, (2, 1000))
    P = np.column_stack([x, y, x])
    out, t = align_to_dominant_plane(PointCloud(P))
    np.testing.assert_allclose(fit_plane(out.points).normal, [0, 0, 1], atol=1e-9)
    np.testing.assert_allclose(out.points.mean(axis=0), 0, atol=1e-12)
    # the transform itself maps the original fitted normal to +z
    np.testing.assert_allclose(t.rotation @ fit_plane(P).normal, [0, 0, 1], atol=1e-9)


def test_align_sphere_ambiguous(rng):
    P = rng.normal(size=(5000, 3))
    P /= np.linalg.norm(P, axis=1)[:, None]
    with pytest.raises(AmbiguousOrientation):
        align_to_dominant_plane(PointCloud(P))


def test_normalize_cube():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]) * (2 / np.sqrt(3))
    out, f = normalize_scale(PointCloud(corners))
    assert f == pytest.approx(0.5)
    assert bounding_box(out).diagonal == pytest.approx(1.0)


def test_normalize_explicit():
    out, f = normalize_scale(PointCloud([[1, 1, 1]]), 3)
    assert f == 3
    np.testing.assert_array_equal(out.points, [[3, 3, 3]])


def test_normalize_zero_extent():
    with pytest.raises(ZeroExtent):
        normalize_scale(PointCloud([[1, 1, 1]] * 4))
    with pytest.raises(ValueError):
        normalize_scale(PointCloud([[1, 1, 1]]), -1)


def test_crop_box():
    c = PointCloud([[0.5, 0.5, 0.5], [2, 2, 2]])
    assert len(crop_box(c, AABB([0, 0, 0], [1, 1, 1]))) == 1


SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def test_polygon_inside_any_z():
    c = PointCloud([[0.5, 0.5, -100], [0.5, 0.5, 100], [1.5, 0.5, 0]])
    assert len(crop_polygon(c, PolygonRegion(SQUARE))) == 2


def test_polygon_boundary_included():
    poly = PolygonRegion(SQUARE)
    pts = [(1, 0.5), (0.5, 0), (0, 0), (1, 1), (0.3, 1)]
    assert poly.contains(pts).all()
    assert not poly.contains([(1 + 1e-6, 0.5)]).any()


def test_polygon_concave():
    # L-shape
    poly = PolygonRegion([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    assert poly.contains([(0.5, 1.5), (1.5, 0.5)]).all()
    assert not poly.contains([(1.5, 1.5)]).any()


@pytest.mark.parametrize(
    "verts",
    [
        [(0, 0), (1, 1)],
        [(0, 0), (1, 1), (1, 0), (0, 1)],  # bow tie
        [(0, 0), (1, 0), (2, 0)],  # zero area
        [(0, 0), (0, 0), (1, 1)],
    ],
)
def test_polygon_invalid(verts):
    with pytest.raises(InvalidPolygon):
        PolygonRegion(verts)


def test_load_polygon(tmp_path):
    p = tmp_path / "poly.txt"
    p.write_text("# square\n0 0\n1 0\n1 1\n0 1\n")
    assert len(load_polygon(p).vertices) == 4
    p.write_text("0 0\n1 1\n")
    with pytest.raises(InvalidPolygon):
        load_polygon(p)


def test_rigid_motion_of_normals(rng):
    P = np.column_stack([rng.uniform(0, 1, (1500, 2)), 0.05 * np.sin(rng.uniform(0, 1, 1500))])
    R = random_rotation(rng)
    t = RigidTransform(R, [1, 2, 3])
    a, _ = estimate_normals(PointCloud(P), r=0.1)
    b, _ = estimate_normals(apply_transform(PointCloud(P), t), r=0.1)
    ang = [angle(R @ u, v) for u, v in zip(a.normals, b.normals)]
    assert max(ang) < 1e-9


def test_fit_plane_invariants_on_random_neighborhoods(rng):
    for _ in range(50):
        P = rng.normal(size=(int(rng.integers(3, 60)), 3)) * rng.uniform(0.01, 2, 3)
        plane = fit_plane(P)
        assert abs(np.linalg.norm(plane.normal) - 1) <= 1e-12
        w = plane.eigenvalues
        assert w[0] <= w[1] <= w[2] and w[0] >= -1e-12
        X = P - P.mean(axis=0)
        C = X.T @ X / len(P)
        resid = np.linalg.norm(C @ plane.normal - w[0] * plane.normal)
        assert resid <= 1e-9 * np.linalg.norm(C)


def test_fit_plane_beats_planes_through_centroid(rng):
    for _ in range(5):
        P = rng.normal(size=(40, 3)) * [1, 0.7, 0.1]
        plane = fit_plane(P)
        best = np.sum(((P - plane.centroid) @ plane.normal) ** 2)
        cand = rng.normal(size=(1000, 3))
        cand /= np.linalg.norm(cand, axis=1)[:, None]
        rss = np.sum(((P - plane.centroid) @ cand.T) ** 2, axis=0)
        assert np.all(best <= rss * (1 + 1e-12))


def test_fit_plane_rotation_equivariance(rng):
    for _ in range(20):
        P = rng.normal(size=(30, 3)) * [1, 0.5, 0.05]
        R = random_rotation(rng)
        assert angle(R @ fit_plane(P).normal, fit_plane(P @ R.T).normal) <= 1e-9


def test_crop_idempotent(rng):
    c = PointCloud(rng.uniform(-1, 2, (500, 3)))
    poly = PolygonRegion([(0, 0), (1.5, 0.2), (1, 1.3), (0.2, 1)])
    once = crop_polygon(c, poly)
    np.testing.assert_array_equal(crop_polygon(once, poly).points, once.points)
    box = AABB([0, 0, 0], [1, 1, 1])
    once = crop_box(c, box)
    np.testing.assert_array_equal(crop_box(once, box).points, once.points)


def test_normalize_inverse(rng):
    P = rng.normal(size=(100, 3)) * 7
    out, f = normalize_scale(PointCloud(P))
    back, _ = normalize_scale(out, 1 / f)
    np.testing.assert_allclose(back.points, P, rtol=1e-12)
