"""Plane fitting, normals, alignment, scale normalization and cropping."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .core import RigidTransform, apply_transform, bounding_box
from .exceptions import (
    AmbiguousOrientation,
    DegenerateNeighborhood,
    EmptyCloud,
    InvalidPolygon,
    TooFewPoints,
    ZeroExtent,
)
from .spatial import SpatialIndex, build_index

DOMINANT_PLANE_RATIO = 1.5


@dataclass(frozen=True, eq=False)
class Plane:
    centroid: np.ndarray
    normal: np.ndarray
    eigenvalues: np.ndarray

    def signed_distance(self, points):
        return (np.asarray(points, dtype=np.float64) - self.centroid) @ self.normal


def _covariance(points):
    c = points.mean(axis=0)
    X = points - c
    return c, (X.T @ X) / len(points)


def _eig(C):
    return _kernels.jacobi_eig3(C[0, 0], C[0, 1], C[0, 2], C[1, 1], C[1, 2], C[2, 2])


def fit_plane(points):
    """Least-squares plane through a set of 3D points.

    The normal is the covariance eigenvector of the smallest eigenvalue,
    oriented so that z >= 0 (then y >= 0, then x >= 0 on exact ties).

    Raises
    ------
    TooFewPoints
        Fewer than three points.
    DegenerateNeighborhood
        The points are (numerically) collinear or coincident.
    """
    P = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(P) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(P)}")
    centroid, C = _covariance(P)
    w, V = _eig(C)
    w = np.maximum(w, 0.0)
    if not (w[2] > 0 and w[1] >= _kernels.DEGENERATE_RTOL * w[2]):
        raise DegenerateNeighborhood("points are collinear or coincident")
    n = np.array(_kernels.orient(V[0, 0], V[1, 0], V[2, 0]))
    return Plane(centroid, n / np.linalg.norm(n), w)


def signed_point_plane_distance(p, plane):
    return float((np.asarray(p, dtype=np.float64) - plane.centroid) @ plane.normal)


def estimate_normals(cloud, index=None, r=None, *, min_neighbors=3):
    """Per-point normals from radius-``r`` neighborhoods.

    Points whose neighborhood is too small or degenerate get a NaN normal.
    Returns ``(cloud_with_normals, n_undefined)``.
    """
    if r is None or not float(r) > 0:
        raise ValueError("r must be > 0")
    r = float(r)
    if len(cloud) == 0:
        raise EmptyCloud("cannot estimate normals of an empty cloud")
    if index is None:
        index = build_index(cloud, r)
    normals = normals_at(index, cloud.points, r, self_idx=None, min_neighbors=min_neighbors)
    n_undefined = int(np.count_nonzero(np.isnan(normals[:, 0])))
    return cloud.replace(normals=normals), n_undefined


def normals_at(index: SpatialIndex, queries, r, *, self_idx=None, min_neighbors=3):
    Q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
    if self_idx is None:
        self_idx = np.full(len(Q), -1, dtype=np.int64)
    out = np.empty((len(Q), 3))
    _kernels.normals_kernel(
        *index._args(), Q, np.ascontiguousarray(self_idx, dtype=np.int64),
        float(r), int(min_neighbors), out,
    )
    return out


def dominant_plane_transform(points, min_ratio=DOMINANT_PLANE_RATIO):
    """Rigid transform taking the best-fit plane to z = 0 and the centroid to 0.

    The largest-variance in-plane direction is mapped to +x.
    """
    P = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(P) < 3:
        raise AmbiguousOrientation("need at least 3 points to orient a cloud")
    centroid, C = _covariance(P)
    w, V = _eig(C)
    w = np.maximum(w, 0.0)
    if not w[1] >= min_ratio * w[0] or w[1] == 0:
        raise AmbiguousOrientation(
            f"no dominant plane: eigenvalues {w[0]:.3g}, {w[1]:.3g}, {w[2]:.3g}"
        )
    n = np.array(_kernels.orient(V[0, 0], V[1, 0], V[2, 0]))
    n /= np.linalg.norm(n)
    ex = V[:, 2] - (V[:, 2] @ n) * n
    ex /= np.linalg.norm(ex)
    if ex[np.argmax(np.abs(ex))] < 0:
        ex = -ex
    ey = np.cross(n, ex)
    R = np.vstack([ex, ey, n])
    return RigidTransform(R, -R @ centroid)


def align_to_dominant_plane(cloud, min_ratio=DOMINANT_PLANE_RATIO):
    """Independently align a cloud so its dominant plane becomes z = 0.

    Returns ``(aligned_cloud, transform)``.

    Raises
    ------
    AmbiguousOrientation
        When the smallest covariance eigenvalue is not at least ``min_ratio``
        times smaller than the middle one.
    """
    t = dominant_plane_transform(cloud.points, min_ratio)
    return apply_transform(cloud, t), t


def normalize_scale(cloud, factor=None):
    """Scale positions about the origin.

    With ``factor=None`` the bounding-box diagonal is brought to 1; otherwise
    positions are multiplied by the explicit ``factor``. Returns
    ``(scaled_cloud, factor_applied)``.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot normalize an empty cloud")
    if factor is None:
        diag = bounding_box(cloud).diagonal
        if diag == 0:
            raise ZeroExtent("all points coincide")
        factor = 1.0 / diag
    else:
        factor = float(factor)
        if not (factor > 0 and np.isfinite(factor)):
            raise ValueError(f"scale factor must be > 0, got {factor}")
    return cloud.replace(points=cloud.points * factor), factor


def crop_box(cloud, box):
    """Keep points inside a closed axis-aligned box, preserving order."""
    return cloud.subset(box.contains(cloud.points))


# -- polygons ---------------------------------------------------------------


def _orientation(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p):
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _segments_intersect(a, b, c, d):
    o1 = _orientation(a, b, c)
    o2 = _orientation(a, b, d)
    o3 = _orientation(c, d, a)
    o4 = _orientation(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and o1 != 0 and o2 != 0 and ((o3 > 0) != (o4 > 0)) and o3 != 0 and o4 != 0:
        return True
    return (
        (o1 == 0 and _on_segment(a, b, c))
        or (o2 == 0 and _on_segment(a, b, d))
        or (o3 == 0 and _on_segment(c, d, a))
        or (o4 == 0 and _on_segment(c, d, b))
    )


@dataclass(frozen=True, eq=False)
class PolygonRegion:
    """Simple polygon in the XY plane, used for segmentation."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=np.float64)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise InvalidPolygon("a polygon needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(V)):
            raise InvalidPolygon("polygon vertices must be finite")
        if len(V) > 3 and np.array_equal(V[0], V[-1]):
            V = V[:-1]
        m = len(V)
        edges = [(V[i], V[(i + 1) % m]) for i in range(m)]
        for a, b in edges:
            if np.array_equal(a, b):
                raise InvalidPolygon("polygon has a zero-length edge")
        for i in range(m):
            for j in range(i + 1, m):
                adjacent = j == i + 1 or (i == 0 and j == m - 1)
                a, b = edges[i]
                c, d = edges[j]
                if adjacent:
                    # sharing one vertex is fine; folding back along each other is not
                    shared = b if j == i + 1 else a
                    other_i = a if j == i + 1 else b
                    other_j = d if j == i + 1 else c
                    if (
                        _orientation(other_i, shared, other_j) == 0
                        and np.dot(other_i - shared, other_j - shared) > 0
                    ):
                        raise InvalidPolygon("polygon folds back on itself")
                elif _segments_intersect(a, b, c, d):
                    raise InvalidPolygon(f"polygon edges {i} and {j} intersect")
        if abs(0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])) == 0:
            raise InvalidPolygon("polygon has zero area")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    def contains(self, xy, tol=1e-12):
        """Even-odd inside test on 2D points; points on an edge count as inside."""
        P = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        x, y = P[:, 0], P[:, 1]
        V = self.vertices
        inside = np.zeros(len(P), dtype=bool)
        boundary = np.zeros(len(P), dtype=bool)
        for i in range(len(V)):
            (x1, y1), (x2, y2) = V[i], V[(i + 1) % len(V)]
            ex, ey = x2 - x1, y2 - y1
            cross = ex * (y - y1) - ey * (x - x1)
            length2 = ex * ex + ey * ey
            within = (
                (x >= min(x1, x2)) & (x <= max(x1, x2))
                & (y >= min(y1, y2)) & (y <= max(y1, y2))
            )
            boundary |= within & (np.abs(cross) <= tol * length2)
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = x1 + (y - y1) * ex / ey
            inside ^= crosses & (x < x_at)
        return inside | boundary


def load_polygon(path):
    """Read a polygon file: one ``x y`` vertex per line, ``#`` comments allowed."""
    verts = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InvalidPolygon(f"line {lineno}: expected 'x y', got {line!r}")
        try:
            verts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise InvalidPolygon(f"line {lineno}: non-numeric vertex {line!r}") from None
    return PolygonRegion(np.array(verts).reshape(-1, 2))


def crop_polygon(cloud, region):
    """Keep points whose XY projection lies in the polygon (boundary included)."""
    if not isinstance(region, PolygonRegion):
        region = PolygonRegion(region)
    return cloud.subset(region.contains(cloud.points[:, :2]))
