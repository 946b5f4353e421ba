"""Fixed-radius neighbor search on a uniform grid.

Points are sorted by linearized cell key (stable, so points keep ascending
index order inside a cell) and stored contiguously; a query binary-searches
the handful of cell keys overlapping its ball.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import PointCloud
from .exceptions import EmptyCloud, NonPositiveCellEdge

_MAX_KEY = 2**62


def _as_points(cloud):
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.ascontiguousarray(cloud, dtype=np.float64).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """Immutable uniform-grid index over a point set.

    Attributes
    ----------
    points : (n, 3) array
        The indexed positions, in original order.
    cell_edge : float
        Edge length of the cubic grid cells.
    sorted_points : (n, 3) array
        Positions reordered by cell.
    order : (n,) int64 array
        ``sorted_points[k] == points[order[k]]``.
    keys, starts, ends : arrays
        Occupied cell keys (ascending) and their slices into ``sorted_points``.
    """

    points: np.ndarray
    cell_edge: float
    origin: np.ndarray
    dims: np.ndarray
    sorted_points: np.ndarray
    order: np.ndarray
    keys: np.ndarray
    starts: np.ndarray
    ends: np.ndarray

    @property
    def n_points(self):
        return len(self.points)

    @property
    def n_cells(self):
        return len(self.keys)

    def bucket_sizes(self):
        return self.ends - self.starts

    def cell_of(self, p):
        c = np.floor((np.asarray(p, dtype=np.float64) - self.origin) / self.cell_edge)
        return tuple(int(v) for v in c)

    def cells_touched(self, center, r):
        """Number of grid cells a ball query of radius ``r`` visits."""
        return int(
            _kernels.count_cells_touched(
                self.keys, self.dims, self.origin, self.cell_edge,
                np.asarray(center, dtype=np.float64), float(r),
            )
        )

    def _args(self):
        return (
            self.sorted_points, self.order, self.keys, self.starts, self.ends,
            self.dims, self.origin, self.cell_edge,
        )


def build_index(cloud, cell_edge):
    """Grid index with cubic cells of edge ``cell_edge``.

    Raises
    ------
    EmptyCloud
        If there are no points.
    NonPositiveCellEdge
        If ``cell_edge`` is not a positive finite number.
    """
    pts = _as_points(cloud)
    if len(pts) == 0:
        raise EmptyCloud("cannot index an empty cloud")
    edge = float(cell_edge)
    if not (edge > 0 and np.isfinite(edge)):
        raise NonPositiveCellEdge(f"cell_edge must be > 0, got {cell_edge!r}")

    origin = pts.min(axis=0)
    cells = np.floor((pts - origin) / edge)
    dims_f = cells.max(axis=0) + 1
    if np.prod(dims_f) >= _MAX_KEY:
        raise ValueError(
            f"grid of {dims_f.astype(int).tolist()} cells is too fine for edge {edge}"
        )
    cells = cells.astype(np.int64)
    dims = dims_f.astype(np.int64)
    keys = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    order = np.argsort(keys, kind="stable").astype(np.int64)
    sorted_keys = keys[order]
    ukeys, starts = np.unique(sorted_keys, return_index=True)
    starts = starts.astype(np.int64)
    ends = np.append(starts[1:], len(pts)).astype(np.int64)
    frozen = []
    for a in (pts, origin, dims, np.ascontiguousarray(pts[order]), order, ukeys, starts, ends):
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        frozen.append(a)
    p, o, d, sp, od, k, s, e = frozen
    return SpatialIndex(p, edge, o, d, sp, od, k, s, e)


def radius_neighbors(index, center, r):
    """Indices of points within the closed ball ``|p - center| <= r``, ascending.

    Radii larger than the cell edge are served by widening the cell window,
    which returns the same set a rebuilt index would.
    """
    r = float(r)
    if not r > 0:
        raise ValueError("r must be > 0")
    q = np.asarray(center, dtype=np.float64).reshape(3)
    return _kernels.query_ball(*index._args(), q, r)


def brute_force_neighbors(cloud, center, r):
    """Linear-scan reference for :func:`radius_neighbors`."""
    r = float(r)
    if not r > 0:
        raise ValueError("r must be > 0")
    pts = _as_points(cloud)
    if len(pts) == 0:
        return np.empty(0, dtype=np.int64)
    q = np.asarray(center, dtype=np.float64).reshape(3)
    d = pts - q
    d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
    return np.flatnonzero(d2 <= r * r).astype(np.int64)
