"""Shared data model: point clouds, boxes, rigid transforms, roughness fields."""

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyCloud, InvalidCloud

ORTHONORMAL_TOL = 1e-12


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Positions plus optional per-point colors, normals and scalar fields.

    Arrays are copied to read-only storage on construction, so a cloud can be
    shared freely between workers. Undefined scalar values and undefined
    normals are stored as NaN.
    """

    points: np.ndarray
    colors: np.ndarray | None = None
    normals: np.ndarray | None = None
    scalar_fields: dict = field(default_factory=dict)
    name: str = "cloud"
    comments: tuple = ()

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidCloud(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidCloud("point positions must be finite")
        n = len(pts)
        object.__setattr__(self, "points", _frozen(pts))

        if self.colors is not None:
            col = np.asarray(self.colors)
            if col.shape != (n, 3):
                raise InvalidCloud(f"colors must have shape ({n}, 3), got {col.shape}")
            if col.dtype != np.uint8:
                if np.any((col < 0) | (col > 255)):
                    raise InvalidCloud("colors must be 8-bit channel values")
                col = col.astype(np.uint8)
            object.__setattr__(self, "colors", _frozen(col.copy()))

        if self.normals is not None:
            nrm = np.array(self.normals, dtype=np.float64, copy=True)
            if nrm.shape != (n, 3):
                raise InvalidCloud(f"normals must have shape ({n}, 3), got {nrm.shape}")
            object.__setattr__(self, "normals", _frozen(nrm))

        fields = {}
        for key, values in dict(self.scalar_fields).items():
            v = np.array(values, dtype=np.float64, copy=True).reshape(-1)
            if len(v) != n:
                raise InvalidCloud(
                    f"scalar field {key!r} has {len(v)} values for {n} points"
                )
            fields[str(key)] = _frozen(v)
        object.__setattr__(self, "scalar_fields", fields)
        object.__setattr__(self, "comments", tuple(str(c) for c in self.comments))

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        extras = [k for k in ("colors", "normals") if getattr(self, k) is not None]
        extras += list(self.scalar_fields)
        return f"PointCloud(name={self.name!r}, n={len(self)}, attributes={extras})"

    def replace(self, **changes):
        kw = dict(
            points=self.points,
            colors=self.colors,
            normals=self.normals,
            scalar_fields=self.scalar_fields,
            name=self.name,
            comments=self.comments,
        )
        kw.update(changes)
        return PointCloud(**kw)

    def with_scalar_field(self, key, values):
        fields = dict(self.scalar_fields)
        fields[key] = values
        return self.replace(scalar_fields=fields)

    def subset(self, mask):
        """Keep the points selected by a boolean mask or index array, in order."""
        sel = np.asarray(mask)
        if sel.dtype == bool:
            sel = np.flatnonzero(sel)
        return self.replace(
            points=self.points[sel],
            colors=None if self.colors is None else self.colors[sel],
            normals=None if self.normals is None else self.normals[sel],
            scalar_fields={k: v[sel] for k, v in self.scalar_fields.items()},
        )


@dataclass(frozen=True)
class AABB:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.array(self.min, dtype=np.float64).reshape(3))
        hi = _frozen(np.array(self.max, dtype=np.float64).reshape(3))
        if np.any(lo > hi):
            raise ValueError("AABB min must be <= max componentwise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def diagonal(self):
        return float(np.linalg.norm(self.max - self.min))

    def contains(self, points):
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.all((p >= self.min) & (p <= self.max), axis=1)


@dataclass(frozen=True)
class RigidTransform:
    """Proper rotation followed by a translation: ``p -> R @ p + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("transform entries must be finite")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls):
        return cls()

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self):
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other):
        """Transform applying ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def as_matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def to_dict(self):
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["rotation"], d["translation"])


class MetricVariant(enum.Enum):
    """Which per-point roughness quantity a field holds."""

    MAD_EQ1 = "mad"
    POINT_TO_PLANE = "p2p"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        s = str(value).strip()
        for member in cls:
            if s.lower() == member.value or s.upper() == member.name:
                return member
        raise ValueError(f"unknown metric variant {value!r}")


_FIELD_RE = re.compile(r"^roughness_r(\d+)(?:_(\d+))?$")


def roughness_field_name(radius):
    """PLY-safe scalar-field name for a radius: 0.2 -> ``roughness_r0_2``."""
    text = np.format_float_positional(float(radius), trim="-")
    return "roughness_r" + text.replace(".", "_")


def parse_roughness_field_name(name):
    """Inverse of :func:`roughness_field_name`; ``None`` for other names."""
    m = _FIELD_RE.match(name)
    if m is None:
        return None
    whole, frac = m.groups()
    return float(f"{whole}.{frac}" if frac else whole)


@dataclass(frozen=True, eq=False)
class RoughnessField:
    """Per-point roughness at one radius; NaN marks undefined points."""

    radius: float
    values: np.ndarray
    metric_variant: MetricVariant = MetricVariant.MAD_EQ1

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if np.any(v[~np.isnan(v)] < 0):
            raise ValueError("roughness values must be non-negative")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(
            self, "metric_variant", MetricVariant.parse(self.metric_variant)
        )

    @property
    def defined(self):
        return ~np.isnan(self.values)

    @property
    def defined_count(self):
        return int(np.count_nonzero(self.defined))

    @property
    def name(self):
        return roughness_field_name(self.radius)

    def __len__(self):
        return len(self.values)


def apply_transform(cloud, t):
    """Rigidly move a cloud; normals are rotated, everything else is carried."""
    normals = None if cloud.normals is None else cloud.normals @ t.rotation.T
    return cloud.replace(points=t.apply(cloud.points), normals=normals)


def bounding_box(cloud):
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
    if len(pts) == 0:
        raise EmptyCloud("cannot bound an empty cloud")
    return AABB(pts.min(axis=0), pts.max(axis=0))
