"""Multi-scale local roughness.

For a point p and radius r, take every cloud point within the closed ball of
radius r around p, fit the least-squares plane, and compute the signed
orthogonal distances d_j to it. The roughness is the mean absolute deviation
of those distances, ``mean(|d_j - mean(d)|)``. The ``POINT_TO_PLANE`` variant
instead reports ``|distance(p, plane)|``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    MetricVariant,
    PointCloud,
    RoughnessField,
    parse_roughness_field_name,
    roughness_field_name,
)
from .exceptions import EmptyCloud
from .spatial import SpatialIndex, build_index
from .validation import check_min_neighbors, check_radii

DEFAULT_RADII = (0.2, 0.4, 0.6)


@dataclass(frozen=True)
class RoughnessConfig:
    radii: tuple = DEFAULT_RADII
    metric_variant: MetricVariant = MetricVariant.MAD_EQ1
    min_neighbors: int = 4
    include_self: bool = True

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in check_radii(self.radii)))
        object.__setattr__(self, "metric_variant", MetricVariant.parse(self.metric_variant))
        object.__setattr__(self, "min_neighbors", check_min_neighbors(self.min_neighbors))
        object.__setattr__(self, "include_self", bool(self.include_self))

    def to_dict(self):
        return {
            "radii": list(self.radii),
            "metric_variant": self.metric_variant.value,
            "min_neighbors": self.min_neighbors,
            "include_self": self.include_self,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            radii=tuple(d.get("radii", DEFAULT_RADII)),
            metric_variant=d.get("metric_variant", d.get("variant", "mad")),
            min_neighbors=d.get("min_neighbors", 4),
            include_self=d.get("include_self", True),
        )


def roughness_values(index: SpatialIndex, queries, radii, *, self_idx=None,
                     metric_variant=MetricVariant.MAD_EQ1, min_neighbors=4):
    """Roughness of every query point at every radius, shape ``(m, len(radii))``.

    ``self_idx[i]`` names a cloud index to leave out of query ``i``'s
    neighborhood (``-1`` for none). NaN marks undefined values.
    """
    radii = check_radii(radii)
    Q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
    if self_idx is None:
        self_idx = np.full(len(Q), -1, dtype=np.int64)
    out = np.empty((len(Q), len(radii)))
    _kernels.roughness_kernel(
        *index._args(), Q, np.ascontiguousarray(self_idx, dtype=np.int64),
        np.ascontiguousarray(radii), int(check_min_neighbors(min_neighbors)),
        MetricVariant.parse(metric_variant) is MetricVariant.POINT_TO_PLANE, out,
    )
    return out


def _self_indices(n, include_self):
    if include_self:
        return np.full(n, -1, dtype=np.int64)
    return np.arange(n, dtype=np.int64)


def roughness_at(cloud, index, i, r, cfg=None):
    """Roughness of cloud point ``i`` at radius ``r``; NaN when undefined."""
    cfg = cfg or RoughnessConfig(radii=(r,))
    skip = -1 if cfg.include_self else int(i)
    out = roughness_values(
        index, cloud.points[i : i + 1], (r,), self_idx=np.array([skip]),
        metric_variant=cfg.metric_variant, min_neighbors=cfg.min_neighbors,
    )
    return float(out[0, 0])


def compute_roughness_fields(cloud, cfg=None, index=None):
    """One :class:`RoughnessField` per configured radius.

    A single grid index with cell edge equal to the largest radius serves all
    radii.
    """
    cfg = cfg or RoughnessConfig()
    if len(cloud) == 0:
        raise EmptyCloud("cannot compute roughness of an empty cloud")
    if index is None:
        index = build_index(cloud, cfg.radii[-1])
    values = roughness_values(
        index, cloud.points, cfg.radii,
        self_idx=_self_indices(len(cloud), cfg.include_self),
        metric_variant=cfg.metric_variant, min_neighbors=cfg.min_neighbors,
    )
    return [
        RoughnessField(r, values[:, k], cfg.metric_variant)
        for k, r in enumerate(cfg.radii)
    ]


VARIANT_COMMENT = "roughness_variant"


def attach_fields(cloud: PointCloud, fields):
    """Copy of ``cloud`` carrying each field as a scalar field named by radius."""
    scalar = dict(cloud.scalar_fields)
    variants = set()
    for f in fields:
        scalar[roughness_field_name(f.radius)] = f.values
        variants.add(f.metric_variant.value)
    comments = [c for c in cloud.comments if not c.startswith(VARIANT_COMMENT)]
    comments += [f"{VARIANT_COMMENT} {v}" for v in sorted(variants)]
    return cloud.replace(scalar_fields=scalar, comments=comments)


def fields_from_cloud(cloud: PointCloud, metric_variant=None):
    """Recover roughness fields from a cloud's scalar fields, ordered by radius."""
    if metric_variant is None:
        metric_variant = MetricVariant.MAD_EQ1
        for c in cloud.comments:
            if c.startswith(VARIANT_COMMENT):
                metric_variant = MetricVariant.parse(c.split()[-1])
    found = []
    for key, values in cloud.scalar_fields.items():
        r = parse_roughness_field_name(key)
        if r is not None:
            found.append(RoughnessField(r, values, metric_variant))
    return sorted(found, key=lambda f: f.radius)
