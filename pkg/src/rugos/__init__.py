"""Multi-scale local roughness for reconstructed point clouds."""

__version__ = "0.1.0"

import numba as _numba

# workqueue is the fallback; omp is preferred because it tolerates calls from
# several Python threads
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .core import (  # noqa: E402
    AABB,
    MetricVariant,
    PointCloud,
    RigidTransform,
    RoughnessField,
    apply_transform,
    bounding_box,
    roughness_field_name,
)
from .estimators import (  # noqa: E402
    DominantPlaneAligner,
    NormalEstimator,
    RoughnessEstimator,
    ScaleNormalizer,
)
from .geometry import (  # noqa: E402
    Plane,
    PolygonRegion,
    align_to_dominant_plane,
    crop_box,
    crop_polygon,
    estimate_normals,
    fit_plane,
    normalize_scale,
    signed_point_plane_distance,
)
from .roughness import (  # noqa: E402
    RoughnessConfig,
    attach_fields,
    compute_roughness_fields,
    fields_from_cloud,
    roughness_at,
)
from .spatial import (  # noqa: E402
    SpatialIndex,
    brute_force_neighbors,
    build_index,
    radius_neighbors,
)

__all__ = [
    "__version__",
    "AABB",
    "MetricVariant",
    "PointCloud",
    "RigidTransform",
    "RoughnessField",
    "apply_transform",
    "bounding_box",
    "roughness_field_name",
    "DominantPlaneAligner",
    "NormalEstimator",
    "RoughnessEstimator",
    "ScaleNormalizer",
    "Plane",
    "PolygonRegion",
    "align_to_dominant_plane",
    "crop_box",
    "crop_polygon",
    "estimate_normals",
    "fit_plane",
    "normalize_scale",
    "signed_point_plane_distance",
    "RoughnessConfig",
    "attach_fields",
    "compute_roughness_fields",
    "fields_from_cloud",
    "roughness_at",
    "SpatialIndex",
    "brute_force_neighbors",
    "build_index",
    "radius_neighbors",
]
