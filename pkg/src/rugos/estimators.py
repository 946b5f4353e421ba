"""scikit-learn compatible estimators.

Each estimator takes an ``(n, 3)`` array of positions, so it composes with
``Pipeline`` and the rest of the scikit-learn tooling::

    pipe = make_pipeline(DominantPlaneAligner(), ScaleNormalizer(),
                         RoughnessEstimator(radii=(0.2, 0.4, 0.6)))
    R = pipe.fit_transform(points)     # (n, 3) roughness, NaN = undefined
"""

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import MetricVariant, PointCloud, roughness_field_name
from .geometry import (
    DOMINANT_PLANE_RATIO,
    dominant_plane_transform,
    normalize_scale,
    normals_at,
)
from .parallel import worker_count
from .roughness import DEFAULT_RADII, roughness_values
from .spatial import build_index
from .validation import check_min_neighbors, check_points, check_radii


class RoughnessEstimator(TransformerMixin, BaseEstimator):
    """Local roughness at several neighborhood radii.

    ``fit`` indexes a reference cloud. ``transform(X)`` evaluates roughness
    at each row of ``X`` using the reference points within each radius.
    ``fit_transform(X)`` evaluates the reference cloud on itself and honours
    ``include_self``.

    Parameters
    ----------
    radii : sequence of float
        Strictly increasing neighborhood radii in model units.
    metric : {"mad", "p2p"}
        ``"mad"`` is the mean absolute deviation of signed point-to-plane
        distances over the neighborhood; ``"p2p"`` is the query point's
        distance to the neighborhood plane.
    min_neighbors : int
        Neighborhoods smaller than this give NaN.
    include_self : bool
        Whether a cloud point belongs to its own neighborhood.
    n_jobs : int or None
        Worker threads; ``None`` keeps the current setting.
    """

    def __init__(self, radii=DEFAULT_RADII, metric="mad", min_neighbors=4,
                 include_self=True, n_jobs=None):
        self.radii = radii
        self.metric = metric
        self.min_neighbors = min_neighbors
        self.include_self = include_self
        self.n_jobs = n_jobs

    def _validate_params(self):
        self.radii_ = check_radii(self.radii)
        self.metric_ = MetricVariant.parse(self.metric)
        self.min_neighbors_ = check_min_neighbors(self.min_neighbors)

    def fit(self, X, y=None):
        self._validate_params()
        X = check_points(X)
        self.n_features_in_ = 3
        self.index_ = build_index(X, self.radii_[-1])
        return self

    def _compute(self, Q, self_idx):
        with worker_count(self.n_jobs):
            return roughness_values(
                self.index_, Q, self.radii_, self_idx=self_idx,
                metric_variant=self.metric_, min_neighbors=self.min_neighbors_,
            )

    def transform(self, X):
        check_is_fitted(self, "index_")
        Q = check_points(X, allow_empty=True)
        return self._compute(Q, None)

    def fit_transform(self, X, y=None):
        self.fit(X)
        n = self.index_.n_points
        skip = None if self.include_self else np.arange(n, dtype=np.int64)
        return self._compute(self.index_.points, skip)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "index_")
        return np.array([roughness_field_name(r) for r in self.radii_], dtype=object)


class NormalEstimator(TransformerMixin, BaseEstimator):
    """Per-point plane normals from radius neighborhoods (NaN where undefined)."""

    def __init__(self, radius=0.2, min_neighbors=3, n_jobs=None):
        self.radius = radius
        self.min_neighbors = min_neighbors
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if not float(self.radius) > 0:
            raise ValueError("radius must be > 0")
        X = check_points(X)
        self.n_features_in_ = 3
        self.index_ = build_index(X, float(self.radius))
        return self

    def transform(self, X):
        check_is_fitted(self, "index_")
        Q = check_points(X, allow_empty=True)
        with worker_count(self.n_jobs):
            return normals_at(self.index_, Q, float(self.radius),
                              min_neighbors=check_min_neighbors(self.min_neighbors))

    def get_feature_names_out(self, input_features=None):
        return np.array(["nx", "ny", "nz"], dtype=object)


class DominantPlaneAligner(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Rigidly move points so the best-fit plane of the fitted cloud is z = 0.

    Fitted attributes: ``transform_`` (a :class:`~rugos.core.RigidTransform`),
    ``rotation_`` and ``translation_``.
    """

    def __init__(self, min_eigen_ratio=DOMINANT_PLANE_RATIO):
        self.min_eigen_ratio = min_eigen_ratio

    def fit(self, X, y=None):
        X = check_points(X)
        self.n_features_in_ = 3
        self.transform_ = dominant_plane_transform(X, self.min_eigen_ratio)
        self.rotation_ = self.transform_.rotation
        self.translation_ = self.transform_.translation
        return self

    def transform(self, X):
        check_is_fitted(self, "transform_")
        return self.transform_.apply(check_points(X, allow_empty=True))

    def inverse_transform(self, X):
        check_is_fitted(self, "transform_")
        return self.transform_.inverse().apply(check_points(X, allow_empty=True))


class ScaleNormalizer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Uniform scaling about the origin.

    With ``factor=None`` the factor is learned so the fitted cloud's
    bounding-box diagonal becomes 1.
    """

    def __init__(self, factor=None):
        self.factor = factor

    def fit(self, X, y=None):
        X = check_points(X)
        self.n_features_in_ = 3
        _, self.scale_ = normalize_scale(PointCloud(X), self.factor)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        return check_points(X, allow_empty=True) * self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        return check_points(X, allow_empty=True) / self.scale_
