"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import EmptyCloud, InvalidConfig


def check_points(X, *, allow_empty=False, name="X"):
    """Return ``X`` as a C-contiguous float64 ``(n, 3)`` array of finite values."""
    X = check_array(
        X,
        dtype=np.float64,
        order="C",
        ensure_all_finite=True,
        ensure_min_samples=0,
        input_name=name,
    )
    if X.shape[1] != 3:
        raise ValueError(f"{name} must have 3 columns (x, y, z), got {X.shape[1]}")
    if not allow_empty and X.shape[0] == 0:
        raise EmptyCloud(f"{name} holds no points")
    return X


def check_radii(radii):
    """Validate a radius list: non-empty, positive, strictly increasing."""
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if r.ndim != 1 or r.size == 0:
        raise InvalidConfig("at least one radius is required")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise InvalidConfig("radii must be positive and finite")
    if np.any(np.diff(r) <= 0):
        raise InvalidConfig("radii must be strictly increasing")
    return r


def check_min_neighbors(min_neighbors):
    if int(min_neighbors) != min_neighbors or min_neighbors < 3:
        raise InvalidConfig("min_neighbors must be an integer >= 3")
    return int(min_neighbors)
