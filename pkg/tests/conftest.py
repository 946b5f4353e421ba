import numpy as np
import pytest

from rugos.core import PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def noisy_patch(rng, n=2000, extent=2.0, sigma=0.01, tilt=None):
    xy = rng.uniform(0, extent, (n, 2))
    z = rng.normal(0, sigma, n)
    P = np.column_stack([xy, z])
    if tilt is not None:
        P = P @ tilt.T
    return P


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def grid_cloud(n=3, spacing=1.0):
    g = np.arange(n) * spacing
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    return PointCloud(np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]))
