"""Gaussian-splat PLY assets and their conversion to point clouds.

Splat files store pre-activation parameters: opacities as logits and
per-axis scales as logs. Parsing keeps them raw; activation happens only in
:func:`splats_to_cloud`.
"""

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from ..core import PointCloud
from ..exceptions import EmptySet, InvalidConfig, MissingSplatProperty
from .ply import read_vertex_table

SH_C0 = 0.28209479177387814

REQUIRED = (
    "x", "y", "z",
    "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
    "opacity",
    "f_dc_0", "f_dc_1", "f_dc_2",
)
_REST = re.compile(r"^f_rest_(\d+)$")


@dataclass(frozen=True, eq=False)
class GaussianSplatSet:
    centers: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray  # (w, x, y, z), not necessarily unit length
    logit_opacities: np.ndarray
    sh_dc: np.ndarray
    sh_rest: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.centers)
        shapes = {
            "centers": (n, 3), "log_scales": (n, 3), "rotations": (n, 4),
            "logit_opacities": (n,), "sh_dc": (n, 3),
        }
        for attr, shape in shapes.items():
            a = np.asarray(getattr(self, attr), dtype=np.float64)
            if a.shape != shape:
                raise ValueError(f"{attr} must have shape {shape}, got {a.shape}")
            object.__setattr__(self, attr, a)
        if self.sh_rest is not None:
            rest = np.asarray(self.sh_rest, dtype=np.float64)
            if rest.ndim != 2 or len(rest) != n:
                raise ValueError("sh_rest must have one row per splat")
            object.__setattr__(self, "sh_rest", rest)
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("splat centers must be finite")

    def __len__(self):
        return len(self.centers)

    @property
    def opacities(self):
        return expit(self.logit_opacities)

    @property
    def scales(self):
        return np.exp(self.log_scales)


def parse_splat_ply(path):
    """Read a Gaussian-splat PLY without transforming any values."""
    _, table = read_vertex_table(path)
    names = table.dtype.names or ()
    for req in REQUIRED:
        if req not in names:
            raise MissingSplatProperty(req)

    def cols(keys):
        return np.column_stack([table[k].astype(np.float64) for k in keys])

    rest_names = sorted(
        (n for n in names if _REST.match(n)), key=lambda n: int(_REST.match(n).group(1))
    )
    return GaussianSplatSet(
        centers=cols(("x", "y", "z")),
        log_scales=cols(("scale_0", "scale_1", "scale_2")),
        rotations=cols(("rot_0", "rot_1", "rot_2", "rot_3")),
        logit_opacities=table["opacity"].astype(np.float64),
        sh_dc=cols(("f_dc_0", "f_dc_1", "f_dc_2")),
        sh_rest=cols(rest_names) if rest_names else None,
    )


# -- conversion modes -------------------------------------------------------


@dataclass(frozen=True)
class CentersAll:
    """One point per splat, at its center."""


@dataclass(frozen=True)
class OpacityThreshold:
    """Centers of splats whose activated opacity is at least ``tau``."""

    tau: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidConfig(f"tau must lie in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class DensitySampled:
    """Draw points from each retained splat's anisotropic Gaussian.

    A splat of mean extent ``e`` gets ``round(samples_per_splat_scale * e /
    median_e)`` samples, where ``median_e`` is taken over the retained set.
    Splats are retained when their opacity is at least ``tau`` (0 keeps all).
    """

    samples_per_splat_scale: float
    seed: int = 0
    tau: float = 0.0

    def __post_init__(self):
        if not self.samples_per_splat_scale > 0:
            raise InvalidConfig("samples_per_splat_scale must be > 0")
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidConfig(f"tau must lie in [0, 1], got {self.tau}")


DEFAULT_MODE = OpacityThreshold(0.5)


def sh_dc_to_rgb8(sh_dc):
    c = np.clip(0.5 + SH_C0 * np.asarray(sh_dc, dtype=np.float64), 0.0, 1.0)
    return np.rint(c * 255.0).astype(np.uint8)


def quaternion_to_matrix(q):
    """Rotation matrices for (w, x, y, z) quaternions, normalized first."""
    q = np.asarray(q, dtype=np.float64).reshape(-1, 4)
    norm = np.linalg.norm(q, axis=1, keepdims=True)
    q = np.where(norm > 0, q / np.where(norm > 0, norm, 1.0), [1.0, 0.0, 0.0, 0.0])
    w, x, y, z = q.T
    R = np.empty((len(q), 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def retained_mask(splats, tau):
    """Splats whose activated opacity is at least ``tau``.

    Compared in logit space, where the logistic is exactly invertible: a
    logit of -1e-200 activates to 0.5 in floating point but is still below
    the tau = 0.5 cut.
    """
    return splats.logit_opacities >= logit(tau)


def splats_to_cloud(splats, mode=DEFAULT_MODE, name="splats"):
    """Convert a splat set to a point cloud according to ``mode``.

    Point colors come from the degree-0 SH coefficients.
    """
    if len(splats) == 0:
        raise EmptySet("splat set is empty")
    colors = sh_dc_to_rgb8(splats.sh_dc)
    total = len(splats)
    if isinstance(mode, CentersAll):
        keep = np.ones(total, dtype=bool)
    elif isinstance(mode, (OpacityThreshold, DensitySampled)):
        keep = retained_mask(splats, mode.tau)
    else:
        raise InvalidConfig(f"unknown conversion mode {mode!r}")
    comments = [f"converted from {total} splats, retained {int(keep.sum())}"]

    if not isinstance(mode, DensitySampled):
        comments.insert(0, f"conversion {_describe(mode)}")
        return PointCloud(
            splats.centers[keep], colors=colors[keep], name=name, comments=comments
        )

    centers = splats.centers[keep]
    scales = np.exp(splats.log_scales[keep])
    extent = scales.mean(axis=1)
    rng = np.random.Generator(np.random.PCG64(mode.seed))
    if len(centers) == 0:
        pts = np.empty((0, 3))
        cols = np.empty((0, 3), dtype=np.uint8)
    else:
        counts = np.rint(mode.samples_per_splat_scale * extent / np.median(extent))
        counts = counts.astype(np.int64)
        R = quaternion_to_matrix(splats.rotations[keep])
        owner = np.repeat(np.arange(len(centers)), counts)
        z = rng.standard_normal((len(owner), 3)) * scales[owner]
        pts = centers[owner] + np.einsum("nij,nj->ni", R[owner], z)
        cols = colors[keep][owner]
    comments.insert(0, f"conversion {_describe(mode)} rng PCG64 seed {mode.seed}")
    return PointCloud(pts, colors=cols, name=name, comments=comments)


def _describe(mode):
    if isinstance(mode, CentersAll):
        return "centers_all"
    if isinstance(mode, OpacityThreshold):
        return f"opacity_threshold tau={mode.tau:g}"
    return (
        f"density_sampled samples_per_splat_scale={mode.samples_per_splat_scale:g}"
        f" tau={mode.tau:g}"
    )


def write_splat_ply(splats, path):
    """Write a splat set in the conventional 3DGS binary layout."""
    n = len(splats)
    names = list(REQUIRED)
    cols = [
        splats.centers[:, 0], splats.centers[:, 1], splats.centers[:, 2],
        *splats.log_scales.T, *splats.rotations.T, splats.logit_opacities, *splats.sh_dc.T,
    ]
    if splats.sh_rest is not None:
        for j in range(splats.sh_rest.shape[1]):
            names.append(f"f_rest_{j}")
            cols.append(splats.sh_rest[:, j])
    table = np.empty(n, dtype=[(k, "<f4") for k in names])
    for k, v in zip(names, cols):
        table[k] = v
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {k}" for k in names]
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(table.tobytes())
