"""Synthetic surfaces whose roughness is known analytically."""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import PointCloud
from .exceptions import InvalidSpec

FLAT = "flat"
NOISY_PLANE = "noisy_plane"
SINUSOID = "sinusoid"
TWO_LEVEL = "two_level"
KINDS = (FLAT, NOISY_PLANE, SINUSOID, TWO_LEVEL)


@dataclass(frozen=True)
class SurfaceSpec:
    """Recipe for a synthetic cloud.

    ``extent`` is ``(xmin, ymin, xmax, ymax)``; ``density`` is points per unit
    area. Only the parameter matching ``kind`` is used.
    """

    kind: str = FLAT
    extent: tuple = (0.0, 0.0, 1.0, 1.0)
    density: float = 100.0
    seed: int = 0
    sigma: float = 0.0
    amplitude: float = 0.0
    wavelength: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise InvalidSpec(f"unknown surface kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        try:
            ext = tuple(float(v) for v in self.extent)
        except (TypeError, ValueError):
            raise InvalidSpec("extent must be four numbers") from None
        if len(ext) != 4 or not all(math.isfinite(v) for v in ext):
            raise InvalidSpec("extent must be four finite numbers (xmin, ymin, xmax, ymax)")
        if ext[2] <= ext[0] or ext[3] <= ext[1]:
            raise InvalidSpec("extent must have xmax > xmin and ymax > ymin")
        object.__setattr__(self, "extent", ext)
        for attr in ("density", "sigma", "amplitude", "wavelength", "h"):
            v = getattr(self, attr)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidSpec(f"{attr} must be a finite number")
        if not self.density > 0:
            raise InvalidSpec("density must be > 0")
        if self.sigma < 0 or self.amplitude < 0 or self.h < 0:
            raise InvalidSpec("sigma, amplitude and h must be >= 0")
        if not self.wavelength > 0:
            raise InvalidSpec("wavelength must be > 0")
        if int(self.seed) != self.seed:
            raise InvalidSpec("seed must be an integer")

    @property
    def step(self):
        return 1.0 / math.sqrt(self.density)

    def grid_shape(self):
        x0, y0, x1, y1 = self.extent
        nx = max(1, round((x1 - x0) / self.step))
        ny = max(1, round((y1 - y0) / self.step))
        return nx, ny

    def to_dict(self):
        d = asdict(self)
        d["extent"] = list(self.extent)
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise InvalidSpec("surface spec must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise InvalidSpec(f"spec is not valid JSON: {e}") from None
        except TypeError as e:
            raise InvalidSpec(str(e)) from None


def generate(spec: SurfaceSpec, name=None):
    """Sample the surface on a jittered grid (one point per grid cell)."""
    x0, y0, x1, y1 = spec.extent
    nx, ny = spec.grid_shape()
    sx = (x1 - x0) / nx
    sy = (y1 - y0) / ny
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    x = x0 + (ix + rng.uniform(0.0, 1.0, ix.size)) * sx
    y = y0 + (iy + rng.uniform(0.0, 1.0, iy.size)) * sy
    if spec.kind == FLAT:
        z = np.zeros_like(x)
    elif spec.kind == NOISY_PLANE:
        z = rng.normal(0.0, spec.sigma, x.size)
    elif spec.kind == SINUSOID:
        z = spec.amplitude * np.sin(2.0 * np.pi * x / spec.wavelength)
    else:
        z = np.where((ix + iy) % 2 == 0, spec.h, -spec.h)
    return PointCloud(
        np.column_stack([x, y, z]),
        name=name or spec.kind,
        comments=(f"synthetic {json.dumps(spec.to_dict(), sort_keys=True)}",),
    )


def expected_roughness(spec: SurfaceSpec, r=None):
    """Analytic mean roughness, or ``None`` where no closed form exists.

    The noisy-plane value sigma * sqrt(2 / pi) is the mean absolute deviation
    of a normal variable; it holds once an r-ball holds a few dozen points
    and r is small against the extent. The two-level value needs r to span
    many grid cells.
    """
    if spec.kind == FLAT:
        return 0.0
    if spec.kind == NOISY_PLANE:
        return spec.sigma * math.sqrt(2.0 / math.pi)
    if spec.kind == TWO_LEVEL:
        return spec.h
    return None
