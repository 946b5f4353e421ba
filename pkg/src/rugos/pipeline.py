"""End-to-end processing: load or convert, crop, align, normalize, roughness."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import compare_clouds
from .core import AABB, bounding_box
from .exceptions import InvalidConfig, RugosError
from .geometry import align_to_dominant_plane, crop_box, crop_polygon, load_polygon, normalize_scale
from .io import is_splat_ply, load_cloud, parse_splat_ply, splats_to_cloud
from .io.splat import DEFAULT_MODE, CentersAll, DensitySampled, OpacityThreshold
from .roughness import RoughnessConfig, attach_fields, compute_roughness_fields


class StageError(RugosError):
    """A failure while processing one cloud of a manifest."""

    def __init__(self, cloud, stage, cause):
        self.cloud = cloud
        self.stage = stage
        self.cause = cause
        super().__init__(str(self))

    def __str__(self):
        if isinstance(self.cause, FileNotFoundError):
            detail = "file not found"
        else:
            detail = f"{type(self.cause).__name__}: {self.cause}"
        return f"cloud {self.cloud!r}: {detail} (stage {self.stage})"


def conversion_from_dict(d, seed=None):
    if d is None:
        return DEFAULT_MODE
    mode = str(d.get("mode", "opacity_threshold")).lower()
    if mode == "centers_all":
        return CentersAll()
    if mode == "opacity_threshold":
        return OpacityThreshold(float(d.get("tau", 0.5)))
    if mode == "density_sampled":
        return DensitySampled(
            float(d["samples_per_splat_scale"]),
            seed=int(d.get("seed", 0 if seed is None else seed)),
            tau=float(d.get("tau", 0.0)),
        )
    raise InvalidConfig(f"unknown conversion mode {mode!r}")


@dataclass(frozen=True)
class Preprocess:
    align: bool = False
    normalize: object = None  # None, "bbox" or a positive factor
    crop: str | None = None  # polygon file
    crop_box: tuple | None = None  # (xmin, ymin, zmin, xmax, ymax, zmax)

    @classmethod
    def from_dict(cls, d, base=Path(".")):
        d = d or {}
        crop = d.get("crop")
        box = d.get("crop_box")
        return cls(
            align=bool(d.get("align", False)),
            normalize=d.get("normalize"),
            crop=str(base / crop) if crop else None,
            crop_box=tuple(float(v) for v in box) if box else None,
        )


def parse_normalize(value):
    if value is None or value is False:
        return False, None
    if isinstance(value, str) and value.lower() in ("bbox", "bbox_diagonal_unit"):
        return True, None
    try:
        factor = float(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"normalize must be 'bbox' or a positive number, got {value!r}") from None
    if not factor > 0:
        raise InvalidConfig("explicit scale factor must be > 0")
    return True, factor


def prepare(cloud, pre: Preprocess):
    """Apply crop, then alignment, then scale normalization.

    Returns ``(cloud, info)`` where ``info`` records the transform, the scale
    factor and point counts.
    """
    info = {"input_points": len(cloud), "transform": None, "scale_factor": None}
    if pre.crop:
        cloud = crop_polygon(cloud, load_polygon(pre.crop))
        info["crop"] = pre.crop
    if pre.crop_box:
        b = pre.crop_box
        if len(b) != 6:
            raise InvalidConfig("crop box needs six numbers: xmin ymin zmin xmax ymax zmax")
        cloud = crop_box(cloud, AABB(b[:3], b[3:]))
        info["crop_box"] = list(b)
    info["retained_points"] = len(cloud)
    if pre.align:
        cloud, t = align_to_dominant_plane(cloud)
        info["transform"] = t.to_dict()
    enabled, factor = parse_normalize(pre.normalize)
    if enabled:
        cloud, applied = normalize_scale(cloud, factor)
        info["scale_factor"] = applied
    return cloud, info


def check_radii_fit(cloud, radii):
    diag = bounding_box(cloud).diagonal
    if max(radii) > diag:
        raise InvalidConfig(
            f"radius {max(radii):g} exceeds the cloud's bounding-box diagonal {diag:.6g}"
        )


@dataclass(frozen=True)
class CloudEntry:
    name: str
    path: str
    conversion: dict | None = None


@dataclass(frozen=True)
class PipelineManifest:
    clouds: tuple
    roughness: RoughnessConfig = field(default_factory=RoughnessConfig)
    preprocess: Preprocess = field(default_factory=Preprocess)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d, base=Path(".")):
        base = Path(base)
        clouds = []
        for i, c in enumerate(d.get("clouds", [])):
            if "path" not in c:
                raise InvalidConfig(f"manifest cloud #{i} has no path")
            name = c.get("name") or Path(c["path"]).stem
            clouds.append(CloudEntry(name, str(base / c["path"]), c.get("conversion")))
        if not clouds:
            raise InvalidConfig("manifest lists no clouds")
        names = [c.name for c in clouds]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise InvalidConfig(f"duplicate cloud names in manifest: {dupes}")
        out = d.get("output_dir")
        return cls(
            clouds=tuple(clouds),
            roughness=RoughnessConfig.from_dict(d.get("roughness", {})),
            preprocess=Preprocess.from_dict(d.get("preprocess"), base),
            output_dir=str(base / out) if out else None,
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"manifest is not valid JSON: {e}") from None
        return cls.from_dict(d, base=path.parent)


def load_input(path, conversion=None, seed=None, name=None):
    """Load a point cloud, converting Gaussian-splat PLYs on the way in."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if conversion is not None or is_splat_ply(path):
        splats = parse_splat_ply(path)
        return splats_to_cloud(splats, conversion_from_dict(conversion, seed), name=name or path.stem)
    return load_cloud(path, name=name)


def process_cloud(entry: CloudEntry, manifest: PipelineManifest, seed=None):
    """Run one manifest entry through the chain; returns the cloud with fields."""
    stage = "load"
    try:
        cloud = load_input(entry.path, entry.conversion, seed, name=entry.name)
        stage = "prep"
        cloud, info = prepare(cloud, manifest.preprocess)
        stage = "roughness"
        check_radii_fit(cloud, manifest.roughness.radii)
        fields = compute_roughness_fields(cloud, manifest.roughness)
    except (RugosError, OSError, ValueError) as e:
        raise StageError(entry.name, stage, e) from e
    return attach_fields(cloud, fields), fields, info


def run_manifest(manifest: PipelineManifest, seed=None, fixed_clock=False):
    """Process every cloud in order and build the comparison report."""
    results = {}
    for entry in manifest.clouds:
        results[entry.name] = process_cloud(entry, manifest, seed)
    report = compare_clouds(
        [(name, r[1]) for name, r in results.items()],
        config=manifest.roughness.to_dict(),
        inputs={e.name: e.path for e in manifest.clouds},
        fixed_clock=fixed_clock,
    )
    return report, results
