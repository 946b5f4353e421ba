from pathlib import Path

from .ply import (
    ASCII,
    BINARY_LITTLE_ENDIAN,
    PlyElement,
    PlyHeader,
    load_ply,
    parse_header,
    read_header,
    sanitize_property_name,
    save_ply,
)
from .splat import (
    CentersAll,
    DensitySampled,
    GaussianSplatSet,
    OpacityThreshold,
    parse_splat_ply,
    splats_to_cloud,
    write_splat_ply,
)
from .xyz import load_xyz, save_xyz


def load_cloud(path, name=None):
    """Load a PLY or XYZ/CSV file, chosen by extension."""
    if Path(path).suffix.lower() == ".ply":
        return load_ply(path, name=name)
    return load_xyz(path, name=name)


def is_splat_ply(path):
    """True when a PLY vertex element carries Gaussian-splat properties."""
    if Path(path).suffix.lower() != ".ply":
        return False
    names = set(read_header(path).vertex.property_names())
    return {"scale_0", "opacity", "rot_0"} <= names


__all__ = [
    "ASCII", "BINARY_LITTLE_ENDIAN", "PlyElement", "PlyHeader", "load_ply",
    "parse_header", "read_header", "sanitize_property_name", "save_ply",
    "CentersAll", "DensitySampled", "GaussianSplatSet", "OpacityThreshold",
    "parse_splat_ply", "splats_to_cloud", "write_splat_ply", "load_xyz",
    "save_xyz", "load_cloud", "is_splat_ply",
]
