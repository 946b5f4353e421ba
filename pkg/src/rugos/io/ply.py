"""PLY reading and writing (ASCII and binary little-endian, vertex data only)."""

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import PointCloud
from ..exceptions import (
    EmptyCloud,
    MalformedHeader,
    MissingVertexElement,
    TruncatedBody,
    UnsupportedFormat,
)

ASCII = "ascii"
BINARY_LITTLE_ENDIAN = "binary_little_endian"

# canonical name -> numpy little-endian dtype; legacy aliases map onto these
SCALAR_TYPES = {
    "int8": "i1", "uint8": "u1", "int16": "<i2", "uint16": "<u2",
    "int32": "<i4", "uint32": "<u4", "float32": "<f4", "float64": "<f8",
}
_ALIASES = {
    "char": "int8", "uchar": "uint8", "short": "int16", "ushort": "uint16",
    "int": "int32", "uint": "uint32", "float": "float32", "double": "float64",
}
# the original type names are the ones every reader understands
_WRITE_NAMES = {"float64": "double", "float32": "float", "uint8": "uchar"}


@dataclass
class PlyElement:
    name: str
    count: int
    properties: list = field(default_factory=list)  # (name, type) or (name, ("list", ct, it))

    def has_lists(self):
        return any(isinstance(t, tuple) for _, t in self.properties)

    def dtype(self):
        return np.dtype([(n, SCALAR_TYPES[t]) for n, t in self.properties])

    def property_names(self):
        return [n for n, _ in self.properties]


@dataclass
class PlyHeader:
    format: str
    version: str = "1.0"
    elements: list = field(default_factory=list)
    comments: list = field(default_factory=list)

    def element(self, name):
        for e in self.elements:
            if e.name == name:
                return e
        return None

    @property
    def vertex(self):
        v = self.element("vertex")
        if v is None:
            raise MissingVertexElement("PLY file has no vertex element")
        return v


def _scalar_type(token, lineno):
    t = _ALIASES.get(token, token)
    if t not in SCALAR_TYPES:
        raise MalformedHeader(f"header line {lineno}: unknown property type {token!r}")
    return t


def parse_header(fh):
    """Parse a PLY header from a binary file object positioned at its start.

    Leaves ``fh`` positioned at the first body byte.
    """
    magic = fh.readline()
    if magic.rstrip(b"\r\n") != b"ply":
        raise MalformedHeader("missing 'ply' magic line")
    fmt = None
    version = None
    elements = []
    comments = []
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise MalformedHeader("header ended before 'end_header'")
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise MalformedHeader(f"header line {lineno} is not ASCII") from None
        if not line:
            continue
        tokens = line.split()
        kw = tokens[0]
        if kw == "end_header":
            break
        if kw == "comment":
            comments.append(line[len("comment"):].strip())
        elif kw == "obj_info":
            continue
        elif kw == "format":
            if len(tokens) != 3:
                raise MalformedHeader(f"header line {lineno}: bad format line")
            fmt, version = tokens[1], tokens[2]
            if fmt == "binary_big_endian":
                raise UnsupportedFormat("big-endian PLY is not supported")
            if fmt not in (ASCII, BINARY_LITTLE_ENDIAN):
                raise MalformedHeader(f"header line {lineno}: unknown format {fmt!r}")
            if version != "1.0":
                raise UnsupportedFormat(f"PLY version {version!r} is not supported")
        elif kw == "element":
            if len(tokens) != 3:
                raise MalformedHeader(f"header line {lineno}: bad element line")
            try:
                count = int(tokens[2])
            except ValueError:
                raise MalformedHeader(f"header line {lineno}: bad element count") from None
            if count < 0:
                raise MalformedHeader(f"header line {lineno}: negative element count")
            elements.append(PlyElement(tokens[1], count))
        elif kw == "property":
            if not elements:
                raise MalformedHeader(f"header line {lineno}: property before element")
            if len(tokens) == 5 and tokens[1] == "list":
                ptype = ("list", _scalar_type(tokens[2], lineno), _scalar_type(tokens[3], lineno))
                elements[-1].properties.append((tokens[4], ptype))
            elif len(tokens) == 3:
                elements[-1].properties.append((tokens[2], _scalar_type(tokens[1], lineno)))
            else:
                raise MalformedHeader(f"header line {lineno}: bad property line")
        else:
            raise MalformedHeader(f"header line {lineno}: unexpected keyword {kw!r}")
    if fmt is None:
        raise MalformedHeader("header has no format line")
    names = [e.name for e in elements]
    if names.count("vertex") > 1:
        raise MalformedHeader("more than one vertex element")
    header = PlyHeader(fmt, version, elements, comments)
    v = header.vertex
    if v.has_lists():
        raise UnsupportedFormat("list properties are not supported on the vertex element")
    seen = set()
    for n, _ in v.properties:
        if n in seen:
            raise MalformedHeader(f"duplicate vertex property {n!r}")
        seen.add(n)
    return header


def read_header(path):
    with open(path, "rb") as fh:
        return parse_header(fh)


def _read_ascii_rows(fh, element, lineno_hint=""):
    rows = []
    ncols = len(element.properties)
    for k in range(element.count):
        line = fh.readline()
        if not line:
            raise TruncatedBody(
                f"expected {element.count} {element.name} rows, found {k}"
            )
        parts = line.split()
        if element.has_lists():
            continue
        if len(parts) < ncols:
            raise TruncatedBody(f"{element.name} row {k} has {len(parts)} of {ncols} values")
        rows.append(parts[:ncols])
    return rows


def read_vertex_table(path):
    """Return ``(header, structured_array)`` holding the raw vertex records."""
    with open(path, "rb") as fh:
        header = parse_header(fh)
        vertex = header.vertex
        dtype = vertex.dtype()
        if header.format == ASCII:
            for e in header.elements:
                rows = _read_ascii_rows(fh, e)
                if e is vertex:
                    table = np.zeros(vertex.count, dtype=dtype)
                    if rows:
                        try:
                            arr = np.array(rows, dtype=np.float64)
                        except ValueError:
                            raise TruncatedBody("non-numeric vertex value") from None
                        for j, name in enumerate(vertex.property_names()):
                            table[name] = arr[:, j]
                    return header, table
        else:
            for e in header.elements:
                if e is vertex:
                    nbytes = dtype.itemsize * vertex.count
                    data = fh.read(nbytes)
                    if len(data) < nbytes:
                        raise TruncatedBody(
                            f"vertex data needs {nbytes} bytes, file holds {len(data)}"
                        )
                    return header, np.frombuffer(data, dtype=dtype, count=vertex.count)
                if e.has_lists():
                    raise UnsupportedFormat(
                        f"cannot skip binary list element {e.name!r} preceding vertices"
                    )
                skip = e.dtype().itemsize * e.count
                if len(fh.read(skip)) < skip:
                    raise TruncatedBody(f"file ends inside element {e.name!r}")
    raise MissingVertexElement("PLY file has no vertex element")  # pragma: no cover


def load_ply(path, name=None):
    """Load the vertex element of a PLY file as a :class:`PointCloud`.

    ``x/y/z`` become positions (widened to float64), ``red/green/blue`` of
    type uint8 become colors, ``nx/ny/nz`` become normals and every other
    float property becomes a scalar field of the same name.
    """
    path = Path(path)
    header, table = read_vertex_table(path)
    names = set(table.dtype.names or ())
    for axis in "xyz":
        if axis not in names:
            raise MalformedHeader(f"vertex element lacks property {axis!r}")
    points = np.column_stack([table[a].astype(np.float64) for a in "xyz"])
    taken = {"x", "y", "z"}
    colors = None
    rgb = ("red", "green", "blue")
    if all(c in names for c in rgb) and all(table.dtype[c] == np.uint8 for c in rgb):
        colors = np.column_stack([table[c] for c in rgb])
        taken.update(rgb)
    normals = None
    if all(c in names for c in ("nx", "ny", "nz")):
        normals = np.column_stack([table[c].astype(np.float64) for c in ("nx", "ny", "nz")])
        taken.update(("nx", "ny", "nz"))
    fields = {
        n: table[n].astype(np.float64)
        for n in table.dtype.names
        if n not in taken and table.dtype[n].kind == "f"
    }
    return PointCloud(
        points,
        colors=colors,
        normals=normals,
        scalar_fields=fields,
        name=name or path.stem,
        comments=tuple(header.comments),
    )


_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


def sanitize_property_name(name):
    return _UNSAFE.sub("_", str(name)) or "_"


def _vertex_layout(cloud):
    cols = [("x", "float64", cloud.points[:, 0]),
            ("y", "float64", cloud.points[:, 1]),
            ("z", "float64", cloud.points[:, 2])]
    if cloud.colors is not None:
        for j, c in enumerate(("red", "green", "blue")):
            cols.append((c, "uint8", cloud.colors[:, j]))
    if cloud.normals is not None:
        for j, c in enumerate(("nx", "ny", "nz")):
            cols.append((c, "float32", cloud.normals[:, j]))
    used = {c[0] for c in cols}
    for key, values in cloud.scalar_fields.items():
        safe = sanitize_property_name(key)
        if safe in used:
            raise ValueError(f"scalar field {key!r} collides with property {safe!r}")
        used.add(safe)
        cols.append((safe, "float32", values))
    return cols


def save_ply(cloud, path, format=BINARY_LITTLE_ENDIAN):
    """Write a cloud as PLY.

    Positions are written as float64, normals and scalar fields as float32
    with NaN for undefined values.
    """
    if len(cloud) == 0:
        raise EmptyCloud("refusing to write an empty cloud")
    if format not in (ASCII, BINARY_LITTLE_ENDIAN):
        raise ValueError(f"unknown PLY format {format!r}")
    cols = _vertex_layout(cloud)
    lines = ["ply", f"format {format} 1.0"]
    for c in cloud.comments:
        lines.append("comment " + " ".join(str(c).splitlines()))
    lines.append(f"element vertex {len(cloud)}")
    lines += [f"property {_WRITE_NAMES[t]} {n}" for n, t, _ in cols]
    lines.append("end_header")
    head = ("\n".join(lines) + "\n").encode("ascii", errors="replace")

    table = np.empty(len(cloud), dtype=[(n, SCALAR_TYPES[t]) for n, t, _ in cols])
    for n, _, v in cols:
        table[n] = v
    with open(path, "wb") as fh:
        fh.write(head)
        if format == BINARY_LITTLE_ENDIAN:
            fh.write(table.tobytes())
        else:
            fmts = []
            for _, t, _ in cols:
                if t == "float64":
                    fmts.append("%.17g")
                elif t == "float32":
                    fmts.append("%.9g")
                else:
                    fmts.append("%d")
            np.savetxt(fh, table, fmt=fmts, delimiter=" ")
