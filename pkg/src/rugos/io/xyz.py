"""Plain-text XYZ / CSV point files."""

from pathlib import Path

import numpy as np

from ..core import PointCloud
from ..exceptions import NonNumericRow, RaggedRow, TooFewColumns


def load_xyz(path, name=None):
    """Read whitespace- or comma-separated rows of at least three numbers.

    Columns 1-3 are x, y, z; any further columns become scalar fields
    ``col4``, ``col5``, ... Lines starting with ``#`` and blank lines are
    skipped. Errors report the 1-based line number.
    """
    path = Path(path)
    rows = []
    ncols = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.replace(",", " ").split()
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise NonNumericRow(lineno, f"non-numeric value in {s!r}") from None
            if len(vals) < 3:
                raise TooFewColumns(lineno, f"{len(vals)} columns, need at least 3")
            if ncols is None:
                ncols = len(vals)
            elif len(vals) < ncols:
                raise TooFewColumns(lineno, f"{len(vals)} columns, expected {ncols}")
            elif len(vals) > ncols:
                raise RaggedRow(lineno, f"{len(vals)} columns, expected {ncols}")
            rows.append(vals)
    data = np.array(rows, dtype=np.float64).reshape(-1, ncols or 3)
    fields = {f"col{j + 1}": data[:, j] for j in range(3, data.shape[1])}
    return PointCloud(data[:, :3], scalar_fields=fields, name=name or path.stem)


def save_xyz(cloud, path, delimiter=" "):
    """Write positions followed by scalar fields, one point per line."""
    names = list(cloud.scalar_fields)
    cols = [cloud.points] + [cloud.scalar_fields[k][:, None] for k in names]
    data = np.hstack(cols)
    header = delimiter.join(["x", "y", "z"] + names)
    np.savetxt(path, data, fmt="%.17g", delimiter=delimiter, header=header, comments="# ")
