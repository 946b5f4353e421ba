"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`RugosError`,
so callers (and the CLI) can catch one base class and still report the
specific name.
"""


class RugosError(Exception):
    """Base class for all library errors."""


class EmptyCloud(RugosError, ValueError):
    pass


class InvalidCloud(RugosError, ValueError):
    pass


class NonPositiveCellEdge(RugosError, ValueError):
    pass


class InvalidConfig(RugosError, ValueError):
    pass


# -- file formats -----------------------------------------------------------


class PlyError(RugosError, ValueError):
    pass


class MalformedHeader(PlyError):
    pass


class MissingVertexElement(PlyError):
    pass


class UnsupportedFormat(PlyError):
    pass


class TruncatedBody(PlyError):
    pass


class MissingSplatProperty(PlyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"missing splat property {self.name!r}"


class XyzFormatError(RugosError, ValueError):
    def __init__(self, line, detail=""):
        super().__init__(line, detail)
        self.line = line
        self.detail = detail

    def __str__(self):
        msg = f"line {self.line}"
        return f"{msg}: {self.detail}" if self.detail else msg


class NonNumericRow(XyzFormatError):
    pass


class TooFewColumns(XyzFormatError):
    pass


class RaggedRow(XyzFormatError):
    pass


class EmptySet(RugosError, ValueError):
    pass


# -- geometry ---------------------------------------------------------------


class TooFewPoints(RugosError, ValueError):
    pass


class DegenerateNeighborhood(RugosError, ValueError):
    pass


class AmbiguousOrientation(RugosError, ValueError):
    pass


class ZeroExtent(RugosError, ValueError):
    pass


class InvalidPolygon(RugosError, ValueError):
    pass


# -- analysis / synth -------------------------------------------------------


class NoDefinedValues(RugosError, ValueError):
    pass


class MismatchedRadii(RugosError, ValueError):
    pass


class MismatchedVariant(RugosError, ValueError):
    pass


class InvalidSpec(RugosError, ValueError):
    pass
