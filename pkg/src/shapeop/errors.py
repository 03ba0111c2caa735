"""Exception hierarchy shared by every module of the package."""


class ShapeOpError(Exception):
    """Base class for all domain errors raised by shapeop."""


class MeshError(ShapeOpError, ValueError):
    pass


class NonManifoldEdge(MeshError):
    def __init__(self, edge, count):
        self.edge = tuple(int(v) for v in edge)
        self.count = int(count)
        super().__init__(
            f"edge {self.edge} is shared by {self.count} faces (expected exactly 2)"
        )


class DegenerateFace(MeshError):
    pass


class UnreferencedVertex(MeshError):
    pass


class DisconnectedMesh(MeshError):
    pass


class IndexOutOfRange(ShapeOpError, IndexError):
    pass


class DimensionMismatch(ShapeOpError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class InvalidTriangle(ShapeOpError, ValueError):
    def __init__(self, message, face=None):
        self.face = face
        super().__init__(message)


class DegenerateTriangle(InvalidTriangle):
    pass


class ZeroLengthEdge(ShapeOpError, ValueError):
    pass


class InvalidMetric(ShapeOpError, ValueError):
    pass


class InvalidInitialMetric(InvalidMetric):
    pass


class EigensolverFailure(ShapeOpError, RuntimeError):
    pass


class ParseError(ShapeOpError, ValueError):
    """Malformed input file. ``line`` is 1-based, or None when not applicable."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class NonTriangleFace(ParseError):
    pass


class MissingEdge(ParseError):
    pass


class UnknownEdge(ParseError):
    pass


class NonPositiveLength(ParseError):
    pass
