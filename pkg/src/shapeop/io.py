"""Plain-text readers and writers.

Formats
-------
OFF
    ``OFF`` header, ``n f e`` counts, ``n`` lines of three coordinates, then
    ``f`` lines ``3 i j k``. ``#`` comments and blank lines are ignored.
dense matrix
    First line ``rows cols``, then ``rows`` lines of ``cols`` numbers.
edge CSV
    One ``i,j,length`` line per mesh edge, in any order.
vertex CSV
    One value per line, one line per vertex.
point map
    One ``y x`` line per target vertex ``y``: vertex ``y`` of Y maps to vertex
    ``x`` of X. Indices are 0-based.

Writers emit 17 significant digits and LF newlines, so output is lossless and
byte-for-byte deterministic. Readers reject trailing content and report
1-based line numbers.
"""
from __future__ import annotations

import os

import numpy as np
from scipy import sparse

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    MissingEdge,
    NonPositiveLength,
    NonTriangleFace,
    ParseError,
    UnknownEdge,
)
from .mesh import Mesh, build_mesh

__all__ = [
    "read_off",
    "write_off",
    "read_obj",
    "read_mesh",
    "read_dense_matrix",
    "write_dense_matrix",
    "read_edge_csv",
    "write_edge_csv",
    "read_vertex_csv",
    "write_vertex_csv",
    "read_point_map",
    "write_point_map",
]


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _content_lines(path):
    """Yield ``(lineno, tokens)`` for non-blank lines, comments stripped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def _floats(tokens, lineno, path, count=None):
    if count is not None and len(tokens) != count:
        raise ParseError(f"expected {count} values, found {len(tokens)}", lineno, path)
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"invalid number in {' '.join(tokens)!r}", lineno, path) from None


def _ints(tokens, lineno, path, count=None):
    if count is not None and len(tokens) != count:
        raise ParseError(f"expected {count} integers, found {len(tokens)}", lineno, path)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"invalid integer in {' '.join(tokens)!r}", lineno, path) from None


def read_off(path) -> tuple[Mesh, np.ndarray]:
    """Read a triangle mesh from an OFF file.

    Returns
    -------
    mesh : Mesh
    X : ndarray, shape (n, 3)
    """
    lines = _content_lines(path)
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    tokens = line.split()
    if tokens[0] != "OFF":
        raise ParseError(f"expected 'OFF' header, found {tokens[0]!r}", lineno, path)
    counts = tokens[1:]
    if not counts:
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError("missing counts line", None, path) from None
        counts = line.split()
    n, nf, _ = _ints(counts, lineno, path, 3)
    if n < 0 or nf < 0:
        raise ParseError("negative element count", lineno, path)

    X = np.empty((n, 3))
    for v in range(n):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {n} vertices, file ended after {v}", None, path) from None
        X[v] = _floats(line.split(), lineno, path, 3)

    faces = []
    for f in range(nf):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nf} faces, file ended after {f}", None, path) from None
        vals = _ints(line.split(), lineno, path)
        if not vals or vals[0] != len(vals) - 1:
            raise ParseError("face arity does not match its index count", lineno, path)
        if vals[0] != 3:
            raise NonTriangleFace(f"face with {vals[0]} vertices", lineno, path)
        faces.append(vals[1:])

    for lineno, _ in lines:
        raise ParseError("unexpected trailing content", lineno, path)
    return build_mesh(n, np.array(faces, dtype=np.int64).reshape(-1, 3)), X


def write_off(path, mesh: Mesh, X):
    """Write ``mesh`` with coordinates ``X`` as OFF, preserving face order."""
    X = np.asarray(X, dtype=float)
    if X.shape != (mesh.vertex_count, 3):
        raise DimensionMismatch(
            f"embedding has shape {X.shape}, mesh has {mesh.vertex_count} vertices"
        )
    parts = ["OFF\n", f"{mesh.vertex_count} {mesh.n_faces} {mesh.n_edges}\n"]
    parts += [" ".join(_fmt(c) for c in row) + "\n" for row in X]
    parts += [f"3 {i} {j} {k}\n" for i, j, k in mesh.faces]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(parts))


def read_obj(path) -> tuple[Mesh, np.ndarray]:
    """Read ``v`` and triangular ``f`` records of a Wavefront OBJ file.

    Other record types are ignored. Face entries may carry ``/vt/vn``
    suffixes; only the vertex index is used.
    """
    verts, faces = [], []
    for lineno, line in _content_lines(path):
        tokens = line.split()
        if tokens[0] == "v":
            verts.append(_floats(tokens[1:4], lineno, path, 3))
        elif tokens[0] == "f":
            if len(tokens) != 4:
                raise NonTriangleFace(f"face with {len(tokens) - 1} vertices", lineno, path)
            idx = _ints([t.split("/")[0] for t in tokens[1:]], lineno, path)
            n = len(verts)
            faces.append([i - 1 if i > 0 else n + i for i in idx])
    X = np.array(verts, dtype=float).reshape(-1, 3)
    return build_mesh(len(X), np.array(faces, dtype=np.int64).reshape(-1, 3)), X


def read_mesh(path) -> tuple[Mesh, np.ndarray]:
    """Dispatch on extension: ``.obj`` goes to :func:`read_obj`, anything else to OFF."""
    if os.fspath(path).lower().endswith(".obj"):
        return read_obj(path)
    return read_off(path)


def read_dense_matrix(path) -> np.ndarray:
    lines = _content_lines(path)
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    rows, cols = _ints(line.split(), lineno, path, 2)
    if rows < 0 or cols < 0:
        raise ParseError("negative matrix dimension", lineno, path)
    M = np.empty((rows, cols))
    for r in range(rows):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {rows} rows, file ended after {r}", None, path) from None
        M[r] = _floats(line.split(), lineno, path, cols)
    for lineno, _ in lines:
        raise ParseError("unexpected trailing content", lineno, path)
    return M


def write_dense_matrix(path, M):
    """Write a 2-D array (sparse input is densified)."""
    M = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got {M.ndim} dimensions")
    parts = [f"{M.shape[0]} {M.shape[1]}\n"]
    parts += [" ".join(_fmt(x) for x in row) + "\n" for row in M]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(parts))


def read_edge_csv(path, mesh: Mesh) -> np.ndarray:
    """Read ``i,j,length`` lines into a metric in the mesh's edge order."""
    lengths = np.full(mesh.n_edges, np.nan)
    seen = np.zeros(mesh.n_edges, dtype=bool)
    for lineno, line in _content_lines(path):
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != 3:
            raise ParseError("expected 'i,j,length'", lineno, path)
        i, j = _ints(tokens[:2], lineno, path)
        (value,) = _floats(tokens[2:], lineno, path)
        try:
            e = mesh.edge_index(i, j)
        except IndexOutOfRange:
            raise UnknownEdge(f"({i}, {j}) is not an edge of the mesh", lineno, path) from None
        if seen[e]:
            raise ParseError(f"edge ({i}, {j}) listed twice", lineno, path)
        if not value > 0:
            raise NonPositiveLength(f"edge ({i}, {j}) has length {value}", lineno, path)
        lengths[e] = value
        seen[e] = True
    missing = np.flatnonzero(~seen)
    if missing.size:
        i, j = mesh.edges[missing[0]]
        raise MissingEdge(f"no length for edge ({i}, {j}); {missing.size} missing", None, path)
    return lengths


def write_edge_csv(path, mesh: Mesh, lengths):
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (mesh.n_edges,):
        raise DimensionMismatch("metric does not match the mesh edges")
    parts = [f"{i},{j},{_fmt(v)}\n" for (i, j), v in zip(mesh.edges, lengths)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(parts))


def read_vertex_csv(path, n: int | None = None) -> np.ndarray:
    values = []
    for lineno, line in _content_lines(path):
        values += _floats(line.split(","), lineno, path, 1)
    if n is not None and len(values) != n:
        raise DimensionMismatch(f"{path}: expected {n} values, found {len(values)}")
    return np.array(values)


def write_vertex_csv(path, values):
    values = np.asarray(values, dtype=float).ravel()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(_fmt(v) + "\n" for v in values))


def read_point_map(path, n_source: int | None = None) -> np.ndarray:
    """Read ``y x`` pairs; returns ``t`` with ``t[y] = x``.

    Every target index ``0..m-1`` must appear exactly once. When ``n_source``
    is given, source indices are range-checked.
    """
    pairs = {}
    for lineno, line in _content_lines(path):
        y, x = _ints(line.replace(",", " ").split(), lineno, path, 2)
        if y < 0 or x < 0 or (n_source is not None and x >= n_source):
            raise IndexOutOfRange(f"{path}:{lineno}: index out of range in '{y} {x}'")
        if y in pairs:
            raise ParseError(f"target vertex {y} mapped twice", lineno, path)
        pairs[y] = x
    m = len(pairs)
    if set(pairs) != set(range(m)):
        missing = min(set(range(m)) - set(pairs))
        raise ParseError(f"target vertex {missing} is not mapped", None, path)
    return np.array([pairs[y] for y in range(m)], dtype=np.int64)


def write_point_map(path, t):
    t = np.asarray(t, dtype=np.int64).ravel()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{y} {x}\n" for y, x in enumerate(t)))
