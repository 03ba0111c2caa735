"""Closed manifold triangle-mesh connectivity.

A :class:`Mesh` holds only combinatorics. Geometry lives elsewhere, either as
an ``(n, 3)`` embedding array or as a vector of edge lengths indexed by
``mesh.edges``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    DegenerateFace,
    IndexOutOfRange,
    MeshError,
    NonManifoldEdge,
    UnreferencedVertex,
)

__all__ = ["Mesh", "build_mesh", "edge_opposite_vertices"]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable connectivity of a closed manifold triangle mesh.

    Attributes
    ----------
    vertex_count : int
        Number of vertices ``n``.
    faces : ndarray, shape (F, 3)
        Vertex triples, in input order.
    edges : ndarray, shape (E, 2)
        Unordered edges as ``(min, max)`` pairs sorted lexicographically.
    edge_opposites : ndarray, shape (E, 2)
        For edge ``ij``, the vertices ``(k, h)`` completing its two incident
        faces. ``k`` comes from the earlier face in ``faces``.
    edge_faces : ndarray, shape (E, 2)
        The two faces incident to each edge, same order as ``edge_opposites``.
    face_edges : ndarray, shape (F, 3)
        ``face_edges[f, c]`` is the edge opposite corner ``c`` of face ``f``.
    """

    vertex_count: int
    faces: np.ndarray
    edges: np.ndarray
    edge_opposites: np.ndarray
    edge_faces: np.ndarray
    face_edges: np.ndarray

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def vertex_face_incidence(self) -> list[np.ndarray]:
        """Per vertex, the indices of faces containing it (ascending)."""
        flat = self.faces.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.vertex_count)
        splits = np.split(order // 3, np.cumsum(counts)[:-1])
        return [_frozen(s) for s in splits]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 vertex adjacency of the edge graph."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(i))
        adj = sparse.coo_matrix(
            (data, (np.r_[i, j], np.r_[j, i])),
            shape=(self.vertex_count, self.vertex_count),
        )
        return adj.tocsr()

    @cached_property
    def is_connected(self) -> bool:
        ncomp, _ = csgraph.connected_components(self.adjacency, directed=False)
        return ncomp == 1

    def edge_index(self, i: int, j: int) -> int:
        """Index of the edge joining vertices ``i`` and ``j``."""
        key = (min(i, j), max(i, j))
        try:
            return self._edge_lookup[key]
        except KeyError:
            raise IndexOutOfRange(f"({i}, {j}) is not an edge of the mesh") from None

    @cached_property
    def _edge_lookup(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): e for e, (a, b) in enumerate(self.edges)}


def build_mesh(vertex_count: int, faces) -> Mesh:
    """Validate faces and derive the edge structure of a closed mesh.

    Raises
    ------
    IndexOutOfRange
        A face references a vertex outside ``[0, vertex_count)``.
    DegenerateFace
        A face repeats a vertex.
    NonManifoldEdge
        An edge is not shared by exactly two faces (boundary or fan).
    UnreferencedVertex
        Some vertex belongs to no face.
    """
    n = int(vertex_count)
    if n < 4:
        raise MeshError(f"a closed mesh needs at least 4 vertices, got {n}")
    faces = np.asarray(faces)
    if faces.size == 0:
        raise MeshError("face list is empty")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshError(f"faces must have shape (F, 3), got {faces.shape}")
    if not np.issubdtype(faces.dtype, np.integer):
        if not np.all(np.equal(np.mod(faces, 1), 0)):
            raise MeshError("face indices must be integers")
    faces = faces.astype(np.int64)

    bad = np.flatnonzero(((faces < 0) | (faces >= n)).any(axis=1))
    if bad.size:
        raise IndexOutOfRange(
            f"face {bad[0]} {tuple(faces[bad[0]])} references a vertex outside [0, {n})"
        )
    f0, f1, f2 = faces.T
    bad = np.flatnonzero((f0 == f1) | (f1 == f2) | (f2 == f0))
    if bad.size:
        raise DegenerateFace(f"face {bad[0]} {tuple(faces[bad[0]])} repeats a vertex")
    unused = np.setdiff1d(np.arange(n), faces.ravel())
    if unused.size:
        raise UnreferencedVertex(f"vertex {unused[0]} is not referenced by any face")

    nf = len(faces)
    # half-edge c of a face is the side opposite corner c
    a = np.stack([f1, f2, f0], axis=1).ravel()
    b = np.stack([f2, f0, f1], axis=1).ravel()
    opp = faces.ravel()
    pairs = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)
    edges, inverse, counts = np.unique(
        pairs, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.ravel()
    bad = np.flatnonzero(counts != 2)
    if bad.size:
        raise NonManifoldEdge(edges[bad[0]], counts[bad[0]])

    # stable sort keeps half-edges of earlier faces first
    order = np.argsort(inverse, kind="stable").reshape(-1, 2)
    edge_opposites = opp[order]
    edge_faces = order // 3
    face_edges = inverse.reshape(nf, 3)

    return Mesh(
        vertex_count=n,
        faces=_frozen(faces),
        edges=_frozen(edges),
        edge_opposites=_frozen(edge_opposites),
        edge_faces=_frozen(edge_faces),
        face_edges=_frozen(face_edges),
    )


def edge_opposite_vertices(mesh: Mesh, edge: int) -> tuple[int, int]:
    """Vertices ``(k, h)`` opposite ``edge`` in its two incident faces."""
    if not 0 <= edge < mesh.n_edges:
        raise IndexOutOfRange(f"edge index {edge} outside [0, {mesh.n_edges})")
    k, h = mesh.edge_opposites[edge]
    return int(k), int(h)
