"""Intrinsic operators built from edge lengths, and shape-difference operators.

Sign convention: the stiffness matrix ``W`` has the cotangent weights
``w_ij = (cot a_ij + cot b_ij) / 2`` off the diagonal and
``w_ii = -sum_j w_ij`` on it, so ``W`` is negative semidefinite for
Delaunay-like meshes and ``W @ 1 = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import (
    DegenerateTriangle,
    DimensionMismatch,
    DisconnectedMesh,
    EigensolverFailure,
    IndexOutOfRange,
)
from .mesh import Mesh
from .metric import face_areas, face_lengths, triangle_slacks

__all__ = [
    "DEFAULT_PINV_TOL",
    "mass_matrix",
    "half_cotangents",
    "edge_weights",
    "assemble_stiffness",
    "stiffness_matrix",
    "cotan_stiffness_from_embedding",
    "stiffness_edge_values",
    "pseudoinverse",
    "area_difference",
    "conformal_difference",
    "conformal_energy",
    "lb_eigenbasis",
    "functional_map_from_point_map",
    "QualityReport",
    "mesh_quality_report",
]

DEFAULT_PINV_TOL = 1e-10


def mass_matrix(mesh: Mesh, lengths) -> np.ndarray:
    """Lumped vertex areas ``a_i``: one third of the incident face areas.

    Returns the diagonal as a vector of shape ``(n,)``.
    """
    areas = face_areas(mesh, lengths)
    return np.bincount(
        mesh.faces.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=mesh.vertex_count
    )


def half_cotangents(L: np.ndarray, areas: np.ndarray) -> np.ndarray:
    """``(-a^2 + b^2 + c^2) / (8 A)`` for each side ``a`` of each face.

    This is half the cotangent of the angle opposite the side.
    """
    sq = L * L
    return (sq.sum(axis=1, keepdims=True) - 2.0 * sq) / (8.0 * areas[:, None])


def edge_weights(mesh: Mesh, lengths) -> np.ndarray:
    """Off-diagonal stiffness weights ``w_ij``, one per edge."""
    L = face_lengths(mesh, lengths)
    c = half_cotangents(L, face_areas(mesh, lengths))
    return np.bincount(mesh.face_edges.ravel(), weights=c.ravel(), minlength=mesh.n_edges)


def assemble_stiffness(mesh: Mesh, weights) -> sparse.csr_matrix:
    """Sparse symmetric matrix with ``weights`` on edges and negative row sums.

    Each row stores its off-diagonal entries first and the diagonal last, and
    the diagonal is the negated left-to-right sum of the stored off-diagonals.
    A CSR product accumulates in storage order, so ``W @ ones`` is exactly 0.
    """
    w = np.asarray(weights, dtype=float)
    n = mesh.vertex_count
    i, j = mesh.edges.T
    off = sparse.coo_matrix((np.r_[w, w], (np.r_[i, j], np.r_[j, i])), shape=(n, n)).tocsr()
    off.sort_indices()
    deg = np.diff(off.indptr)
    # sequential per-row sum, vectorized across rows
    rowsum = np.zeros(n)
    for k in range(deg.max()):
        rows = np.flatnonzero(deg > k)
        rowsum[rows] = rowsum[rows] + off.data[off.indptr[rows] + k]
    indptr = off.indptr + np.arange(n + 1)
    pos = indptr[1:] - 1  # last slot of each row
    data = np.empty(off.nnz + n)
    indices = np.empty(off.nnz + n, dtype=off.indices.dtype)
    mask = np.ones(off.nnz + n, dtype=bool)
    mask[pos] = False
    data[mask], indices[mask] = off.data, off.indices
    data[pos], indices[pos] = -rowsum, np.arange(n)
    W = sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    W.has_sorted_indices = False
    return W


def stiffness_matrix(mesh: Mesh, lengths) -> sparse.csr_matrix:
    """Cotangent stiffness matrix expressed through edge lengths only."""
    return assemble_stiffness(mesh, edge_weights(mesh, lengths))


def cotan_stiffness_from_embedding(mesh: Mesh, X) -> sparse.csr_matrix:
    """Cotangent stiffness matrix computed from embedded corner angles."""
    X = np.asarray(X, dtype=float)
    if X.shape != (mesh.vertex_count, 3):
        raise DimensionMismatch(f"embedding has shape {X.shape}")
    P = X[mesh.faces]  # (F, 3, 3)
    u = np.roll(P, -1, axis=1) - P
    v = np.roll(P, 1, axis=1) - P
    dots = np.einsum("fcd,fcd->fc", u, v)
    cross = np.linalg.norm(np.cross(u, v), axis=2)
    scale = np.linalg.norm(u, axis=2) * np.linalg.norm(v, axis=2)
    bad = np.flatnonzero((cross <= 1e-14 * scale).any(axis=1))
    if bad.size:
        f = int(bad[0])
        raise DegenerateTriangle(f"embedded face {f} is degenerate", face=f)
    half_cot = 0.5 * dots / cross
    w = np.bincount(
        mesh.face_edges.ravel(), weights=half_cot.ravel(), minlength=mesh.n_edges
    )
    return assemble_stiffness(mesh, w)


def stiffness_edge_values(mesh: Mesh, W) -> np.ndarray:
    """Read the off-diagonal entries of ``W`` at every mesh edge."""
    i, j = mesh.edges.T
    if sparse.issparse(W):
        return np.asarray(W.tocsr()[i, j]).ravel()
    return np.asarray(W)[i, j]


def _as_dense(M) -> np.ndarray:
    return M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)


def pseudoinverse(W, rel_tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with ``|lam| <= rel_tol * max|lam|`` are treated as zero.
    """
    M = _as_dense(W)
    M = 0.5 * (M + M.T)
    lam, U = np.linalg.eigh(M)
    cutoff = rel_tol * np.abs(lam).max() if lam.size else 0.0
    keep = np.abs(lam) > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (U * inv) @ U.T


def _check_map(F, n_source, n_target):
    F = _as_dense(F)
    if F.shape != (n_target, n_source):
        raise DimensionMismatch(
            f"functional map has shape {F.shape}, expected ({n_target}, {n_source})"
        )
    return F


def area_difference(mass_x, mass_y, F) -> np.ndarray:
    """Area-based shape difference ``A_X^-1 F^T A_Y F``.

    Parameters
    ----------
    mass_x, mass_y : ndarray
        Lumped vertex areas of the source (n) and target (m) shapes.
    F : array_like, shape (m, n)
        Functional map from functions on X to functions on Y.
    """
    a_x = np.asarray(mass_x, dtype=float)
    a_y = np.asarray(mass_y, dtype=float)
    F = _check_map(F, len(a_x), len(a_y))
    return (F.T @ (a_y[:, None] * F)) / a_x[:, None]


def conformal_difference(W_x, W_y, F, rel_tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Conformal shape difference ``W_X^+ F^T W_Y F``."""
    n = W_x.shape[0]
    m = W_y.shape[0]
    if W_x.shape != (n, n) or W_y.shape != (m, m):
        raise DimensionMismatch("stiffness matrices must be square")
    F = _check_map(F, n, m)
    WyF = W_y @ F
    return pseudoinverse(W_x, rel_tol) @ (F.T @ np.asarray(WyF))


def conformal_energy(mesh: Mesh, lengths, W_ref) -> float:
    """Closed-form conformal energy ``1/2 sum_ij (w_ij(l) - wref_ij) l_ij^2``.

    Diagnostic only: it measures how far the metric's cotangent weights are
    from a reference stiffness matrix sharing the mesh's sparsity.
    """
    lengths = np.asarray(lengths, dtype=float)
    w = edge_weights(mesh, lengths)
    w_ref = stiffness_edge_values(mesh, W_ref)
    return 0.5 * float(np.sum((w - w_ref) * lengths**2))


def _require_connected(mesh: Mesh):
    if not mesh.is_connected:
        raise DisconnectedMesh("mesh edge graph has more than one connected component")


def lb_eigenbasis(mesh: Mesh, lengths, K: int, dense_limit: int = 2000):
    """First ``K`` Laplace-Beltrami eigenpairs.

    Solves ``-W phi = lam A phi`` so eigenvalues are nonnegative and ascending.
    The basis is ``A``-orthonormal; each column is signed so that its largest
    magnitude entry is positive, which makes the constant first mode positive.

    Returns
    -------
    phi : ndarray, shape (n, K)
    evals : ndarray, shape (K,)
    """
    n = mesh.vertex_count
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    _require_connected(mesh)
    a = mass_matrix(mesh, lengths)
    S = -stiffness_matrix(mesh, lengths)
    try:
        if n <= dense_limit:
            evals, phi = scipy.linalg.eigh(
                S.toarray(), np.diag(a), subset_by_index=[0, K - 1]
            )
        else:
            evals, phi = splinalg.eigsh(
                S.tocsc(), k=K, M=sparse.diags(a).tocsc(), sigma=-1e-8, which="LM"
            )
            order = np.argsort(evals)
            evals, phi = evals[order], phi[:, order]
            # eigsh normalizes against M only approximately
            phi = phi / np.sqrt(np.einsum("ik,i,ik->k", phi, a, phi))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, splinalg.ArpackError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs, evals


def functional_map_from_point_map(t, n: int, truncation=None) -> np.ndarray:
    """Functional map ``F f = f o t`` induced by a point map ``t: Y -> X``.

    Parameters
    ----------
    t : array_like of int, length m
        ``t[y]`` is the vertex of X (with ``n`` vertices) that ``y`` maps to.
    n : int
        Number of vertices of X.
    truncation : tuple, optional
        ``(phi_x, mass_x, phi_y, mass_y)``. When given, the 0/1 map ``F0`` is
        replaced by its spectral approximation
        ``phi_y C phi_x^T diag(mass_x)`` with ``C = phi_y^T diag(mass_y) F0 phi_x``.

    Returns
    -------
    F : ndarray, shape (m, n)
    """
    t = np.asarray(t)
    if t.ndim != 1:
        raise DimensionMismatch("point map must be a 1-D index vector")
    if t.size and (t.min() < 0 or t.max() >= n):
        raise IndexOutOfRange(f"point map references a vertex outside [0, {n})")
    m = len(t)
    F0 = np.zeros((m, n))
    F0[np.arange(m), t] = 1.0
    if truncation is None:
        return F0
    phi_x, a_x, phi_y, a_y = (np.asarray(v, dtype=float) for v in truncation)
    if phi_x.shape[0] != n or phi_y.shape[0] != m or phi_x.shape[1] != phi_y.shape[1]:
        raise DimensionMismatch("eigenbases do not match the point map dimensions")
    C = phi_y.T @ (a_y[:, None] * F0) @ phi_x
    return phi_y @ C @ (phi_x.T * a_x[None, :])


@dataclass(frozen=True)
class QualityReport:
    """Mesh-quality diagnostics for a metric."""

    negative_weight_edges: np.ndarray
    obtuse_faces: np.ndarray
    min_slack: float
    min_rel_slack: float

    @property
    def n_negative_weights(self) -> int:
        return len(self.negative_weight_edges)

    @property
    def n_obtuse_faces(self) -> int:
        return len(self.obtuse_faces)

    @property
    def all_clear(self) -> bool:
        return self.n_negative_weights == 0 and self.n_obtuse_faces == 0

    def as_text(self) -> str:
        lines = [
            f"negative cotangent weights: {self.n_negative_weights}",
            f"obtuse faces: {self.n_obtuse_faces}",
            f"min triangle slack: {self.min_slack:.6g} (relative {self.min_rel_slack:.6g})",
        ]
        if self.n_negative_weights:
            shown = ", ".join(str(int(e)) for e in self.negative_weight_edges[:20])
            lines.append(f"  edges: {shown}{' ...' if self.n_negative_weights > 20 else ''}")
        if self.n_obtuse_faces:
            shown = ", ".join(str(int(f)) for f in self.obtuse_faces[:20])
            lines.append(f"  faces: {shown}{' ...' if self.n_obtuse_faces > 20 else ''}")
        return "\n".join(lines)


def mesh_quality_report(mesh: Mesh, lengths) -> QualityReport:
    """Count negative cotangent weights and obtuse faces of a metric.

    Obtuseness is detected from lengths alone: a face is obtuse when some
    side's square exceeds the sum of the other two squares.
    """
    L = face_lengths(mesh, lengths)
    w = edge_weights(mesh, lengths)
    sq = L * L
    obtuse = np.flatnonzero((2.0 * sq > sq.sum(axis=1, keepdims=True)).any(axis=1))
    slack = triangle_slacks(L)
    semi = 0.5 * L.sum(axis=1)
    return QualityReport(
        negative_weight_edges=np.flatnonzero(w < 0),
        obtuse_faces=obtuse,
        min_slack=float(slack.min()),
        min_rel_slack=float((slack / semi[:, None]).min()),
    )
