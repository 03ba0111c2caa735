"""Operator-matching energies over edge lengths and their exact gradients.

The general energy is

    E(l) = lam * ||H1 A(l) K1 - J1||_F^2 + (1 - lam) * ||H2 W(l) K2 - J2||_F^2

with ``A`` the lumped mass matrix and ``W`` the cotangent stiffness matrix.
In every :class:`OperatorTerm`, ``H`` may be ``None`` (identity) or a 1-D
vector (diagonal matrix), and ``K`` may be ``None`` (identity).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, InvalidMetric, InvalidTriangle, ShapeMismatch
from .mesh import Mesh
from .metric import face_areas, face_lengths, heron_areas
from .operators import (
    DEFAULT_PINV_TOL,
    assemble_stiffness,
    half_cotangents,
    mass_matrix,
    pseudoinverse,
    stiffness_matrix,
)

__all__ = [
    "DEFAULT_LAMBDA",
    "OperatorTerm",
    "SfoEnergySpec",
    "residuals",
    "sfo_energy",
    "area_partials",
    "face_area_partials",
    "mass_partials",
    "stiffness_partials",
    "stiffness_derivative",
    "sfo_gradient",
    "make_shape_from_laplacian_spec",
    "make_shape_from_difference_spec",
    "per_vertex_energy",
]

DEFAULT_LAMBDA = 0.5


def _dense(M):
    if M is None:
        return None
    return M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)


@dataclass(frozen=True)
class OperatorTerm:
    """One Frobenius term ``||H Q K - J||^2``."""

    H: np.ndarray | None
    K: np.ndarray | None
    J: np.ndarray

    def __post_init__(self):
        for name in ("H", "K", "J"):
            object.__setattr__(self, name, _dense(getattr(self, name)))
        if self.H is not None and self.H.ndim not in (1, 2):
            raise DimensionMismatch("H must be a vector (diagonal) or a matrix")
        if self.K is not None and self.K.ndim != 2:
            raise DimensionMismatch("K must be a matrix")
        if self.J.ndim != 2:
            raise DimensionMismatch("J must be a matrix")

    def check(self, n: int):
        cols = n if self.K is None else self.K.shape[1]
        if self.K is not None and self.K.shape[0] != n:
            raise DimensionMismatch(f"K has {self.K.shape[0]} rows, mesh has {n} vertices")
        if self.H is None:
            rows = n
        elif self.H.ndim == 1:
            if len(self.H) != n:
                raise DimensionMismatch(f"diagonal H has length {len(self.H)}, expected {n}")
            rows = n
        else:
            if self.H.shape[1] != n:
                raise DimensionMismatch(f"H has {self.H.shape[1]} columns, expected {n}")
            rows = self.H.shape[0]
        if self.J.shape != (rows, cols):
            raise DimensionMismatch(f"J has shape {self.J.shape}, expected {(rows, cols)}")

    def residual(self, Q) -> np.ndarray:
        """``H Q K - J`` for a sparse or dense ``n x n`` operator ``Q``."""
        QK = Q.toarray() if self.K is None else np.asarray(Q @ self.K)
        if self.H is None:
            HQK = QK
        elif self.H.ndim == 1:
            HQK = self.H[:, None] * QK
        else:
            HQK = self.H @ QK
        return HQK - self.J

    def outer_factor(self, R: np.ndarray, pairs_i, pairs_j) -> np.ndarray:
        """Entries ``(i, j)`` of ``dE/dQ = 2 H^T R K^T`` at the given index pairs."""
        if self.H is None:
            P = R
        elif self.H.ndim == 1:
            P = self.H[:, None] * R
        else:
            P = self.H.T @ R
        if self.K is None:
            return 2.0 * P[pairs_i, pairs_j]
        return 2.0 * np.einsum("el,el->e", P[pairs_i], self.K[pairs_j])


@dataclass(frozen=True)
class SfoEnergySpec:
    """Data of the weighted two-term energy.

    ``area_term`` may be omitted when ``lam == 0`` and ``stiffness_term`` when
    ``lam == 1``.
    """

    lam: float = DEFAULT_LAMBDA
    area_term: OperatorTerm | None = None
    stiffness_term: OperatorTerm | None = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.lam > 0 and self.area_term is None:
            raise ValueError("lambda > 0 requires an area term")
        if self.lam < 1 and self.stiffness_term is None:
            raise ValueError("lambda < 1 requires a stiffness term")

    @property
    def uses_area(self) -> bool:
        return self.lam > 0

    @property
    def uses_stiffness(self) -> bool:
        return self.lam < 1

    def check(self, mesh: Mesh):
        n = mesh.vertex_count
        if self.uses_area:
            self.area_term.check(n)
        if self.uses_stiffness:
            self.stiffness_term.check(n)


def _guard(mesh: Mesh, lengths):
    lengths = np.asarray(lengths, dtype=float)
    try:
        face_areas(mesh, lengths)
    except InvalidTriangle as exc:
        raise InvalidMetric(f"energy undefined on an invalid metric: {exc}") from exc
    return lengths


def residuals(spec: SfoEnergySpec, mesh: Mesh, lengths):
    """Residual matrices ``(E_area, E_stiffness)``; unused terms are None."""
    lengths = _guard(mesh, lengths)
    spec.check(mesh)
    R1 = R2 = None
    if spec.uses_area:
        R1 = spec.area_term.residual(sparse.diags(mass_matrix(mesh, lengths)).tocsr())
    if spec.uses_stiffness:
        R2 = spec.stiffness_term.residual(stiffness_matrix(mesh, lengths))
    return R1, R2


def sfo_energy(spec: SfoEnergySpec, mesh: Mesh, lengths) -> float:
    """Value of the weighted operator-matching energy at ``lengths``."""
    R1, R2 = residuals(spec, mesh, lengths)
    energy = 0.0
    if R1 is not None:
        energy += spec.lam * float(np.sum(R1 * R1))
    if R2 is not None:
        energy += (1.0 - spec.lam) * float(np.sum(R2 * R2))
    return energy


def _gamma(x, y, z):
    s = 0.5 * (x + y + z)
    area = heron_areas(np.stack([x, y, z], axis=-1))
    num = (
        (s - x) * (s - y) * (s - z)
        + s * (s - x) * (s - y)
        + s * (s - x) * (s - z)
        - s * (s - y) * (s - z)
    )
    return num / (4.0 * area)


def area_partials(a: float, b: float, c: float) -> np.ndarray:
    """Partial derivatives of a triangle's area w.r.t. each of its sides.

    Returns ``[dA/da, dA/db, dA/dc]``.
    """
    if not np.isfinite(heron_areas(np.array([a, b, c], dtype=float))):
        raise InvalidTriangle(f"side lengths ({a}, {b}, {c}) violate the triangle inequality")
    return face_area_partials(np.array([[a, b, c]], dtype=float))[0]


def face_area_partials(L: np.ndarray) -> np.ndarray:
    """Row-wise area partials for an ``(F, 3)`` array of side lengths."""
    x, y, z = L[:, 0], L[:, 1], L[:, 2]
    return np.stack([_gamma(x, y, z), _gamma(y, z, x), _gamma(z, x, y)], axis=1)


def mass_partials(mesh: Mesh, lengths) -> sparse.csr_matrix:
    """Jacobian ``d a_i / d l_e`` of the lumped areas, shape ``(n, n_edges)``."""
    lengths = _guard(mesh, lengths)
    dA = face_area_partials(face_lengths(mesh, lengths)) / 3.0
    rows = np.repeat(mesh.faces, 3, axis=1).ravel()  # vertex v, repeated per edge
    cols = np.tile(mesh.face_edges, (1, 3)).ravel()
    vals = np.tile(dA, (1, 3)).ravel()
    J = sparse.coo_matrix((vals, (rows, cols)), shape=(mesh.vertex_count, mesh.n_edges))
    return J.tocsr()


def _half_cot_jacobian(L, areas):
    """Per face, ``D[f, p, t] = d c_p / d l_t`` for the half cotangents ``c``."""
    c = half_cotangents(L, areas)
    dA = face_area_partials(L)
    sign = np.where(np.eye(3, dtype=bool), -1.0, 1.0)
    # c_p = (sum_q sign_pq l_q^2) / (8 A)
    D = sign[None] * (2.0 * L[:, None, :]) / (8.0 * areas[:, None, None])
    D -= c[:, :, None] * dA[:, None, :] / areas[:, None, None]
    return D


def stiffness_partials(mesh: Mesh, lengths) -> sparse.csr_matrix:
    """Jacobian of the edge weights, ``D[e', e] = d w_e' / d l_e``.

    Shape ``(n_edges, n_edges)``. Only edges sharing a face couple, so each
    column has at most five nonzeros. Diagonal entries of ``W`` follow as
    ``d w_ii / d l_e = -sum_j d w_ij / d l_e``; see :func:`stiffness_derivative`.
    """
    lengths = _guard(mesh, lengths)
    L = face_lengths(mesh, lengths)
    D = _half_cot_jacobian(L, face_areas(mesh, lengths))
    fe = mesh.face_edges
    rows = np.repeat(fe, 3, axis=1).ravel()
    cols = np.tile(fe, (1, 3)).ravel()
    J = sparse.coo_matrix((D.ravel(), (rows, cols)), shape=(mesh.n_edges, mesh.n_edges))
    return J.tocsr()


def stiffness_derivative(mesh: Mesh, lengths, edge: int) -> sparse.csr_matrix:
    """Full ``n x n`` derivative ``dW / d l_edge``."""
    col = stiffness_partials(mesh, lengths)[:, edge].toarray().ravel()
    return assemble_stiffness(mesh, col)


def sfo_gradient(spec: SfoEnergySpec, mesh: Mesh, lengths) -> np.ndarray:
    """Gradient of :func:`sfo_energy` with respect to the edge lengths.

    The outer factor ``2 H^T R K^T`` is only evaluated at the diagonal and at
    edge positions, then contracted against the sparse operator Jacobians.
    """
    R1, R2 = residuals(spec, mesh, lengths)
    n = mesh.vertex_count
    diag = np.arange(n)
    grad = np.zeros(mesh.n_edges)
    if R1 is not None:
        g = spec.area_term.outer_factor(R1, diag, diag)
        grad += spec.lam * (mass_partials(mesh, lengths).T @ g)
    if R2 is not None:
        i, j = mesh.edges.T
        term = spec.stiffness_term
        gd = term.outer_factor(R2, diag, diag)
        s = term.outer_factor(R2, i, j) + term.outer_factor(R2, j, i) - gd[i] - gd[j]
        grad += (1.0 - spec.lam) * (stiffness_partials(mesh, lengths).T @ s)
    return grad


def make_shape_from_laplacian_spec(F, W_target) -> SfoEnergySpec:
    """Energy ``||W(l) F - W_target F||^2`` (stiffness term only, lam = 0)."""
    W_target = _dense(W_target)
    F = _dense(F)
    n = W_target.shape[0]
    if W_target.shape != (n, n):
        raise DimensionMismatch("target stiffness must be square")
    if F.shape[0] != n:
        raise DimensionMismatch(
            f"functional map has {F.shape[0]} rows, target stiffness is {n} x {n}"
        )
    term = OperatorTerm(H=None, K=F, J=W_target @ F)
    return SfoEnergySpec(lam=0.0, stiffness_term=term)


def make_shape_from_difference_spec(
    mass_c, W_c, G, V_ab, R_ab, lam: float = DEFAULT_LAMBDA, rel_tol: float = DEFAULT_PINV_TOL
) -> SfoEnergySpec:
    """Energy asking the differences of X relative to C to reproduce those of B relative to A.

    Parameters
    ----------
    mass_c : ndarray, shape (n_c,)
        Lumped areas of the starting shape C.
    W_c : sparse or ndarray, shape (n_c, n_c)
        Stiffness matrix of C.
    G : ndarray, shape (n_c, n_a)
        Functional map from functions on A to functions on C.
    V_ab, R_ab : ndarray, shape (n_a, n_a)
        Area-based and conformal differences of B relative to A.
    lam : float
        Weight of the area term.
    """
    a_c = np.asarray(mass_c, dtype=float)
    G = _dense(G)
    V_ab = _dense(V_ab)
    R_ab = _dense(R_ab)
    n_c = len(a_c)
    if W_c.shape != (n_c, n_c):
        raise DimensionMismatch("W_c does not match the size of mass_c")
    if G.shape[0] != n_c:
        raise DimensionMismatch(f"G has {G.shape[0]} rows, C has {n_c} vertices")
    n_a = G.shape[1]
    if V_ab.shape != (n_a, n_a) or R_ab.shape != (n_a, n_a):
        raise DimensionMismatch("difference operators must be n_a x n_a")
    area = OperatorTerm(H=1.0 / a_c, K=G, J=G @ V_ab)
    stiff = OperatorTerm(H=pseudoinverse(W_c, rel_tol), K=G, J=G @ R_ab)
    return SfoEnergySpec(lam=lam, area_term=area, stiffness_term=stiff)


def per_vertex_energy(spec: SfoEnergySpec, mesh: Mesh, lengths) -> np.ndarray:
    """Attribute the residuals to vertices through their rows and columns.

    ``eps_i = lam * sum_j (|e_ij| + |e_ji|) + (1 - lam) * sum_j (|e'_ij| + |e'_ji|)``.
    Only defined when every used residual is ``n x n``.
    """
    R1, R2 = residuals(spec, mesh, lengths)
    n = mesh.vertex_count
    eps = np.zeros(n)
    for R, weight in ((R1, spec.lam), (R2, 1.0 - spec.lam)):
        if R is None:
            continue
        if R.shape != (n, n):
            raise ShapeMismatch(
                f"per-vertex energy needs {n} x {n} residuals, got {R.shape}"
            )
        absR = np.abs(R)
        eps += weight * (absR.sum(axis=1) + absR.sum(axis=0))
    return eps
