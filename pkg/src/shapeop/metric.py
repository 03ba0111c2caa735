"""Discrete metrics: one positive length per mesh edge.

A metric is a plain float array of shape ``(n_edges,)`` indexed by
``mesh.edges``. Validity means the strong triangle inequality holds on every
face, with a slack relative to the face's semi-perimeter.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidTriangle, ZeroLengthEdge
from .mesh import Mesh

__all__ = [
    "DEFAULT_REL_MARGIN",
    "MetricValidity",
    "metric_from_embedding",
    "face_lengths",
    "triangle_slacks",
    "validate_metric",
    "is_valid_metric",
    "triangle_area",
    "heron_areas",
    "face_areas",
]

DEFAULT_REL_MARGIN = 1e-7


@dataclass(frozen=True)
class MetricValidity:
    """Outcome of :func:`validate_metric`.

    ``violations`` lists ``(face, margin)`` pairs where ``margin`` is the
    smallest of the face's three triangle-inequality slacks.
    """

    valid: bool
    violations: list[tuple[int, float]] = field(default_factory=list)

    def __bool__(self):
        return self.valid


def _check_lengths(mesh: Mesh, lengths) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (mesh.n_edges,):
        raise DimensionMismatch(
            f"metric has shape {lengths.shape}, mesh has {mesh.n_edges} edges"
        )
    return lengths


def metric_from_embedding(mesh: Mesh, X) -> np.ndarray:
    """Edge lengths induced by vertex coordinates ``X`` of shape ``(n, 3)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != mesh.vertex_count:
        raise DimensionMismatch(
            f"embedding has shape {X.shape}, mesh has {mesh.vertex_count} vertices"
        )
    i, j = mesh.edges.T
    lengths = np.linalg.norm(X[i] - X[j], axis=1)
    zero = np.flatnonzero(lengths == 0)
    if zero.size:
        e = zero[0]
        raise ZeroLengthEdge(f"edge {e} {tuple(mesh.edges[e])} has coincident endpoints")
    return lengths


def face_lengths(mesh: Mesh, lengths) -> np.ndarray:
    """``(F, 3)`` array; column ``c`` is the side opposite corner ``c``."""
    lengths = _check_lengths(mesh, lengths)
    return lengths[mesh.face_edges]


def triangle_slacks(L: np.ndarray) -> np.ndarray:
    """Slacks ``b + c - a`` for each side ``a`` of each row of ``L``."""
    total = L.sum(axis=-1, keepdims=True)
    return total - 2.0 * L


def validate_metric(mesh: Mesh, lengths, rel_margin: float = DEFAULT_REL_MARGIN) -> MetricValidity:
    """Check the strong triangle inequality on every face.

    A face passes when all three slacks exceed ``rel_margin`` times its
    semi-perimeter. Never raises for geometric reasons; non-positive or
    non-finite lengths simply invalidate the faces that use them.
    """
    if rel_margin < 0:
        raise ValueError("rel_margin must be nonnegative")
    L = face_lengths(mesh, lengths)
    slack = triangle_slacks(L)
    semi = 0.5 * L.sum(axis=1)
    ok = np.all(slack > rel_margin * semi[:, None], axis=1) & np.all(L > 0, axis=1)
    ok &= np.all(np.isfinite(L), axis=1)
    bad = np.flatnonzero(~ok)
    margins = slack.min(axis=1)
    return MetricValidity(
        valid=bad.size == 0,
        violations=[(int(f), float(margins[f])) for f in bad],
    )


def is_valid_metric(mesh: Mesh, lengths, rel_margin: float = DEFAULT_REL_MARGIN) -> bool:
    """Fast boolean form of :func:`validate_metric`."""
    L = face_lengths(mesh, lengths)
    if not np.all(np.isfinite(L)) or not np.all(L > 0):
        return False
    slack = triangle_slacks(L)
    semi = 0.5 * L.sum(axis=1)
    return bool(np.all(slack > rel_margin * semi[:, None]))


def heron_areas(L) -> np.ndarray:
    """Heron areas for rows of side lengths, evaluated in the stable ordering.

    Sides are sorted ``a >= b >= c`` and the radicand is formed as
    ``(a+(b+c)) (c-(a-b)) (c+(a-b)) (a+(b-c))``. Rows whose radicand is not
    positive come back as NaN; callers decide how to report them.
    """
    L = np.asarray(L, dtype=float)
    s = -np.sort(-L, axis=-1)
    a, b, c = s[..., 0], s[..., 1], s[..., 2]
    rad = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    with np.errstate(invalid="ignore"):
        area = 0.25 * np.sqrt(np.where(rad > 0, rad, np.nan))
    return area


def triangle_area(a: float, b: float, c: float) -> float:
    """Area of a triangle from its side lengths.

    >>> triangle_area(3.0, 4.0, 5.0)
    6.0
    """
    area = float(heron_areas(np.array([a, b, c], dtype=float)))
    if not np.isfinite(area):
        raise InvalidTriangle(f"side lengths ({a}, {b}, {c}) violate the triangle inequality")
    return area


def face_areas(mesh: Mesh, lengths) -> np.ndarray:
    """Per-face areas in face order.

    Raises
    ------
    InvalidTriangle
        If some face's lengths do not form a proper triangle; ``.face`` holds
        the first offending face index.
    """
    areas = heron_areas(face_lengths(mesh, lengths))
    bad = np.flatnonzero(~np.isfinite(areas))
    if bad.size:
        f = int(bad[0])
        raise InvalidTriangle(f"face {f} violates the triangle inequality", face=f)
    return areas
