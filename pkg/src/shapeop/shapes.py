"""Small closed meshes for experiments and tests."""
from __future__ import annotations

import numpy as np

from .mesh import Mesh, build_mesh

__all__ = [
    "tetrahedron",
    "octahedron",
    "icosahedron",
    "icosphere",
    "torus",
    "bounding_box_diagonal",
    "perturb",
]

TETRA_FACES = [(0, 1, 2), (0, 3, 1), (1, 3, 2), (2, 3, 0)]


def tetrahedron(edge: float = 1.0) -> tuple[Mesh, np.ndarray]:
    """Regular tetrahedron with the given edge length."""
    X = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    X *= edge / (2.0 * np.sqrt(2.0))
    return build_mesh(4, TETRA_FACES), X


def octahedron() -> tuple[Mesh, np.ndarray]:
    X = np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
    )
    faces = [
        (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
        (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
    ]
    return build_mesh(6, faces), X


def _icosahedron_data():
    p = (1.0 + np.sqrt(5.0)) / 2.0
    X = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=float,
    )
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ]
    )
    return X, faces


def icosahedron() -> tuple[Mesh, np.ndarray]:
    X, faces = _icosahedron_data()
    return build_mesh(len(X), faces), X


def icosphere(level: int = 1, radius: float = 1.0) -> tuple[Mesh, np.ndarray]:
    """Loop-style subdivided icosahedron projected to a sphere.

    Vertex counts are 12, 42, 162, 642 for levels 0 to 3.
    """
    X, faces = _icosahedron_data()
    verts = list(X)
    for _ in range(level):
        midpoint = {}
        new_faces = []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new_faces)
    X = radius * np.array(verts)
    return build_mesh(len(X), faces), X


def torus(n_major: int = 8, n_minor: int = 6, R: float = 1.0, r: float = 0.4):
    """Triangulated torus with ``n_major * n_minor`` vertices."""
    if n_major < 3 or n_minor < 3:
        raise ValueError("torus needs at least 3 samples in each direction")
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    U, V = np.meshgrid(u, v, indexing="ij")
    X = np.stack(
        [(R + r * np.cos(V)) * np.cos(U), (R + r * np.cos(V)) * np.sin(U), r * np.sin(V)],
        axis=-1,
    ).reshape(-1, 3)
    idx = lambda a, b: (a % n_major) * n_minor + (b % n_minor)  # noqa: E731
    faces = []
    for a in range(n_major):
        for b in range(n_minor):
            p, q, s, t = idx(a, b), idx(a + 1, b), idx(a + 1, b + 1), idx(a, b + 1)
            faces += [(p, q, s), (p, s, t)]
    return build_mesh(len(X), faces), X


def bounding_box_diagonal(X) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.linalg.norm(X.max(axis=0) - X.min(axis=0)))


def perturb(X, sigma: float, rng=None) -> np.ndarray:
    """Add isotropic Gaussian noise with std ``sigma`` times the bbox diagonal."""
    rng = np.random.default_rng(rng)
    X = np.asarray(X, dtype=float)
    return X + sigma * bounding_box_diagonal(X) * rng.standard_normal(X.shape)
