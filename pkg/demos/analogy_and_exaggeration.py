"""
Shape analogies and exaggeration
================================

Given shapes A and B, the area-based and conformal shape differences describe
how B's metric departs from A's. Applying the same differences to a third
shape C yields X, the answer to "A is to B as C is to X". With C = B the
difference is applied twice, which exaggerates it.
"""

import numpy as np

from shapeop import shapes
from shapeop.energy import make_shape_from_difference_spec, sfo_energy
from shapeop.metric import metric_from_embedding
from shapeop.operators import (
    area_difference,
    conformal_difference,
    mass_matrix,
    stiffness_matrix,
)
from shapeop.solvers import SolverConfig, alternate

mesh, S = shapes.icosphere(2)
n = mesh.vertex_count
I = np.eye(n)  # all shapes share connectivity

# %%
# A is an ellipsoid and B stretches it along x. C is a flattened sphere.
A = S * np.array([1.0, 0.8, 0.6])
B = A * np.array([1.4, 1.0, 1.0])
C = S * np.array([0.9, 0.9, 0.5])

l_a, l_b = metric_from_embedding(mesh, A), metric_from_embedding(mesh, B)
V_ab = area_difference(mass_matrix(mesh, l_a), mass_matrix(mesh, l_b), I)
R_ab = conformal_difference(stiffness_matrix(mesh, l_a), stiffness_matrix(mesh, l_b), I)


def apply_difference(C, lam=0.5):
    l_c = metric_from_embedding(mesh, C)
    spec = make_shape_from_difference_spec(
        mass_matrix(mesh, l_c), stiffness_matrix(mesh, l_c), I, V_ab, R_ab, lam
    )
    E0 = sfo_energy(spec, mesh, l_c)
    X, _ = alternate(spec, mesh, C, SolverConfig(outer_iterations=15))
    E1 = sfo_energy(spec, mesh, metric_from_embedding(mesh, X))
    return X, E0, E1


def extents(X):
    return np.ptp(X, axis=0)


# %%
# The analogy should stretch C along x by roughly the same factor.
X, E0, E1 = apply_difference(C)
print(f"analogy energy {E0:.3e} -> {E1:.3e}")
print("extents of C:", np.round(extents(C), 3))
print("extents of X:", np.round(extents(X), 3))

# %%
# Exaggeration: repeatedly apply the A -> B difference starting from B.
current = B
for r in range(1, 4):
    current, E0, E1 = apply_difference(current)
    ratio = extents(current)[0] / extents(current)[1]
    print(f"round {r}: x/y extent ratio {ratio:.3f}, energy {E0:.2e} -> {E1:.2e}")
