"""Shape-from-operator synthesis on closed triangle meshes.

Recover vertex coordinates whose induced edge lengths make the lumped mass
matrix and the cotangent stiffness matrix match prescribed operators, by
alternating safeguarded gradient descent on edge lengths with SMACOF
re-embedding.
"""
from .energy import (
    DEFAULT_LAMBDA,
    OperatorTerm,
    SfoEnergySpec,
    area_partials,
    make_shape_from_difference_spec,
    make_shape_from_laplacian_spec,
    mass_partials,
    per_vertex_energy,
    sfo_energy,
    sfo_gradient,
    stiffness_partials,
)
from .errors import ShapeOpError
from .mesh import Mesh, build_mesh, edge_opposite_vertices
from .metric import (
    MetricValidity,
    face_areas,
    metric_from_embedding,
    triangle_area,
    validate_metric,
)
from .operators import (
    area_difference,
    conformal_difference,
    conformal_energy,
    cotan_stiffness_from_embedding,
    functional_map_from_point_map,
    lb_eigenbasis,
    mass_matrix,
    mesh_quality_report,
    pseudoinverse,
    stiffness_matrix,
)
from .solvers import (
    SolverConfig,
    SolverTrace,
    alternate,
    mfo_descent,
    smacof,
    smacof_matrices,
    smacof_step,
    stress,
)

__version__ = "0.1.0"
