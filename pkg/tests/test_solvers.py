import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff
from scipy.spatial.transform import Rotation

from conftest import random_shape, random_valid_metric
from shapeop import shapes
from shapeop.energy import (
    make_shape_from_difference_spec,
    make_shape_from_laplacian_spec,
    sfo_energy,
)
from shapeop.errors import DisconnectedMesh, InvalidInitialMetric
from shapeop.mesh import build_mesh
from shapeop.metric import metric_from_embedding, validate_metric
from shapeop.operators import (
    area_difference,
    conformal_difference,
    mass_matrix,
    stiffness_matrix,
)
from shapeop.shapes import TETRA_FACES, bounding_box_diagonal
from shapeop.solvers import (
    SolverConfig,
    SolverTrace,
    alternate,
    mfo_descent,
    smacof,
    smacof_matrices,
    smacof_step,
    stress,
)


def hausdorff(P, Q):
    return max(directed_hausdorff(P, Q)[0], directed_hausdorff(Q, P)[0])


def identity_analogy_spec(mesh, X):
    n = mesh.vertex_count
    lengths = metric_from_embedding(mesh, X)
    a, W = mass_matrix(mesh, lengths), stiffness_matrix(mesh, lengths)
    I = np.eye(n)
    return make_shape_from_difference_spec(
        a, W, I, area_difference(a, a, I), conformal_difference(W, W, I)
    )


# stress

def test_stress_zero_for_realizing_embedding(tetra):
    mesh, X = tetra
    assert stress(mesh, np.ones(6), X) == pytest.approx(0.0, abs=1e-30)


def test_stress_summation_oracle(rng):
    mesh, X = random_shape(rng, "ico1")
    lengths = random_valid_metric(mesh, metric_from_embedding(mesh, X), rng)
    oracle = 0.0
    for (i, j), l in zip(mesh.edges, lengths):
        oracle += (np.sqrt(np.sum((X[i] - X[j]) ** 2)) - l) ** 2
    assert stress(mesh, lengths, X) == pytest.approx(oracle, rel=1e-12)


def test_stress_rigid_invariance(rng):
    mesh, X = random_shape(rng, "torus")
    lengths = random_valid_metric(mesh, metric_from_embedding(mesh, X), rng)
    Q = Rotation.random(random_state=11).as_matrix()
    assert stress(mesh, lengths, X @ Q.T + 3.0) == pytest.approx(stress(mesh, lengths, X), rel=1e-10)


# smacof

def test_smacof_matrices_tetra(tetra):
    mesh, _ = tetra
    Z, Zp = smacof_matrices(mesh)
    Zd = Z.toarray()
    np.testing.assert_array_equal(np.diag(Zd), 3.0)
    np.testing.assert_array_equal(Zd[~np.eye(4, dtype=bool)], -1.0)
    np.testing.assert_array_equal(Zd @ np.ones(4), 0.0)
    np.testing.assert_allclose(Zp @ Zd, np.eye(4) - 0.25, atol=1e-12)
    # Z = 4 I - 1 1^T, so Z^+ = (I - 1 1^T / 4) / 4
    np.testing.assert_allclose(Zp, (np.eye(4) - 0.25) / 4, atol=1e-14)


def test_smacof_matrices_penrose(rng):
    mesh, _ = random_shape(rng, "torus")
    Z, Zp = smacof_matrices(mesh)
    n = mesh.vertex_count
    np.testing.assert_allclose(Zp @ Z.toarray(), np.eye(n) - 1 / n, atol=1e-10)
    np.testing.assert_allclose(Z.toarray() @ Zp, np.eye(n) - 1 / n, atol=1e-10)
    assert smacof_matrices(mesh)[1] is Zp  # cached


def test_smacof_disconnected():
    two = np.array(TETRA_FACES + [tuple(v + 4 for v in f) for f in TETRA_FACES])
    with pytest.raises(DisconnectedMesh):
        smacof_matrices(build_mesh(8, two))


def test_smacof_step_fixed_point(rng):
    mesh, X = random_shape(rng, "ico1")
    lengths = metric_from_embedding(mesh, X)
    Y = smacof_step(mesh, lengths, X)
    np.testing.assert_allclose(Y, X - X.mean(axis=0), atol=1e-10)
    assert stress(mesh, lengths, Y) < 1e-20


def test_smacof_step_centers(rng):
    mesh, X = random_shape(rng, "torus")
    lengths = random_valid_metric(mesh, metric_from_embedding(mesh, X), rng)
    Y = smacof_step(mesh, lengths, X + 10.0)
    np.testing.assert_allclose(Y.mean(axis=0), 0.0, atol=1e-10)


def test_smacof_coincident_points(tetra):
    mesh, X = tetra
    X = X.copy()
    X[1] = X[0]
    Y = smacof_step(mesh, np.ones(6), X)
    assert np.all(np.isfinite(Y))


def test_smacof_monotone_random(rng):
    for _ in range(100):
        mesh, X = random_shape(rng, rng.choice(["ico0", "octa", "torus"]))
        lengths = random_valid_metric(mesh, metric_from_embedding(mesh, X), rng, rel=0.3)
        Y = X + rng.standard_normal(X.shape) * 0.3
        before = stress(mesh, lengths, Y)
        Y = smacof_step(mesh, lengths, Y)
        assert stress(mesh, lengths, Y) <= before + 1e-12 * (1 + before)


def test_smacof_perfect_init(rng):
    mesh, X = random_shape(rng, "ico1")
    lengths = metric_from_embedding(mesh, X)
    Y, history = smacof(mesh, lengths, X, 10)
    assert len(history) == 10
    assert max(history) <= 1e-12


def test_smacof_recovers_tetrahedron(rng):
    mesh, _ = shapes.tetrahedron()
    # a zero-stress realization exists: the regular tetrahedron itself
    assert stress(mesh, np.ones(6), shapes.tetrahedron()[1]) < 1e-30
    for seed in range(5):
        X0 = np.random.default_rng(seed).standard_normal((4, 3))
        _, history = smacof(mesh, np.ones(6), X0, 200)
        assert history[-1] < 1e-6
        assert all(b <= a + 1e-12 * (1 + a) for a, b in zip(history, history[1:]))


def test_smacof_tolerance_stops_early(rng):
    mesh, X = random_shape(rng, "ico1")
    lengths = metric_from_embedding(mesh, X)
    _, history = smacof(mesh, lengths, X + 0.01, 50, tol=1e-3)
    assert len(history) < 50


# metric descent

def test_mfo_at_minimum_is_stationary(rng):
    mesh, X = random_shape(rng, "ico1")
    lengths = metric_from_embedding(mesh, X)
    spec = make_shape_from_laplacian_spec(np.eye(mesh.vertex_count), stiffness_matrix(mesh, lengths))
    out, records = mfo_descent(spec, mesh, lengths, SolverConfig(mfo_iterations=5))
    np.testing.assert_allclose(out, lengths, rtol=1e-12)
    assert all(r.energy == 0.0 for r in records)


def test_mfo_reduces_energy(rng):
    mesh, X = random_shape(rng, "ico1")
    l0 = metric_from_embedding(mesh, X)
    target = l0 * (1 + 0.05 * rng.uniform(-1, 1, l0.shape))
    assert validate_metric(mesh, target).valid
    spec = make_shape_from_laplacian_spec(np.eye(mesh.vertex_count), stiffness_matrix(mesh, target))
    E0 = sfo_energy(spec, mesh, l0)
    out, records = mfo_descent(spec, mesh, l0, SolverConfig(mfo_iterations=50))
    assert records[-1].energy <= 0.1 * E0
    energies = [E0] + [r.energy for r in records]
    assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_mfo_adversarial_step(rng):
    mesh, X = random_shape(rng, "torus")
    l0 = metric_from_embedding(mesh, X)
    target = random_valid_metric(mesh, l0, rng, rel=0.2)
    spec = make_shape_from_laplacian_spec(np.eye(mesh.vertex_count), stiffness_matrix(mesh, target))
    config = SolverConfig(mfo_iterations=10, initial_step=1e6)
    out, records = mfo_descent(spec, mesh, l0, config)
    assert validate_metric(mesh, out, config.rel_margin).valid
    assert records[0].halvings > 0


def test_mfo_skips_when_halvings_exhausted(rng):
    mesh, X = random_shape(rng, "torus")
    l0 = metric_from_embedding(mesh, X)
    target = random_valid_metric(mesh, l0, rng, rel=0.2)
    spec = make_shape_from_laplacian_spec(np.eye(mesh.vertex_count), stiffness_matrix(mesh, target))
    config = SolverConfig(mfo_iterations=3, initial_step=1e6, max_halvings=2)
    out, records = mfo_descent(spec, mesh, l0, config)
    np.testing.assert_array_equal(out, l0)
    assert all(r.mu == 0.0 and r.halvings == 2 for r in records)


def test_mfo_invalid_start(tetra):
    mesh, _ = tetra
    lengths = np.ones(6)
    lengths[0] = 2.0
    spec = make_shape_from_laplacian_spec(np.eye(4), stiffness_matrix(mesh, np.ones(6)))
    with pytest.raises(InvalidInitialMetric):
        mfo_descent(spec, mesh, lengths)


# alternating scheme

def test_alternate_identity_analogy(rng):
    mesh, C = random_shape(rng, "ico1")
    spec = identity_analogy_spec(mesh, C)
    X, trace = alternate(spec, mesh, C, SolverConfig(outer_iterations=5, energy_tolerance=0))
    Cc = C - C.mean(axis=0)
    assert hausdorff(X, Cc) <= 1e-3 * bounding_box_diagonal(Cc)


def test_alternate_trace_interleaving(rng):
    mesh, Xs = random_shape(rng, "ico1")
    spec = make_shape_from_laplacian_spec(
        np.eye(mesh.vertex_count), stiffness_matrix(mesh, metric_from_embedding(mesh, Xs))
    )
    config = SolverConfig(outer_iterations=3, mfo_iterations=2, mds_iterations=4, energy_tolerance=0)
    _, trace = alternate(spec, mesh, shapes.perturb(Xs, 0.01, 1), config)
    phases = [(r.outer_iter, r.phase, r.inner_iter) for r in trace]
    expected = []
    for it in (1, 2, 3):
        expected += [(it, "MfO", k) for k in (1, 2)] + [(it, "MDS", k) for k in (1, 2, 3, 4)]
    assert phases == expected


def test_alternate_round_trip(rng):
    mesh, Xs = shapes.icosphere(1)
    Xs = Xs * np.array([1.0, 0.8, 0.6])
    spec = make_shape_from_laplacian_spec(
        np.eye(mesh.vertex_count), stiffness_matrix(mesh, metric_from_embedding(mesh, Xs))
    )
    X0 = shapes.perturb(Xs, 0.01, 3)
    E0 = sfo_energy(spec, mesh, metric_from_embedding(mesh, X0))
    X, trace = alternate(spec, mesh, X0)
    E1 = sfo_energy(spec, mesh, metric_from_embedding(mesh, X))
    assert E1 <= 0.1 * E0
    for it in {r.outer_iter for r in trace}:
        s = [r.stress for r in trace.phase("MDS", it)]
        assert all(b <= a + 1e-12 * (1 + a) for a, b in zip(s, s[1:]))
        e = [r.energy for r in trace.phase("MfO", it)]
        assert all(b <= a for a, b in zip(e, e[1:]))


def test_alternate_early_exit(rng):
    mesh, Xs = random_shape(rng, "ico1")
    spec = make_shape_from_laplacian_spec(
        np.eye(mesh.vertex_count), stiffness_matrix(mesh, metric_from_embedding(mesh, Xs))
    )
    calls = []
    alternate(spec, mesh, shapes.perturb(Xs, 0.01, 5), SolverConfig(energy_tolerance=0.5),
              callback=lambda it, X, E: calls.append(E))
    assert len(calls) < 20
    # stopped on the first outer iteration whose relative change fell below 0.5
    changes = [abs(a - b) / a for a, b in zip(calls, calls[1:])]
    assert changes[-1] < 0.5 and all(c >= 0.5 for c in changes[:-1])


def test_trace_csv_round_trip(tmp_path, rng):
    mesh, Xs = random_shape(rng, "ico0")
    spec = make_shape_from_laplacian_spec(
        np.eye(mesh.vertex_count), stiffness_matrix(mesh, metric_from_embedding(mesh, Xs))
    )
    _, trace = alternate(spec, mesh, shapes.perturb(Xs, 0.01, 0),
                         SolverConfig(outer_iterations=2, energy_tolerance=0))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "outer_iter,phase,inner_iter,energy,stress,mu,halvings"
    back = SolverTrace.from_csv(path)
    assert len(back) == len(trace)
    for a, b in zip(back, trace):
        assert a.phase == b.phase and a.outer_iter == b.outer_iter
        np.testing.assert_array_equal([a.energy, a.stress, a.mu], [b.energy, b.stress, b.mu])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(mds_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(initial_step=-1.0)
    d = SolverConfig()
    assert (d.outer_iterations, d.mfo_iterations, d.mds_iterations) == (20, 5, 10)
    assert d.max_halvings == 40 and d.rel_margin == 1e-7 and d.energy_tolerance == 1e-8
