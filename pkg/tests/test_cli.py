import subprocess
import sys

import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff

from shapeop import io, shapes
from shapeop.cli import main
from shapeop.metric import metric_from_embedding
from shapeop.operators import stiffness_matrix
from shapeop.shapes import bounding_box_diagonal
from shapeop.solvers import SolverTrace


def hausdorff(P, Q):
    return max(directed_hausdorff(P, Q)[0], directed_hausdorff(Q, P)[0])


def energies(stdout):
    line = [s for s in stdout.splitlines() if s.startswith("energy:")][-1]
    tokens = line.split()
    return float(tokens[2]), float(tokens[4])


@pytest.fixture
def ellipsoid(tmp_path):
    mesh, X = shapes.icosphere(1)
    X = X * np.array([1.0, 0.8, 0.6])
    path = tmp_path / "A.off"
    io.write_off(path, mesh, X)
    W = tmp_path / "W.txt"
    io.write_dense_matrix(W, stiffness_matrix(mesh, metric_from_embedding(mesh, X)))
    return mesh, X, path, W


@pytest.fixture
def blob(tmp_path):
    # a second shape on the same icosphere connectivity
    mesh, X = shapes.icosphere(1)
    X = X * (1 + 0.15 * np.sin(3 * X[:, [2]])) * np.array([1.2, 1.0, 0.9])
    path = tmp_path / "B.off"
    io.write_off(path, mesh, X)
    return mesh, X, path


def test_self_reconstruction(tmp_path, ellipsoid, capsys):
    _, _, A, W = ellipsoid
    out = tmp_path / "X.off"
    code = main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W),
                 "--identity-map", "--out", str(out), "--perturb", "0.01", "--seed", "1"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert stdout.startswith("config: outer_iterations=20, mfo_iterations=5, mds_iterations=10")
    E0, E1 = energies(stdout)
    assert E0 > 0 and E1 <= 0.1 * E0
    assert out.exists()
    trace = SolverTrace.from_csv(tmp_path / "X_trace.csv")
    assert {r.phase for r in trace} == {"MfO", "MDS"}
    assert len(io.read_vertex_csv(tmp_path / "X_energy.csv")) == 42


def test_point_map_input(tmp_path, ellipsoid, capsys):
    mesh, _, A, W = ellipsoid
    t = tmp_path / "t.txt"
    io.write_point_map(t, np.arange(mesh.vertex_count))
    code = main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W),
                 "--point-map", str(t), "--out", str(tmp_path / "X.off"),
                 "--outer-iterations", "1"])
    assert code == 0
    E0, E1 = energies(capsys.readouterr().out)
    assert E0 == 0.0 and E1 < 1e-20


def test_missing_out_is_usage_error(ellipsoid):
    _, _, A, W = ellipsoid
    with pytest.raises(SystemExit) as info:
        main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W)])
    assert info.value.code == 2


def test_mismatched_stiffness(tmp_path, ellipsoid, capsys):
    _, _, A, _ = ellipsoid
    W = tmp_path / "small.txt"
    io.write_dense_matrix(W, np.eye(5))
    code = main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W),
                 "--out", str(tmp_path / "X.off")])
    assert code == 1
    assert "DimensionMismatch" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, ellipsoid):
    _, _, _, W = ellipsoid
    code = main(["shape-from-laplacian", "--source", str(tmp_path / "nope.off"),
                 "--target-stiffness", str(W), "--out", str(tmp_path / "X.off")])
    assert code == 1


@pytest.mark.parametrize("lam", ["-0.1", "1.5", "abc"])
def test_lambda_out_of_range(tmp_path, ellipsoid, lam):
    _, _, A, _ = ellipsoid
    with pytest.raises(SystemExit) as info:
        main(["analogy", "--A", str(A), "--B", str(A), "--C", str(A), "--identity-map",
              "--lambda", lam, "--out", str(tmp_path / "X.off")])
    assert info.value.code == 2


def test_bad_solver_flag_is_usage_error(tmp_path, ellipsoid):
    _, _, A, W = ellipsoid
    with pytest.raises(SystemExit) as info:
        main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W),
              "--out", str(tmp_path / "X.off"), "--mds-iterations", "0"])
    assert info.value.code == 2


def test_identity_analogy(tmp_path, ellipsoid, blob, capsys):
    _, X_c, C, _ = ellipsoid
    _, _, A = blob
    out = tmp_path / "X.off"
    code = main(["analogy", "--A", str(A), "--B", str(A), "--C", str(C), "--identity-map",
                 "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    # lambda defaults to one half
    assert stdout.startswith("config: lambda=0.5,")
    _, X = io.read_off(out)
    Cc = X_c - X_c.mean(axis=0)
    assert hausdorff(X, Cc) <= 1e-3 * bounding_box_diagonal(Cc)


def test_analogy_moves_toward_b(tmp_path, ellipsoid, blob, capsys):
    # A = C, so X should approach B up to a rigid motion
    _, X_a, A, _ = ellipsoid
    _, X_b, B = blob
    code = main(["analogy", "--A", str(A), "--B", str(B), "--C", str(A), "--identity-map",
                 "--out", str(tmp_path / "X.off")])
    assert code == 0
    E0, E1 = energies(capsys.readouterr().out)
    assert E1 < 0.1 * E0


def test_exaggerate_files(tmp_path, ellipsoid, blob):
    _, _, A, _ = ellipsoid
    _, X_b, B = blob
    prefix = tmp_path / "ex"
    code = main(["exaggerate", "--A", str(B), "--B", str(B), "--rounds", "3",
                 "--out-prefix", str(prefix)])
    assert code == 0
    outs = sorted(tmp_path.glob("ex_*.off"))
    assert [p.name for p in outs] == ["ex_1.off", "ex_2.off", "ex_3.off"]
    Bc = X_b - X_b.mean(axis=0)
    for p in outs:
        _, X = io.read_off(p)
        assert hausdorff(X, Bc) <= 1e-3 * bounding_box_diagonal(Bc)


def test_exaggerate_one_round_is_analogy(tmp_path, ellipsoid, blob):
    _, _, A, _ = ellipsoid
    _, _, B = blob
    common = ["--outer-iterations", "3"]
    assert main(["exaggerate", "--A", str(A), "--B", str(B), "--rounds", "1",
                 "--out-prefix", str(tmp_path / "ex")] + common) == 0
    assert main(["analogy", "--A", str(A), "--B", str(B), "--C", str(B), "--identity-map",
                 "--out", str(tmp_path / "an.off")] + common) == 0
    assert (tmp_path / "ex_1.off").read_bytes() == (tmp_path / "an.off").read_bytes()


def test_exaggerate_rounds_validated(tmp_path, blob):
    _, _, B = blob
    with pytest.raises(SystemExit) as info:
        main(["exaggerate", "--A", str(B), "--B", str(B), "--rounds", "0",
              "--out-prefix", str(tmp_path / "ex")])
    assert info.value.code == 2


def test_diagnose_tetra(tmp_path, capsys):
    path = tmp_path / "t.off"
    io.write_off(path, *shapes.tetrahedron())
    assert main(["diagnose", "--mesh", str(path)]) == 0
    stdout = capsys.readouterr().out
    assert stdout.startswith("config:")
    assert "negative cotangent weights: 0" in stdout
    assert "obtuse faces: 0" in stdout


def test_diagnose_obtuse(tmp_path, capsys):
    # a tetrahedron built on a flat, wide base triangle
    mesh, _ = shapes.tetrahedron()
    X = np.array([[0, 0, 0], [2, 0, 0], [1, 0.1, 0], [1, 0.05, 0.5]], dtype=float)
    # oracle: a corner is obtuse when its two edge vectors have negative dot product
    obtuse = sum(
        any(np.dot(X[f[(c + 1) % 3]] - X[f[c]], X[f[(c + 2) % 3]] - X[f[c]]) < 0 for c in range(3))
        for f in mesh.faces
    )
    assert obtuse >= 1
    path = tmp_path / "o.off"
    io.write_off(path, mesh, X)
    csv = tmp_path / "report.csv"
    assert main(["diagnose", "--mesh", str(path), "--csv", str(csv)]) == 0
    stdout = capsys.readouterr().out
    count = int(stdout.split("obtuse faces:")[1].split()[0])
    assert count == obtuse
    rows = csv.read_text().splitlines()
    assert rows[0] == "kind,index"
    assert sum(r.startswith("obtuse_face,") for r in rows) == count


def test_diagnose_invalid_metric(tmp_path, capsys):
    mesh, X = shapes.tetrahedron()
    path = tmp_path / "t.off"
    io.write_off(path, mesh, X)
    lengths = np.ones(6)
    lengths[0] = 3.0
    metric = tmp_path / "l.csv"
    io.write_edge_csv(metric, mesh, lengths)
    assert main(["diagnose", "--mesh", str(path), "--metric", str(metric)]) == 1
    assert "invalid metric" in capsys.readouterr().out


def test_operators_tetra_stiffness(tmp_path):
    path = tmp_path / "t.off"
    io.write_off(path, *shapes.tetrahedron())
    out = tmp_path / "W.txt"
    assert main(["operators", "--mesh", str(path), "--emit", "stiffness", "--out", str(out)]) == 0
    W = io.read_dense_matrix(out)
    off = W[~np.eye(4, dtype=bool)]
    np.testing.assert_allclose(off, 1 / np.sqrt(3), rtol=1e-14)
    np.testing.assert_allclose(W @ np.ones(4), 0.0, atol=1e-14)


def test_operators_reload_rows_sum_to_zero(tmp_path, blob):
    _, _, B = blob
    out = tmp_path / "W.txt"
    assert main(["operators", "--mesh", str(B), "--emit", "stiffness", "--out", str(out)]) == 0
    W = io.read_dense_matrix(out)
    np.testing.assert_allclose(W @ np.ones(len(W)), 0.0, atol=1e-12 * np.abs(W).max())


def test_operators_mass_and_eigs(tmp_path, blob):
    mesh, X, B = blob
    assert main(["operators", "--mesh", str(B), "--emit", "mass", "--out",
                 str(tmp_path / "a.csv")]) == 0
    a = io.read_vertex_csv(tmp_path / "a.csv", mesh.vertex_count)
    total = sum(0.5 * np.linalg.norm(np.cross(X[j] - X[i], X[k] - X[i])) for i, j, k in mesh.faces)
    assert a.sum() == pytest.approx(total, rel=1e-12)
    assert main(["operators", "--mesh", str(B), "--emit", "eigs", "--k", "5", "--out",
                 str(tmp_path / "phi.txt")]) == 0
    assert io.read_dense_matrix(tmp_path / "phi.txt").shape == (42, 5)
    evals = io.read_dense_matrix(tmp_path / "phi_evals.txt").ravel()
    assert abs(evals[0]) < 1e-10 and np.all(np.diff(evals) >= -1e-12)


def test_operators_k_too_large(tmp_path):
    path = tmp_path / "t.off"
    io.write_off(path, *shapes.tetrahedron())
    with pytest.raises(SystemExit) as info:
        main(["operators", "--mesh", str(path), "--emit", "eigs", "--k", "5",
              "--out", str(tmp_path / "phi.txt")])
    assert info.value.code == 2


def test_seeded_runs_are_bitwise_reproducible(tmp_path, ellipsoid):
    _, _, A, W = ellipsoid
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / f"{name}.off"
        assert main(["shape-from-laplacian", "--source", str(A), "--target-stiffness", str(W),
                     "--out", str(out), "--perturb", "0.02", "--seed", "7",
                     "--outer-iterations", "3"]) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    t1 = (tmp_path / "r1_trace.csv").read_bytes()
    assert t1 == (tmp_path / "r2_trace.csv").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shapeop", "operators"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage:" in proc.stderr
