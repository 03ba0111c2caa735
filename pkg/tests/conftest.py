import sys

import numpy as np
import pytest

from shapeop import shapes
from shapeop.metric import is_valid_metric, metric_from_embedding


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tetra():
    return shapes.tetrahedron()


@pytest.fixture
def ico1():
    return shapes.icosphere(1)


def random_shape(rng, kind=None):
    """A random closed mesh with a jittered embedding (n between 12 and 162)."""
    kind = kind or rng.choice(["ico0", "ico1", "torus", "octa", "ico2"])
    if kind == "ico0":
        mesh, X = shapes.icosahedron()
    elif kind == "ico1":
        mesh, X = shapes.icosphere(1)
    elif kind == "ico2":
        mesh, X = shapes.icosphere(2)
    elif kind == "octa":
        mesh, X = shapes.octahedron()
    else:
        mesh, X = shapes.torus(int(rng.integers(5, 10)), int(rng.integers(4, 7)))
    X = X * rng.uniform(0.5, 1.5, size=3)
    edge = np.mean(metric_from_embedding(mesh, X))
    return mesh, X + 0.08 * edge * rng.standard_normal(X.shape)


def random_valid_metric(mesh, lengths, rng, rel=0.05):
    """Multiplicative jitter of a metric, retried until the result is valid."""
    for _ in range(100):
        cand = lengths * (1.0 + rel * rng.uniform(-1, 1, size=lengths.shape))
        if is_valid_metric(mesh, cand, 1e-3):
            return cand
        rel *= 0.7
    return lengths.copy()


def central_difference(f, lengths, rel_step=1e-6):
    """Central-difference gradient with per-edge step ``rel_step * l_e``."""
    grad = np.empty_like(lengths)
    for e in range(len(lengths)):
        h = rel_step * lengths[e]
        up, down = lengths.copy(), lengths.copy()
        up[e] += h
        down[e] -= h
        grad[e] = (f(up) - f(down)) / (2 * h)
    return grad


def random_general_spec(mesh, rng, lam=None, scale=0.3):
    """Random non-square spec with dense H, K, J in both terms."""
    from shapeop.energy import OperatorTerm, SfoEnergySpec

    n = mesh.vertex_count
    m, l = int(rng.integers(3, 9)), int(rng.integers(3, 9))

    def term():
        return OperatorTerm(
            H=scale * rng.standard_normal((m, n)),
            K=scale * rng.standard_normal((n, l)),
            J=scale * rng.standard_normal((m, l)),
        )

    lam = rng.uniform(0, 1) if lam is None else lam
    return SfoEnergySpec(lam=lam, area_term=term(), stiffness_term=term())


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
