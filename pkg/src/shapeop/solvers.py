"""Safeguarded metric descent and SMACOF embedding, coupled by an
alternating scheme."""
from __future__ import annotations

import csv
import logging
import weakref
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .energy import SfoEnergySpec, sfo_energy, sfo_gradient
from .errors import DimensionMismatch, DisconnectedMesh, InvalidInitialMetric
from .mesh import Mesh
from .metric import DEFAULT_REL_MARGIN, is_valid_metric, metric_from_embedding
from .operators import DEFAULT_PINV_TOL, pseudoinverse

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "SolverTrace",
    "stress",
    "smacof_matrices",
    "smacof_step",
    "smacof",
    "mfo_descent",
    "alternate",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration counts and step-size policy.

    ``initial_step`` of None means ``initial_step_factor * mean(l)`` for the
    metric entering each descent phase. ``energy_tolerance = 0`` disables the
    early exit of :func:`alternate`, and ``mds_tolerance = 0`` (the default)
    runs every SMACOF iteration.
    """

    outer_iterations: int = 20
    mfo_iterations: int = 5
    mds_iterations: int = 10
    initial_step: float | None = None
    initial_step_factor: float = 1e-2
    max_halvings: int = 40
    rel_margin: float = DEFAULT_REL_MARGIN
    energy_tolerance: float = 1e-8
    mds_tolerance: float = 0.0

    def __post_init__(self):
        for name in ("outer_iterations", "mfo_iterations", "mds_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be nonnegative")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not self.initial_step_factor > 0:
            raise ValueError("initial_step_factor must be positive")
        for name in ("rel_margin", "energy_tolerance", "mds_tolerance"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def describe(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in asdict(self).items())


class TraceRecord(NamedTuple):
    outer_iter: int
    phase: str
    inner_iter: int
    energy: float
    stress: float
    mu: float
    halvings: int


@dataclass
class SolverTrace:
    """Interleaved per-iteration history of a solve.

    Descent rows carry the energy after the step and the step size used
    (``mu = 0`` marks a skipped step); SMACOF rows carry the stress.
    """

    records: list[TraceRecord] = field(default_factory=list)

    columns = TraceRecord._fields

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def extend(self, records):
        self.records.extend(records)

    def phase(self, name: str, outer_iter: int | None = None) -> list[TraceRecord]:
        return [
            r
            for r in self.records
            if r.phase == name and (outer_iter is None or r.outer_iter == outer_iter)
        ]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for r in self.records:
                writer.writerow(
                    [
                        r.outer_iter,
                        r.phase,
                        r.inner_iter,
                        f"{r.energy:.17g}",
                        f"{r.stress:.17g}",
                        f"{r.mu:.17g}",
                        r.halvings,
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "SolverTrace":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            records = [
                TraceRecord(
                    int(row["outer_iter"]),
                    row["phase"],
                    int(row["inner_iter"]),
                    float(row["energy"]),
                    float(row["stress"]),
                    float(row["mu"]),
                    int(row["halvings"]),
                )
                for row in reader
            ]
        return cls(records)


def _check_embedding(mesh: Mesh, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != mesh.vertex_count:
        raise DimensionMismatch(
            f"embedding has shape {X.shape}, mesh has {mesh.vertex_count} vertices"
        )
    return X


def stress(mesh: Mesh, lengths, X) -> float:
    """Sum over edges of squared differences between embedded and target lengths."""
    X = _check_embedding(mesh, X)
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (mesh.n_edges,):
        raise DimensionMismatch("metric does not match the mesh edges")
    i, j = mesh.edges.T
    d = np.linalg.norm(X[i] - X[j], axis=1)
    return float(np.sum((d - lengths) ** 2))


_smacof_cache: "weakref.WeakKeyDictionary[Mesh, tuple]" = weakref.WeakKeyDictionary()


def smacof_matrices(mesh: Mesh, rel_tol: float = DEFAULT_PINV_TOL):
    """Graph Laplacian ``Z`` of the edge graph and its dense pseudoinverse.

    Both depend only on connectivity and are cached per mesh.
    """
    cached = _smacof_cache.get(mesh)
    if cached is not None and cached[0] == rel_tol:
        return cached[1], cached[2]
    if not mesh.is_connected:
        raise DisconnectedMesh("SMACOF needs a connected edge graph")
    adj = mesh.adjacency
    Z = (sparse.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj).tocsr()
    Z_pinv = pseudoinverse(Z, rel_tol)
    _smacof_cache[mesh] = (rel_tol, Z, Z_pinv)
    return Z, Z_pinv


def _guttman_matrix(mesh: Mesh, lengths, X) -> sparse.csr_matrix:
    i, j = mesh.edges.T
    d = np.linalg.norm(X[i] - X[j], axis=1)
    b = np.zeros_like(d)
    nz = d > 0
    b[nz] = -lengths[nz] / d[nz]
    n = mesh.vertex_count
    rowsum = np.bincount(i, weights=b, minlength=n) + np.bincount(j, weights=b, minlength=n)
    diag = np.arange(n)
    B = sparse.coo_matrix(
        (np.r_[b, b, -rowsum], (np.r_[i, j, diag], np.r_[j, i, diag])), shape=(n, n)
    )
    return B.tocsr()


def smacof_step(mesh: Mesh, lengths, X, Z_pinv=None) -> np.ndarray:
    """One Guttman transform ``X <- Z^+ B(X) X``; the result is mean-centered."""
    X = _check_embedding(mesh, X)
    lengths = np.asarray(lengths, dtype=float)
    if Z_pinv is None:
        Z_pinv = smacof_matrices(mesh)[1]
    return Z_pinv @ (_guttman_matrix(mesh, lengths, X) @ X)


def smacof(mesh: Mesh, lengths, X0, n_iter: int = 10, Z_pinv=None, tol: float = 0.0):
    """Run SMACOF from ``X0``.

    Returns the embedding and the list of stresses after each iteration.
    With ``tol > 0`` the loop stops once the relative stress decrease of a
    step falls below ``tol``.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    X = _check_embedding(mesh, X0)
    lengths = np.asarray(lengths, dtype=float)
    if Z_pinv is None:
        Z_pinv = smacof_matrices(mesh)[1]
    history = []
    previous = stress(mesh, lengths, X) if tol > 0 else None
    for _ in range(n_iter):
        X = smacof_step(mesh, lengths, X, Z_pinv)
        current = stress(mesh, lengths, X)
        history.append(current)
        if tol > 0:
            if previous - current <= tol * previous:
                break
            previous = current
    return X, history


def mfo_descent(spec: SfoEnergySpec, mesh: Mesh, l0, config: SolverConfig | None = None,
                outer_iter: int = 0, callback=None):
    """Safeguarded gradient descent on the edge lengths.

    Each step starts from the full initial step and halves it until the
    proposal is a valid metric (at ``config.rel_margin``) whose energy does
    not exceed the current one. When ``max_halvings`` is exhausted the step is
    skipped. The returned metric is always valid and the recorded energies
    never increase.

    ``callback(k, lengths, energy)`` is invoked after step ``k``.

    Returns
    -------
    lengths : ndarray
    records : list of TraceRecord
    """
    config = config or SolverConfig()
    lengths = np.array(l0, dtype=float)
    if not is_valid_metric(mesh, lengths, config.rel_margin):
        raise InvalidInitialMetric("initial metric violates the strong triangle inequality")
    mu0 = config.initial_step
    if mu0 is None:
        mu0 = config.initial_step_factor * float(np.mean(lengths))

    records = []
    energy = sfo_energy(spec, mesh, lengths)
    for k in range(1, config.mfo_iterations + 1):
        grad = sfo_gradient(spec, mesh, lengths)
        mu = mu0
        halvings = 0
        while True:
            proposal = lengths - mu * grad
            if is_valid_metric(mesh, proposal, config.rel_margin):
                trial = sfo_energy(spec, mesh, proposal)
                if trial <= energy:
                    lengths, energy = proposal, trial
                    break
            if halvings == config.max_halvings:
                logger.debug("descent step %d skipped after %d halvings", k, halvings)
                mu = 0.0
                break
            mu *= 0.5
            halvings += 1
        records.append(TraceRecord(outer_iter, "MfO", k, energy, np.nan, mu, halvings))
        if callback is not None:
            callback(k, lengths, energy)
    return lengths, records


def alternate(spec: SfoEnergySpec, mesh: Mesh, C, config: SolverConfig | None = None,
              callback=None):
    """Alternate metric descent and SMACOF, starting from the embedding ``C``.

    Each outer iteration improves the metric of the current embedding by
    :func:`mfo_descent`. The result is then re-embedded with :func:`smacof`
    warm-started at the current embedding. The loop ends after
    ``config.outer_iterations`` or when the energy of the embedding changes by
    less than ``energy_tolerance`` relative to the previous outer iteration.

    ``callback(outer_iter, X, energy)`` is invoked after each outer iteration.

    Returns
    -------
    X : ndarray, shape (n, 3)
    trace : SolverTrace
    """
    config = config or SolverConfig()
    X = _check_embedding(mesh, C).copy()
    _, Z_pinv = smacof_matrices(mesh)
    trace = SolverTrace()
    previous = sfo_energy(spec, mesh, metric_from_embedding(mesh, X))
    for it in range(1, config.outer_iterations + 1):
        lengths = metric_from_embedding(mesh, X)
        lengths, records = mfo_descent(spec, mesh, lengths, config, outer_iter=it)
        trace.extend(records)
        X, stresses = smacof(
            mesh, lengths, X, config.mds_iterations, Z_pinv, config.mds_tolerance
        )
        trace.extend(
            TraceRecord(it, "MDS", k, np.nan, s, np.nan, 0)
            for k, s in enumerate(stresses, start=1)
        )
        current = sfo_energy(spec, mesh, metric_from_embedding(mesh, X))
        logger.info("outer %d: energy %.6g, stress %.6g", it, current, stresses[-1])
        if callback is not None:
            callback(it, X, current)
        if config.energy_tolerance > 0:
            if previous == 0.0 or abs(previous - current) < config.energy_tolerance * previous:
                break
        previous = current
    return X, trace
