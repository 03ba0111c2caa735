"""Command-line entry point.

Exit codes
----------
0
    success
1
    domain or I/O error (message on stderr)
2
    usage error
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .energy import (
    DEFAULT_LAMBDA,
    make_shape_from_difference_spec,
    make_shape_from_laplacian_spec,
    per_vertex_energy,
    sfo_energy,
)
from .errors import DimensionMismatch, ShapeOpError
from .metric import DEFAULT_REL_MARGIN, metric_from_embedding, validate_metric
from .operators import (
    area_difference,
    conformal_difference,
    functional_map_from_point_map,
    lb_eigenbasis,
    mass_matrix,
    mesh_quality_report,
    stiffness_matrix,
)
from .shapes import perturb
from .solvers import SolverConfig, alternate

logger = logging.getLogger("shapeop")


def _add_solver_flags(p):
    d = SolverConfig()
    g = p.add_argument_group("solver")
    g.add_argument("--outer-iterations", type=int, default=d.outer_iterations, metavar="N")
    g.add_argument("--mfo-iterations", type=int, default=d.mfo_iterations, metavar="N")
    g.add_argument("--mds-iterations", type=int, default=d.mds_iterations, metavar="N")
    g.add_argument("--initial-step", type=float, default=None, metavar="MU",
                   help="absolute initial step (default: 1e-2 x mean edge length)")
    g.add_argument("--max-halvings", type=int, default=d.max_halvings)
    g.add_argument("--rel-margin", type=float, default=d.rel_margin)
    g.add_argument("--energy-tolerance", type=float, default=d.energy_tolerance)
    g.add_argument("--perturb", type=float, default=0.0, metavar="SIGMA",
                   help="Gaussian noise on the start shape, in units of its bbox diagonal")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--trace", type=Path, default=None, help="trace CSV (default: <out>_trace.csv)")
    g.add_argument("--energy-out", type=Path, default=None,
                   help="per-vertex energy CSV (default: <out>_energy.csv)")


def _config(args, parser) -> SolverConfig:
    try:
        return SolverConfig(
            outer_iterations=args.outer_iterations,
            mfo_iterations=args.mfo_iterations,
            mds_iterations=args.mds_iterations,
            initial_step=args.initial_step,
            max_halvings=args.max_halvings,
            rel_margin=args.rel_margin,
            energy_tolerance=args.energy_tolerance,
        )
    except ValueError as exc:
        parser.error(str(exc))


def _lambda(value: str) -> float:
    lam = float(value)
    if not 0.0 <= lam <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1], got {value}")
    return lam


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _start_embedding(X, args):
    if args.perturb > 0:
        X = perturb(X, args.perturb, np.random.default_rng(args.seed))
    return X


def _identity_or(path, n_rows, n_cols, what):
    if path is None:
        if n_rows != n_cols:
            raise DimensionMismatch(
                f"identity {what} needs equal vertex counts, got {n_rows} and {n_cols}"
            )
        return np.eye(n_rows)
    return io.read_dense_matrix(path)


def _solve(spec, mesh, C, config, out: Path, trace_path, energy_path):
    E0 = sfo_energy(spec, mesh, metric_from_embedding(mesh, C))
    X, trace = alternate(spec, mesh, C, config)
    lengths = metric_from_embedding(mesh, X)
    E1 = sfo_energy(spec, mesh, lengths)
    io.write_off(out, mesh, X)
    trace.to_csv(trace_path or _sibling(out, "_trace.csv"))
    try:
        eps = per_vertex_energy(spec, mesh, lengths)
    except DimensionMismatch:
        logger.warning("residuals are not square; per-vertex energy not written")
    else:
        io.write_vertex_csv(energy_path or _sibling(out, "_energy.csv"), eps)
    print(f"energy: initial {E0:.10g} final {E1:.10g}")
    print(f"wrote {out}")
    return X


def cmd_shape_from_laplacian(args, parser):
    config = _config(args, parser)
    print(f"config: {config.describe()}")
    mesh, X = io.read_mesh(args.source)
    W_target = io.read_dense_matrix(args.target_stiffness)
    n = mesh.vertex_count
    if W_target.shape != (n, n):
        raise DimensionMismatch(
            f"target stiffness is {W_target.shape[0]} x {W_target.shape[1]}, source has {n} vertices"
        )
    if args.map is not None:
        F = io.read_dense_matrix(args.map)
    elif args.point_map is not None:
        F = functional_map_from_point_map(io.read_point_map(args.point_map, n), n)
    else:
        F = np.eye(n)
    spec = make_shape_from_laplacian_spec(F, W_target)
    _solve(spec, mesh, _start_embedding(X, args), config, args.out, args.trace, args.energy_out)


def _difference_spec(mesh_a, X_a, mesh_b, X_b, mesh_c, X_c, F, G, lam):
    l_a = metric_from_embedding(mesh_a, X_a)
    l_b = metric_from_embedding(mesh_b, X_b)
    l_c = metric_from_embedding(mesh_c, X_c)
    V = area_difference(mass_matrix(mesh_a, l_a), mass_matrix(mesh_b, l_b), F)
    R = conformal_difference(stiffness_matrix(mesh_a, l_a), stiffness_matrix(mesh_b, l_b), F)
    return make_shape_from_difference_spec(
        mass_matrix(mesh_c, l_c), stiffness_matrix(mesh_c, l_c), G, V, R, lam
    )


def cmd_analogy(args, parser):
    config = _config(args, parser)
    print(f"config: lambda={args.lam}, {config.describe()}")
    mesh_a, X_a = io.read_mesh(args.A)
    mesh_b, X_b = io.read_mesh(args.B)
    mesh_c, X_c = io.read_mesh(args.C)
    na, nb, nc = mesh_a.vertex_count, mesh_b.vertex_count, mesh_c.vertex_count
    if args.identity_map:
        F = _identity_or(None, nb, na, "map A->B")
        G = _identity_or(None, nc, na, "map A->C")
    else:
        F = _identity_or(args.map_ab, nb, na, "map A->B")
        G = _identity_or(args.map_cx, nc, na, "map A->C")
    spec = _difference_spec(mesh_a, X_a, mesh_b, X_b, mesh_c, X_c, F, G, args.lam)
    _solve(spec, mesh_c, _start_embedding(X_c, args), config, args.out, args.trace,
           args.energy_out)


def cmd_exaggerate(args, parser):
    config = _config(args, parser)
    print(f"config: lambda={args.lam}, rounds={args.rounds}, {config.describe()}")
    mesh_a, X_a = io.read_mesh(args.A)
    mesh_b, X_b = io.read_mesh(args.B)
    F = _identity_or(args.map, mesh_b.vertex_count, mesh_a.vertex_count, "map A->B")
    # C shares B's mesh in every round, so the map A->C is the map A->B
    current = _start_embedding(X_b, args)
    for r in range(1, args.rounds + 1):
        spec = _difference_spec(mesh_a, X_a, mesh_b, X_b, mesh_b, current, F, F, args.lam)
        out = Path(f"{args.out_prefix}_{r}.off")
        current = _solve(spec, mesh_b, current, config, out, None, None)


def cmd_diagnose(args, parser):
    print(f"config: rel_margin={DEFAULT_REL_MARGIN:g}")
    mesh, X = io.read_mesh(args.mesh)
    if args.metric is not None:
        lengths = io.read_edge_csv(args.metric, mesh)
        validity = validate_metric(mesh, lengths)
        if not validity.valid:
            print(f"invalid metric: {len(validity.violations)} faces violate the triangle inequality")
            for f, margin in validity.violations[:20]:
                print(f"  face {f}: slack {margin:.6g}")
            return 1
    else:
        lengths = metric_from_embedding(mesh, X)
    report = mesh_quality_report(mesh, lengths)
    print(f"vertices: {mesh.vertex_count} edges: {mesh.n_edges} faces: {mesh.n_faces}")
    print(report.as_text())
    if args.csv is not None:
        rows = ["kind,index\n"]
        rows += [f"negative_weight_edge,{e}\n" for e in report.negative_weight_edges]
        rows += [f"obtuse_face,{f}\n" for f in report.obtuse_faces]
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("".join(rows))
    return 0


def cmd_operators(args, parser):
    print(f"config: emit={args.emit}" + (f", k={args.k}" if args.emit == "eigs" else ""))
    mesh, X = io.read_mesh(args.mesh)
    lengths = metric_from_embedding(mesh, X)
    if args.emit == "mass":
        io.write_vertex_csv(args.out, mass_matrix(mesh, lengths))
    elif args.emit == "stiffness":
        io.write_dense_matrix(args.out, stiffness_matrix(mesh, lengths))
    else:
        if args.k is None:
            parser.error("--emit eigs requires --k")
        if not 1 <= args.k <= mesh.vertex_count:
            parser.error(f"--k must lie in [1, {mesh.vertex_count}]")
        phi, evals = lb_eigenbasis(mesh, lengths, args.k)
        io.write_dense_matrix(args.out, phi)
        io.write_dense_matrix(_sibling(Path(args.out), "_evals.txt"), evals[:, None])
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapeop", description="Recover triangle-mesh embeddings from intrinsic operators."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape-from-laplacian", help="deform a mesh toward a target stiffness matrix")
    p.add_argument("--source", type=Path, required=True)
    p.add_argument("--target-stiffness", type=Path, required=True)
    m = p.add_mutually_exclusive_group()
    m.add_argument("--map", type=Path, help="dense functional map file")
    m.add_argument("--point-map", type=Path, help="point map file of 'y x' lines")
    m.add_argument("--identity-map", action="store_true", help="identity map (the default)")
    p.add_argument("--out", type=Path, required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_shape_from_laplacian)

    p = sub.add_parser("analogy", help="synthesize X so that C -> X mirrors A -> B")
    p.add_argument("--A", type=Path, required=True)
    p.add_argument("--B", type=Path, required=True)
    p.add_argument("--C", type=Path, required=True)
    p.add_argument("--map-ab", type=Path, help="functional map A -> B, n_B x n_A (default identity)")
    m = p.add_mutually_exclusive_group()
    m.add_argument("--map-cx", type=Path, help="functional map A -> C, n_C x n_A (default identity)")
    m.add_argument("--identity-map", action="store_true", help="use identity for both maps")
    p.add_argument("--lambda", dest="lam", type=_lambda, default=DEFAULT_LAMBDA)
    p.add_argument("--out", type=Path, required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_analogy)

    p = sub.add_parser("exaggerate", help="repeatedly apply the A -> B difference to B")
    p.add_argument("--A", type=Path, required=True)
    p.add_argument("--B", type=Path, required=True)
    p.add_argument("--map", type=Path, help="functional map A -> B, n_B x n_A (default identity)")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=_lambda, default=DEFAULT_LAMBDA)
    p.add_argument("--out-prefix", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_exaggerate)

    p = sub.add_parser("diagnose", help="report obtuse faces and negative cotangent weights")
    p.add_argument("--mesh", type=Path, required=True)
    p.add_argument("--metric", type=Path)
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("operators", help="export an operator or a truncated eigenbasis")
    p.add_argument("--mesh", type=Path, required=True)
    p.add_argument("--emit", choices=["mass", "stiffness", "eigs"], required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_operators)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "rounds", 1) < 1:
        parser.error("--rounds must be at least 1")
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args, parser) or 0
    except (ShapeOpError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
