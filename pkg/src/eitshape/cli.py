"""Command line entry points.

Subcommands: make-data (synthesize a measurement file), invert (run the
reconstruction), check-gradient (finite-difference table for the shape
derivative), forward (solve and dump the states of the true inclusion).
Every command exits 0 on success and prints a one-line machine-parsable
`error: <kind>: <detail>` on failure.
"""

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import gridio
from .adjoint import compute_residuals, solve_adjoints
from .config import load_config
from .errors import DataMismatchError, EitShapeError
from .forward import MeasurementSet, measurement_points, sample_measurements, solve_states, standard_currents
from .inversion import compute_weights, run_inversion, write_history_csv
from .levelset import advect_levelset, conductivity_from_levelset, phantom_to_levelset
from .mesh import build_unit_square_mesh
from .shape_gradient import build_shape_derivative, eval_dj, seeded_smooth_field
from .synthetic import add_noise, generate_measurements


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        return args.handler(config, args)
    except EitShapeError as exc:
        kind = type(exc).__name__.removesuffix("Error").lower() or "error"
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(prog="eitshape", description=__doc__)
    sub = parser.add_subparsers(required=True)

    def common(p, handler):
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--threads", type=int, default=0, help="cap the BLAS/OpenMP thread count")
        p.set_defaults(handler=handler)

    p = sub.add_parser("make-data", help="synthesize measurements and write them as CSV")
    common(p, cmd_make_data)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("invert", help="reconstruct the inclusion from a measurement file")
    common(p, cmd_invert)
    p.add_argument("--data", required=True, help="measurement CSV")
    p.add_argument("--out-dir", required=True, help="directory for history and field dumps")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK files")

    p = sub.add_parser("check-gradient", help="finite-difference check of the shape derivative")
    common(p, cmd_check_gradient)

    p = sub.add_parser("forward", help="solve the states of the true inclusion and dump them")
    common(p, cmd_forward)
    p.add_argument("--out-dir", required=True, help="directory for field dumps and samples")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK files")
    return parser


def _measurements_for(config):
    currents = standard_currents(config.resolved_current_count(), config.ramp_width)
    points = measurement_points(config.spacing)
    clean = generate_measurements(
        config.truth_phantom(),
        currents,
        points,
        truth_resolution=config.resolved_truth_n(),
        sigma0=config.sigma0,
        sigma1=config.sigma1,
        method=config.solver_method,
    )
    return currents, points, add_noise(clean, config.delta, config.seed)


def cmd_make_data(config, args):
    _, points, noisy = _measurements_for(config)
    noisy.to_csv(args.out)
    print(f"written {args.out}: K={noisy.point_count} I={noisy.current_count} "
          f"noise_level={noisy.noise_level:.6g}")
    return 0


def cmd_invert(config, args):
    measurements = MeasurementSet.from_csv(args.data)
    expected = measurement_points(config.spacing)
    if measurements.point_count != expected.shape[0] or not np.allclose(measurements.points, expected):
        raise DataMismatchError(
            f"data has K={measurements.point_count} points but the configuration "
            f"generates K={expected.shape[0]} at spacing {config.spacing}"
        )
    if measurements.current_count != config.resolved_current_count():
        raise DataMismatchError(
            f"data has I={measurements.current_count} currents, configuration "
            f"expects I={config.resolved_current_count()}"
        )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mesh = build_unit_square_mesh(config.n)
    phi_star = phantom_to_levelset(config.truth_phantom(), mesh)

    def on_iteration(iteration, phi, record):
        if config.snapshot_every and iteration % config.snapshot_every == 0:
            gridio.write_grid_text(mesh, phi, out_dir / f"levelset_{iteration:04d}.txt", name="levelset")

    start = time.perf_counter()
    result = run_inversion(config, measurements, mesh=mesh, phi_star=phi_star, on_iteration=on_iteration)
    wall = time.perf_counter() - start

    write_history_csv(result.history, out_dir / "history.csv")
    gridio.write_grid_text(mesh, result.phi, out_dir / "final_levelset.txt", name="levelset")
    if args.vtk:
        sigma = conductivity_from_levelset(result.phi, config.sigma0, config.sigma1, mesh)
        gridio.write_vtk(mesh, out_dir / "final_fields.vtk",
                         point_data={"levelset": result.phi}, cell_data={"sigma": sigma})
    print(f"status={result.status} iterations={result.iterations} "
          f"J={result.final_objective:.6g} E={result.final_error:.6g} wall={wall:.1f}s")
    return 0


def cmd_check_gradient(config, args):
    currents, points, measurements = _measurements_for(config)
    mesh = build_unit_square_mesh(config.n)
    phi = phantom_to_levelset(config.initial_phantom(), mesh)

    def evaluate(field):
        sigma = conductivity_from_levelset(field, config.sigma0, config.sigma1, mesh)
        states, operator = solve_states(mesh, sigma, currents, tol=config.solver_tol,
                                        method=config.solver_method)
        at_points = np.stack([sample_measurements(u, mesh, points) for u in states])
        return sigma, operator, states, at_points

    sigma, operator, states, at_points = evaluate(phi)
    weights = compute_weights(at_points, measurements.values)
    residuals = compute_residuals(at_points, measurements.values, weights)
    adjoints = solve_adjoints(mesh, sigma, residuals, points, operator=operator)
    derivative = build_shape_derivative(mesh, sigma, states, adjoints, residuals, points, phi=phi)
    velocity = seeded_smooth_field(mesh, config.seed, config.alpha1, config.alpha2)
    distributed = eval_dj(derivative, velocity)

    def objective(field):
        _, _, _, at = evaluate(field)
        return compute_residuals(at, measurements.values, weights).objective

    print(f"{'t':>8}  {'fd':>24}  {'distributed':>24}  {'mismatch':>10}")
    for t in (1e-2, 1e-3, 1e-4):
        plus = objective(advect_levelset(phi, velocity, t, mesh))
        minus = objective(advect_levelset(phi, -velocity, t, mesh))
        fd = (plus - minus) / (2.0 * t)
        mismatch = abs(fd - distributed) / max(abs(fd), abs(distributed))
        print(f"{t:8.0e}  {fd:24.16e}  {distributed:24.16e}  {mismatch:9.4%}")
    return 0


def cmd_forward(config, args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    currents = standard_currents(config.resolved_current_count(), config.ramp_width)
    points = measurement_points(config.spacing)
    mesh = build_unit_square_mesh(config.n)
    phi = phantom_to_levelset(config.truth_phantom(), mesh)
    sigma = conductivity_from_levelset(phi, config.sigma0, config.sigma1, mesh)
    states, _ = solve_states(mesh, sigma, currents, tol=config.solver_tol, method=config.solver_method)
    values = np.stack([sample_measurements(u, mesh, points) for u in states])
    for g, u in zip(currents, states):
        gridio.write_grid_text(mesh, u, out_dir / f"state_{g.index}.txt", name=f"potential g_{g.index}")
    MeasurementSet(points=points, values=values).to_csv(out_dir / "samples.csv")
    if args.vtk:
        data = {f"u_{g.index}": u for g, u in zip(currents, states)}
        data["levelset"] = phi
        gridio.write_vtk(mesh, out_dir / "states.vtk", point_data=data, cell_data={"sigma": sigma})
    print(f"written {len(states)} state fields and samples at K={points.shape[0]} points to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
