"""The reconstruction loop.

Each iteration solves the states and adjoints for the current level
set, assembles the distributed derivative, smooths it into a descent
field, and advances the interface with an Armijo backtracking search on
the misfit.  On iterations where the periodic signed-distance rebuild
is due, the rebuild is folded into the trial evaluation so the accepted
misfit is the misfit of the actual next iterate and the recorded
history stays non-increasing.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .adjoint import compute_residuals, solve_adjoints
from .errors import DataMismatchError
from .forward import sample_measurements, solve_states, standard_currents
from .levelset import (
    advect_levelset,
    conductivity_from_levelset,
    phantom_to_levelset,
    reinitialize,
    symmetric_difference_error,
)
from .mesh import build_unit_square_mesh
from .shape_gradient import DescentSolver, build_shape_derivative, eval_dj, solve_descent_field

log = logging.getLogger(__name__)

_BOUNDARY_FLOOR = 1e-9


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    error: float
    step: float
    vmax: float


@dataclass
class InversionResult:
    phi: np.ndarray
    history: list
    status: str
    weights: np.ndarray
    descent_values: list = field(default_factory=list)

    @property
    def iterations(self):
        return self.history[-1].iteration if self.history else 0

    @property
    def final_objective(self):
        return self.history[-1].objective

    @property
    def final_error(self):
        return self.history[-1].error


def compute_weights(states_at_points, measured):
    """Inverse initial misfit per current, so the weighted misfit starts
    at half the number of currents.  A current that already matches its
    data exactly is dropped (weight zero) with a warning."""
    states_at_points = np.atleast_2d(np.asarray(states_at_points, dtype=float))
    measured = np.atleast_2d(np.asarray(measured, dtype=float))
    if states_at_points.shape != measured.shape:
        raise DataMismatchError(
            f"state samples {states_at_points.shape} and measurements {measured.shape} disagree"
        )
    misfit = np.sum((states_at_points - measured) ** 2, axis=1)
    weights = np.zeros_like(misfit)
    for i, m in enumerate(misfit):
        if m == 0.0:
            log.warning("current %d already matches its data; weight set to 0", i + 1)
        else:
            weights[i] = 1.0 / m
    return weights


def history_csv_text(history):
    lines = ["iter, J, E, step, Vmax"]
    for rec in history:
        lines.append(
            f"{rec.iteration}, {rec.objective:.17g}, {rec.error:.17g}, {rec.step:.17g}, {rec.vmax:.17g}"
        )
    return "\n".join(lines) + "\n"


def write_history_csv(history, path):
    with open(path, "w") as handle:
        handle.write(history_csv_text(history))


def run_inversion(config, measurements, mesh=None, phi_star=None, on_iteration=None):
    """Reconstruct the inclusion from a measurement set.

    phi_star (nodal level set of the ground truth on the inversion mesh)
    feeds the error column of the history; without it the column is NaN.
    on_iteration(iteration, phi, record) is called after every accepted
    step, e.g. to dump snapshots.
    """
    if mesh is None:
        mesh = build_unit_square_mesh(config.n)
    currents = standard_currents(config.resolved_current_count(), config.ramp_width)
    if measurements.current_count != len(currents):
        raise DataMismatchError(
            f"data has {measurements.current_count} currents, configuration expects {len(currents)}"
        )
    points = measurements.points
    h = mesh.h
    boundary = mesh.boundary_nodes

    def clamp_boundary(phi):
        violated = phi[boundary] < _BOUNDARY_FLOOR
        if np.any(violated):
            log.info("clamping %d boundary level-set values to keep the inclusion interior", int(violated.sum()))
            phi[boundary] = np.maximum(phi[boundary], _BOUNDARY_FLOOR)
        return phi

    def evaluate(phi):
        sigma = conductivity_from_levelset(phi, config.sigma0, config.sigma1, mesh)
        states, operator = solve_states(
            mesh, sigma, currents, tol=config.solver_tol, method=config.solver_method
        )
        at_points = np.stack([sample_measurements(u, mesh, points) for u in states])
        return sigma, operator, states, at_points

    def error_of(phi):
        if phi_star is None:
            return float("nan")
        return symmetric_difference_error(phi, phi_star, mesh)

    phi = phantom_to_levelset(config.initial_phantom(), mesh)
    phi = clamp_boundary(phi)
    sigma, operator, states, at_points = evaluate(phi)
    weights = compute_weights(at_points, measurements.values)
    residuals = compute_residuals(at_points, measurements.values, weights)
    objective = residuals.objective

    history = [IterationRecord(0, objective, error_of(phi), 0.0, 0.0)]
    descent_values = []
    descent_solver = DescentSolver(mesh, config.alpha1, config.alpha2, tol=config.solver_tol)
    status = "max_iterations"
    accepted = 0
    previous_displacement = None

    for iteration in range(1, config.max_iterations + 1):
        adjoints = solve_adjoints(mesh, sigma, residuals, points, operator=operator)
        derivative = build_shape_derivative(mesh, sigma, states, adjoints, residuals, points, phi=phi)
        velocity = solve_descent_field(derivative, mesh, config.alpha1, config.alpha2, solver=descent_solver)
        slope = eval_dj(derivative, velocity)
        descent_values.append(slope)
        vmax = float(np.max(np.hypot(velocity[:, 0], velocity[:, 1])))
        if vmax <= 0.0 or slope >= -1e-15 * max(1.0, objective):
            status = "converged"
            break

        # warm-start below the hard cap: twice the previously accepted
        # displacement, so the search rarely rewalks the whole bracket
        cap = config.max_step_cells * mesh.h
        start = cap if previous_displacement is None else min(cap, 2.0 * previous_displacement)
        reinit_due = config.reinit_period > 0 and (accepted + 1) % config.reinit_period == 0
        step, trial = _line_search(
            config, mesh, phi, velocity, slope, objective, evaluate, measurements, weights,
            clamp_boundary, reinit_due, start,
        )
        if trial is None and reinit_due:
            # the distance rebuild perturbs the misfit; retry the raw step
            step, trial = _line_search(
                config, mesh, phi, velocity, slope, objective, evaluate, measurements, weights,
                clamp_boundary, False, start,
            )
        if trial is None:
            status = "stalled"
            break
        previous_displacement = step * vmax

        phi, sigma, operator, states, at_points, objective = trial
        residuals = compute_residuals(at_points, measurements.values, weights)
        accepted += 1
        record = IterationRecord(iteration, objective, error_of(phi), step, vmax)
        history.append(record)
        if on_iteration is not None:
            on_iteration(iteration, phi, record)

        window = config.plateau_window
        if window > 0 and len(history) > window:
            past = history[-window - 1].objective
            if past - objective <= config.plateau_rtol * abs(past):
                status = "plateau"
                break

    return InversionResult(phi=phi, history=history, status=status, weights=weights, descent_values=descent_values)


def _line_search(config, mesh, phi, velocity, slope, objective, evaluate, measurements, weights,
                 clamp_boundary, reinit_due, start_displacement):
    """Armijo backtracking along the advection; the first step length is
    capped so no node moves farther than a fixed number of cells."""
    vmax = float(np.max(np.hypot(velocity[:, 0], velocity[:, 1])))
    tau = start_displacement / vmax
    while tau >= config.step_tolerance:
        candidate = advect_levelset(phi, velocity, tau, mesh)
        if reinit_due:
            candidate, _ = reinitialize(candidate, mesh)
        candidate = clamp_boundary(candidate)
        sigma, operator, states, at_points = evaluate(candidate)
        trial_objective = compute_residuals(at_points, measurements.values, weights).objective
        if trial_objective <= objective + config.armijo_c * tau * slope:
            return tau, (candidate, sigma, operator, states, at_points, trial_objective)
        tau *= config.backtrack_factor
    return 0.0, None
