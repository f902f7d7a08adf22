"""Measurement residuals and the adjoint problem with point sources.

One adjoint per current: the summed misfit decouples, so each adjoint
solves the same operator as the state against a right-hand side of
negative residual-weighted point loads.
"""

from dataclasses import dataclass

import numpy as np

from . import fem
from .errors import DataMismatchError


@dataclass
class ResidualSet:
    """Residuals r[i, k] = u_i(x_k) - h_i(x_k) with per-current weights."""

    residuals: np.ndarray  # (I, K)
    weights: np.ndarray  # (I,)
    objective: float

    @property
    def current_count(self):
        return self.residuals.shape[0]


def compute_residuals(states_at_points, measured, weights=None):
    """Residuals and the weighted half sum of squares they generate."""
    states_at_points = np.atleast_2d(np.asarray(states_at_points, dtype=float))
    measured = np.atleast_2d(np.asarray(measured, dtype=float))
    if states_at_points.shape != measured.shape:
        raise DataMismatchError(
            f"state samples {states_at_points.shape} and measurements {measured.shape} disagree"
        )
    if weights is None:
        weights = np.ones(states_at_points.shape[0])
    weights = np.asarray(weights, dtype=float)
    residuals = states_at_points - measured
    objective = 0.5 * float(np.sum(weights * np.sum(residuals**2, axis=1)))
    return ResidualSet(residuals=residuals, weights=weights, objective=objective)


def solve_adjoint(mesh, sigma, residuals, points, operator=None, tol=1e-10, method="auto"):
    """Adjoint potential for one current: same operator as the state,
    right-hand side -sum_k r_k (point load at x_k); zero on grounded nodes."""
    if operator is None:
        matrix = fem.assemble_scalar_stiffness(mesh, sigma)
        operator = fem.DirichletSolver(matrix, mesh.dirichlet_nodes, method=method, tol=tol)
    rhs = -fem.assemble_point_loads(mesh, zip(points, np.asarray(residuals, dtype=float)))
    return operator.solve(rhs)


def solve_adjoints(mesh, sigma, residual_set, points, operator=None, tol=1e-10, method="auto"):
    """One adjoint per current against a shared factorization."""
    if operator is None:
        matrix = fem.assemble_scalar_stiffness(mesh, sigma)
        operator = fem.DirichletSolver(matrix, mesh.dirichlet_nodes, method=method, tol=tol)
    return [solve_adjoint(mesh, sigma, r, points, operator=operator) for r in residual_set.residuals]
