"""P1 assembly and constrained sparse solves.

Stiffness, mass, boundary-flux and point-load assembly are vectorized
over elements/edges; Dirichlet conditions are eliminated symmetrically
(reduce to free unknowns, lift the prescribed values into the right
hand side) so the reduced operator stays symmetric positive definite.
Solves go through a sparse Cholesky-like LU factorization by default
and through Jacobi-preconditioned conjugate gradients on request; both
enforce the same relative-residual contract.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverError
from .mesh import locate_point

#: Dof count above which the automatic method switches to CG.
_DIRECT_LIMIT = 300_000


@dataclass
class SparseSystem:
    """Symmetric sparse system with node (or node-component) constraints."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray  # dof indices with prescribed values
    values: np.ndarray  # prescribed values, same length


def assemble_scalar_stiffness(mesh, sigma):
    """Stiffness matrix of the weighted Laplacian with element weights sigma."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise InvalidParameterError("conductivity must be positive on every element")
    local = np.einsum("e,eik,ejk->eij", mesh.areas * sigma, mesh.grads, mesh.grads)
    return _scatter(mesh, local)


def assemble_mass(mesh):
    """Consistent P1 mass matrix."""
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = mesh.areas[:, None, None] * base[None, :, :]
    return _scatter(mesh, local)


def _scatter(mesh, local):
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.node_count, mesh.node_count))
    return mat.tocsr()


def assemble_boundary_flux(mesh, g):
    """Load vector for a boundary flux on the non-grounded boundary.

    g is evaluated side-wise at edge endpoints (two-point trapezoid rule,
    exact for P1 test functions against edgewise-constant fluxes);
    grounded edges contribute nothing.  Instead of a pattern object, g
    may be an array of per-edge endpoint values with one row per
    boundary edge (in mesh.boundary_edges order).
    """
    load = np.zeros(mesh.node_count)
    active = ~mesh.boundary_dirichlet
    edges = mesh.boundary_edges[active]
    a = mesh.nodes[edges[:, 0]]
    b = mesh.nodes[edges[:, 1]]
    lengths = np.hypot(*(b - a).T)
    if isinstance(g, np.ndarray):
        values = g[active]
        np.add.at(load, edges[:, 0], 0.5 * lengths * values[:, 0])
        np.add.at(load, edges[:, 1], 0.5 * lengths * values[:, 1])
        return load
    sides = mesh.boundary_sides[active]
    for side in np.unique(sides):
        m = sides == side
        ga = g.value(side, _along(side, a[m]))
        gb = g.value(side, _along(side, b[m]))
        np.add.at(load, edges[m, 0], 0.5 * lengths[m] * ga)
        np.add.at(load, edges[m, 1], 0.5 * lengths[m] * gb)
    return load


def _along(side, points):
    return points[:, 1] if side in ("left", "right") else points[:, 0]


def assemble_volume_source(mesh, f_elem):
    """Load vector of an element-wise constant source (one third per vertex)."""
    f_elem = np.asarray(f_elem, dtype=float)
    load = np.zeros(mesh.node_count)
    contrib = (mesh.areas * f_elem / 3.0)[:, None].repeat(3, axis=1)
    np.add.at(load, mesh.triangles.ravel(), contrib.ravel())
    return load


def assemble_point_loads(mesh, loads):
    """Load vector of weighted point sources: hat-function point evaluation."""
    vec = np.zeros(mesh.node_count)
    for point, weight in loads:
        elem, lam = locate_point(mesh, point)
        vec[mesh.triangles[elem]] += weight * lam
    return vec


def assemble_vector_helmholtz(mesh, alpha1, alpha2):
    """Block operator alpha1 * (component-wise stiffness) + alpha2 * mass.

    Components are uncoupled; dofs are ordered [all x, then all y].
    """
    if alpha1 < 0 or alpha2 <= 0:
        raise InvalidParameterError(f"need alpha1 >= 0 and alpha2 > 0, got {alpha1}, {alpha2}")
    scalar = scalar_helmholtz(mesh, alpha1, alpha2)
    return sp.block_diag([scalar, scalar], format="csr")


def scalar_helmholtz(mesh, alpha1, alpha2):
    return (alpha1 * assemble_scalar_stiffness(mesh, np.ones(mesh.element_count)) + alpha2 * assemble_mass(mesh)).tocsr()


class DirichletSolver:
    """Factorized solver for a symmetric system with prescribed dofs.

    The reduced free-free block is factorized once (method 'direct') or
    kept for CG with Jacobi preconditioning (method 'cg'); 'auto' picks
    the direct path below a size threshold.  Repeated solves against the
    same matrix reuse the factorization.
    """

    def __init__(self, matrix, constrained, method="auto", tol=1e-10, maxiter=20000):
        if len(np.asarray(constrained)) == 0:
            raise InvalidParameterError("constraint set must be nonempty")
        self.n = matrix.shape[0]
        self.constrained = np.asarray(constrained, dtype=np.int64)
        self.tol = tol
        self.maxiter = maxiter
        free_mask = np.ones(self.n, dtype=bool)
        free_mask[self.constrained] = False
        self.free = np.nonzero(free_mask)[0]
        matrix = matrix.tocsr()
        self._coupling = matrix[self.free][:, self.constrained].tocsr()
        self._reduced = matrix[self.free][:, self.free].tocsc()
        if method == "auto":
            method = "direct" if self.free.size <= _DIRECT_LIMIT else "cg"
        self.method = method
        if method == "direct":
            self._lu = spla.splu(self._reduced)
        elif method == "cg":
            diag = self._reduced.diagonal()
            if np.any(diag <= 0):
                raise SolverError("reduced operator has nonpositive diagonal")
            self._precond = spla.LinearOperator(self._reduced.shape, lambda x: x / diag)
        else:
            raise InvalidParameterError(f"unknown solver method {method!r}")

    def solve(self, rhs, values=None):
        rhs = np.asarray(rhs, dtype=float)
        x = np.zeros(self.n)
        if values is None:
            values = np.zeros(self.constrained.size)
        else:
            values = np.broadcast_to(np.asarray(values, dtype=float), (self.constrained.size,))
        x[self.constrained] = values
        b = rhs[self.free] - self._coupling @ values
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return x
        if self.method == "direct":
            xf = self._lu.solve(b)
        else:
            xf, info = spla.cg(self._reduced, b, rtol=self.tol, atol=0.0, M=self._precond, maxiter=self.maxiter)
            if info != 0:
                res = np.linalg.norm(self._reduced @ xf - b) / bnorm
                raise SolverError(f"CG did not converge within {self.maxiter} iterations", residual=res)
        res = np.linalg.norm(self._reduced @ xf - b) / bnorm
        if res > max(self.tol, 1e-8):
            raise SolverError(f"solve stopped at relative residual {res:.3e}", residual=res)
        x[self.free] = xf
        return x


def apply_dirichlet_and_solve(system, tol=1e-10, method="auto"):
    """Eliminate the constraints of a SparseSystem and solve it."""
    solver = DirichletSolver(system.matrix, system.constrained, method=method, tol=tol)
    return solver.solve(system.rhs, system.values)


def element_gradients(mesh, nodal):
    """Constant per-element gradient of a P1 nodal field, shape (E, 2)."""
    return np.einsum("eik,ei->ek", mesh.grads, np.asarray(nodal)[mesh.triangles])
