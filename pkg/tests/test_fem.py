import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from eitshape.errors import InvalidParameterError, SolverError
from eitshape.fem import (
    DirichletSolver,
    SparseSystem,
    apply_dirichlet_and_solve,
    assemble_boundary_flux,
    assemble_mass,
    assemble_point_loads,
    assemble_scalar_stiffness,
    assemble_vector_helmholtz,
    assemble_volume_source,
    element_gradients,
)
from eitshape.mesh import build_unit_square_mesh


class ConstantFlux:
    def __init__(self, value):
        self.value_ = value

    def value(self, side, along):
        return np.full_like(np.asarray(along, dtype=float), self.value_)


def ones(mesh):
    return np.ones(mesh.element_count)


# ---------------------------------------------------------------- stiffness

def test_local_stiffness_unit_right_triangle():
    # hand integration on a unit right triangle with the right angle at
    # vertex r gives local[r,r]=1, corners 1/2, couplings -1/2 and 0.
    # Element 1 of the n=1 mesh is (0,0)-(1,1)-(0,1): right angle at
    # local index 2; isolate it by zero-weighting the other element.
    m = build_unit_square_mesh(1)
    K1 = assemble_scalar_stiffness(m, np.array([1e-300, 1.0]))
    local = K1.toarray()[np.ix_(m.triangles[1], m.triangles[1])]
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    perm = [2, 0, 1]  # spec ordering -> local vertex ordering
    for i in range(3):
        for j in range(3):
            assert np.isclose(local[perm[i], perm[j]], expected[i, j], atol=1e-12)


def test_stiffness_rows_sum_to_zero(mesh10):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    assert np.max(np.abs(K @ np.ones(mesh10.node_count))) <= 1e-12


def test_stiffness_linear_in_sigma(mesh10, rng):
    sigma = rng.uniform(0.5, 2.0, mesh10.element_count)
    K1 = assemble_scalar_stiffness(mesh10, sigma)
    K2 = assemble_scalar_stiffness(mesh10, 2.0 * sigma)
    assert np.max(np.abs((K2 - 2 * K1).toarray())) <= 1e-12


def test_stiffness_symmetric_m_matrix_pattern(mesh10, rng):
    K = assemble_scalar_stiffness(mesh10, rng.uniform(1, 10, mesh10.element_count)).tocoo()
    assert np.max(np.abs((K - K.T).toarray())) <= 1e-12 * np.max(np.abs(K.data))
    assert np.all(K.diagonal() > 0)
    off = K.row != K.col
    assert np.all(K.data[off] <= 1e-14)


def test_stiffness_rejects_nonpositive_sigma(mesh10):
    with pytest.raises(InvalidParameterError):
        assemble_scalar_stiffness(mesh10, np.zeros(mesh10.element_count))


# -------------------------------------------------------------------- loads

def test_flux_zero(mesh10):
    assert np.array_equal(assemble_boundary_flux(mesh10, ConstantFlux(0.0)), np.zeros(mesh10.node_count))


def test_flux_single_edge_half_length_each_end(mesh10):
    # unit flux on exactly one boundary edge: half the edge length lands
    # on each of its endpoints (per-edge value array form)
    values = np.zeros((mesh10.boundary_edges.shape[0], 2))
    mids = 0.5 * (mesh10.nodes[mesh10.boundary_edges[:, 0]] + mesh10.nodes[mesh10.boundary_edges[:, 1]])
    edge = int(np.argmin(np.abs(mids - [0.0, 0.55]).sum(axis=1)))  # left side, y in [0.5, 0.6]
    values[edge] = 1.0
    load = assemble_boundary_flux(mesh10, values)
    nz = np.nonzero(load)[0]
    assert set(nz) == set(mesh10.boundary_edges[edge])
    assert np.allclose(load[nz], 0.05)


def test_flux_total_boundary_length(mesh10):
    load = assemble_boundary_flux(mesh10, ConstantFlux(1.0))
    assert abs(load.sum() - 3.6) <= 1e-12


def test_point_load_at_node(mesh10):
    load = assemble_point_loads(mesh10, [(mesh10.nodes[57], 2.0)])
    assert np.isclose(load[57], 2.0)
    assert np.isclose(load.sum(), 2.0)
    assert np.count_nonzero(load) == 1


def test_point_load_at_centroid(mesh10):
    e = 31
    centroid = mesh10.nodes[mesh10.triangles[e]].mean(axis=0)
    load = assemble_point_loads(mesh10, [(centroid, 1.5)])
    assert np.allclose(load[mesh10.triangles[e]], 0.5)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(-2, 2)), min_size=1, max_size=5))
def test_point_loads_partition_of_unity(loads):
    mesh = build_unit_square_mesh(5)
    vec = assemble_point_loads(mesh, [((x, y), w) for x, y, w in loads])
    assert np.isclose(vec.sum(), sum(w for _, _, w in loads), atol=1e-12)


def test_volume_source_integrates_area(mesh10):
    load = assemble_volume_source(mesh10, 2.0 * np.ones(mesh10.element_count))
    assert np.isclose(load.sum(), 2.0)


# --------------------------------------------------------------- block system

def test_vector_helmholtz_spd(mesh10):
    H = assemble_vector_helmholtz(mesh10, 0.3, 0.7)
    x = np.random.default_rng(0).standard_normal(H.shape[0])
    assert x @ (H @ x) > 0
    assert np.max(np.abs((H - H.T).toarray())) <= 1e-12


def test_vector_helmholtz_mass_row_sums(mesh10):
    # alpha1 = 0: row sums per component equal alpha2 * integral of the hat
    H = assemble_vector_helmholtz(mesh10, 0.0, 0.7)
    n = mesh10.node_count
    sums = np.asarray(H @ np.concatenate([np.ones(n), np.zeros(n)])).ravel()[:n]
    lumped = np.zeros(n)
    np.add.at(lumped, mesh10.triangles.ravel(), np.repeat(mesh10.areas / 3.0, 3))
    assert np.allclose(sums, 0.7 * lumped, atol=1e-14)


def test_vector_helmholtz_stiffness_kernel(mesh10):
    H = assemble_vector_helmholtz(mesh10, 0.3, 0.0 + 1e-300)
    n = mesh10.node_count
    const = np.concatenate([np.ones(n), -2 * np.ones(n)])
    assert np.max(np.abs(H @ const)) <= 1e-10


def test_vector_helmholtz_rejects_bad_alphas(mesh10):
    with pytest.raises(InvalidParameterError):
        assemble_vector_helmholtz(mesh10, -0.1, 0.7)
    with pytest.raises(InvalidParameterError):
        assemble_vector_helmholtz(mesh10, 0.3, 0.0)


# -------------------------------------------------------------------- solves

def test_zero_rhs_zero_solution(mesh10):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    system = SparseSystem(K, np.zeros(mesh10.node_count), mesh10.dirichlet_nodes,
                          np.zeros(mesh10.dirichlet_nodes.size))
    assert np.array_equal(apply_dirichlet_and_solve(system), np.zeros(mesh10.node_count))


def test_solution_linearity(mesh10, rng):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    rhs = rng.standard_normal(mesh10.node_count)
    solver = DirichletSolver(K, mesh10.dirichlet_nodes)
    assert np.allclose(solver.solve(2.0 * rhs), 2.0 * solver.solve(rhs), atol=1e-12)


def test_constrained_values_exact(mesh10, rng):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    values = rng.standard_normal(mesh10.dirichlet_nodes.size)
    solver = DirichletSolver(K, mesh10.dirichlet_nodes)
    x = solver.solve(rng.standard_normal(mesh10.node_count), values=values)
    assert np.array_equal(x[mesh10.dirichlet_nodes], values)


def test_residual_contract_direct_and_cg(mesh20, rng):
    K = assemble_scalar_stiffness(mesh20, rng.uniform(1, 10, mesh20.element_count))
    rhs = rng.standard_normal(mesh20.node_count)
    free = np.setdiff1d(np.arange(mesh20.node_count), mesh20.dirichlet_nodes)
    for method in ("direct", "cg"):
        solver = DirichletSolver(K, mesh20.dirichlet_nodes, method=method, tol=1e-10)
        x = solver.solve(rhs)
        res = np.linalg.norm((K @ x - rhs)[free]) / np.linalg.norm(rhs[free])
        assert res <= 1e-10


def test_empty_constraints_rejected(mesh10):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    with pytest.raises(InvalidParameterError):
        DirichletSolver(K, np.array([], dtype=int))


def test_cg_failure_raises(mesh10):
    K = assemble_scalar_stiffness(mesh10, ones(mesh10))
    solver = DirichletSolver(K, mesh10.dirichlet_nodes, method="cg", tol=1e-14, maxiter=2)
    with pytest.raises(SolverError) as info:
        solver.solve(np.ones(mesh10.node_count))
    assert info.value.residual is not None


def test_green_function_symmetry(mesh20):
    # unit load at a, evaluated at b == unit load at b, evaluated at a
    K = assemble_scalar_stiffness(mesh20, ones(mesh20))
    solver = DirichletSolver(K, mesh20.dirichlet_nodes)
    a, b = (0.3, 0.45), (0.72, 0.61)
    ua = solver.solve(assemble_point_loads(mesh20, [(a, 1.0)]))
    ub = solver.solve(assemble_point_loads(mesh20, [(b, 1.0)]))
    va = assemble_point_loads(mesh20, [(b, 1.0)]) @ ua
    vb = assemble_point_loads(mesh20, [(a, 1.0)]) @ ub
    assert np.isclose(va, vb, rtol=1e-9)


def test_element_gradients_linear_field(mesh10):
    field = 3.0 * mesh10.nodes[:, 0] - 2.0 * mesh10.nodes[:, 1] + 0.7
    grads = element_gradients(mesh10, field)
    assert np.allclose(grads, [3.0, -2.0], atol=1e-12)
