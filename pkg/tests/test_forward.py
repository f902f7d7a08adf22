import math

import numpy as np
import pytest

from eitshape.errors import DataMismatchError, InvalidParameterError, OutOfDomainError
from eitshape.forward import (
    CurrentPattern,
    MeasurementSet,
    SideProfile,
    measurement_points,
    sample_measurements,
    solve_state,
    solve_states,
    standard_currents,
)
from eitshape.mesh import build_unit_square_mesh


# ------------------------------------------------------------------ currents

def test_standard_current_values():
    g1, g2, g3 = standard_currents(3)
    assert g1.at((0.0, 0.5)) == 1.0
    assert g1.at((0.3, 1.0)) == -1.0
    assert g2.at((0.0, 0.5)) == 1.0
    assert g2.at((1.0, 0.5)) == -1.0
    assert g3.at((0.2, 0.0)) == 1.0
    assert g3.at((0.2, 1.0)) == -1.0


def test_dipole_current_values():
    currents = standard_currents(7, ramp_width=0.1)
    g4 = currents[3]
    assert g4.at((0.0, 0.75)) == 1.0
    assert g4.at((0.0, 0.25)) == -1.0
    assert g4.at((1.0, 0.5)) == 0.0
    # ramp interpolates linearly across the side midpoint
    assert np.isclose(g4.at((0.0, 0.5)), 0.0)
    assert np.isclose(g4.at((0.0, 0.525)), 0.5)
    g5, g6, g7 = currents[4:]
    assert g5.at((1.0, 0.75)) == 1.0
    assert g6.at((0.75, 1.0)) == 1.0 and g6.at((0.25, 1.0)) == -1.0
    assert g7.at((0.75, 0.0)) == 1.0


def test_currents_bounded_by_one():
    for count in (3, 7):
        for g in standard_currents(count):
            for side in ("left", "right", "upper", "lower"):
                values = g.value(side, np.linspace(0, 1, 201))
                assert np.max(np.abs(values)) <= 1.0 + 1e-12


def test_unsupported_current_count():
    with pytest.raises(InvalidParameterError):
        standard_currents(5)
    with pytest.raises(InvalidParameterError):
        standard_currents(7, ramp_width=0.5)


def test_pattern_magnitude_validated():
    with pytest.raises(InvalidParameterError):
        CurrentPattern(1, (2.0, 0.0, 0.0, 0.0))
    with pytest.raises(InvalidParameterError):
        CurrentPattern(1, (SideProfile(-1.5, 1.0), 0.0, 0.0, 0.0))


# --------------------------------------------------------------------- states

def test_state_zero_data_zero_solution(mesh10):
    u = solve_state(mesh10, np.ones(mesh10.element_count), CurrentPattern(0, (0.0, 0.0, 0.0, 0.0)))
    assert np.array_equal(u, np.zeros(mesh10.node_count))


def _l2_error_quadratic(mesh, u, exact):
    # edge-midpoint quadrature, exact for quadratics
    tri = mesh.triangles
    total = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (mesh.nodes[tri[:, a]] + mesh.nodes[tri[:, b]])
        uh = 0.5 * (u[tri[:, a]] + u[tri[:, b]])
        total += np.sum(mesh.areas / 3.0 * (uh - exact(mid)) ** 2)
    return math.sqrt(total)


MANUFACTURED_G = CurrentPattern(0, (0.0, 0.0, -1.0, -1.0))


def manufactured_errors(resolutions):
    errors = []
    for n in resolutions:
        mesh = build_unit_square_mesh(n)
        u = solve_state(mesh, np.ones(mesh.element_count), MANUFACTURED_G,
                        f_elem=2.0 * np.ones(mesh.element_count))
        errors.append(_l2_error_quadratic(mesh, u, lambda p: p[:, 1] * (1.0 - p[:, 1])))
    return errors


def test_manufactured_solution_second_order():
    errors = manufactured_errors((10, 20, 40))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    for order in orders:
        assert 1.8 <= order <= 2.2


def test_state_scaling_invariance(mesh10):
    # scaling sigma, f and g by the same constant leaves the potential unchanged
    f = np.ones(mesh10.element_count)
    u1 = solve_state(mesh10, np.ones(mesh10.element_count), CurrentPattern(0, (0.0, 0.0, -0.5, -0.5)), f_elem=f)
    u2 = solve_state(mesh10, 2.0 * np.ones(mesh10.element_count), CurrentPattern(0, (0.0, 0.0, -1.0, -1.0)),
                     f_elem=2.0 * f)
    assert np.allclose(u2, u1, atol=1e-10)


def test_state_linearity_in_current(mesh20, rng):
    sigma = rng.uniform(1, 10, mesh20.element_count)
    g1, g2, _ = standard_currents(3)
    states, op = solve_states(mesh20, sigma, [g1, g2])
    combined = CurrentPattern(0, tuple(0.5 * (np.array(g1.sides) + np.array(g2.sides))))
    u12 = solve_state(mesh20, sigma, combined, operator=op)
    assert np.allclose(u12, 0.5 * (states[0] + states[1]), atol=1e-9)


def test_state_zero_on_grounded_nodes(mesh20):
    sigma = np.ones(mesh20.element_count)
    for g in standard_currents(3):
        u = solve_state(mesh20, sigma, g)
        assert np.max(np.abs(u[mesh20.dirichlet_nodes])) == 0.0


def test_discrete_maximum_principle(mesh20):
    # uniform sigma, no volume source: extrema sit on the boundary
    u = solve_state(mesh20, np.ones(mesh20.element_count), standard_currents(3)[0])
    interior = np.setdiff1d(np.arange(mesh20.node_count), mesh20.boundary_nodes)
    assert u[interior].max() <= u[mesh20.boundary_nodes].max() + 1e-12
    assert u[interior].min() >= u[mesh20.boundary_nodes].min() - 1e-12


# ------------------------------------------------------------------- sampling

def test_sample_at_node(mesh10, rng):
    u = rng.standard_normal(mesh10.node_count)
    values = sample_measurements(u, mesh10, mesh10.nodes[[17, 93]])
    assert np.allclose(values, u[[17, 93]], atol=1e-12)


def test_sample_linear_exact(mesh10, rng):
    u = 2.0 * mesh10.nodes[:, 0] - 0.5 * mesh10.nodes[:, 1] + 0.25
    pts = rng.uniform(0, 1, (50, 2))
    assert np.allclose(sample_measurements(u, mesh10, pts),
                       2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 0.25, atol=1e-12)


def test_sample_edge_convex_combination(mesh10, rng):
    u = rng.standard_normal(mesh10.node_count)
    # midpoint of a horizontal mesh edge
    value = sample_measurements(u, mesh10, np.array([[0.35, 0.2]]))[0]
    a = np.argmin(np.abs(mesh10.nodes - [0.3, 0.2]).sum(axis=1))
    b = np.argmin(np.abs(mesh10.nodes - [0.4, 0.2]).sum(axis=1))
    assert np.isclose(value, 0.5 * (u[a] + u[b]), atol=1e-12)


def test_sample_outside_raises(mesh10):
    with pytest.raises(OutOfDomainError):
        sample_measurements(np.zeros(mesh10.node_count), mesh10, np.array([[1.5, 0.5]]))


# ---------------------------------------------------------------- point grids

@pytest.mark.parametrize("spacing,expected", [(0.2, 16), (0.1, 34), (0.05, 70)])
def test_measurement_point_counts(spacing, expected):
    assert measurement_points(spacing).shape[0] == expected


def test_measurement_points_avoid_grounded_strips():
    pts = measurement_points(0.05)
    on_boundary = (pts == 0.0) | (pts == 1.0)
    assert np.all(on_boundary.any(axis=1))
    horizontal = (pts[:, 1] == 0.0) | (pts[:, 1] == 1.0)
    assert not np.any(horizontal & (pts[:, 0] >= 0.4 - 1e-12) & (pts[:, 0] <= 0.6 + 1e-12))


def test_measurement_points_examples():
    pts = {tuple(np.round(p, 10)) for p in measurement_points(0.2)}
    assert (0.0, 0.0) in pts and (0.0, 0.2) in pts and (0.2, 0.0) in pts
    assert len(pts) == 16  # corners deduplicated


def test_measurement_points_deterministic():
    assert np.array_equal(measurement_points(0.1), measurement_points(0.1))


def test_measurement_points_bad_spacing():
    with pytest.raises(InvalidParameterError):
        measurement_points(0.3)


# ----------------------------------------------------------------------- csv

def test_measurement_csv_roundtrip(tmp_path):
    points = measurement_points(0.2)
    values = np.random.default_rng(3).standard_normal((3, points.shape[0]))
    ms = MeasurementSet(points=points, values=values, delta=0.01, seed=7, noise_level=0.0113)
    path = tmp_path / "data.csv"
    ms.to_csv(path)
    text = path.read_text()
    assert text.splitlines()[3] == "x, y, h_1, h_2, h_3"
    assert text.startswith("# delta = 0.01")
    back = MeasurementSet.from_csv(path)
    assert np.array_equal(back.points, points)
    assert np.array_equal(back.values, values)
    assert back.delta == 0.01 and back.seed == 7 and back.noise_level == 0.0113


def test_measurement_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# delta = 0\nx, y, v_1\n0, 0, 1\n")
    with pytest.raises(DataMismatchError):
        MeasurementSet.from_csv(path)
