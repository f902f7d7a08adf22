import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitshape.errors import GeometryError, InvalidResolutionError, OutOfDomainError
from eitshape.mesh import (
    build_unit_square_mesh,
    classify_boundary,
    dump_mesh_text,
    interpolate,
    locate_point,
    locate_points,
)


def test_counts_smallest_grid():
    m = build_unit_square_mesh(1)
    assert m.node_count == 4
    assert m.element_count == 2
    assert m.boundary_edges.shape[0] == 4


def test_counts_n2():
    m = build_unit_square_mesh(2)
    assert m.node_count == 9
    assert m.element_count == 8
    assert m.boundary_edges.shape[0] == 8


def test_counts_paper_grid():
    m = build_unit_square_mesh(128)
    assert m.node_count == 129 * 129 == 16641
    assert m.element_count == 2 * 128 * 128 == 32768
    assert m.boundary_edges.shape[0] == 4 * 128


def test_invalid_resolution():
    with pytest.raises(InvalidResolutionError):
        build_unit_square_mesh(0)
    with pytest.raises(InvalidResolutionError):
        build_unit_square_mesh(-3)


def test_areas_positive_and_sum_to_one(mesh10):
    assert np.all(mesh10.areas > 0)
    assert np.allclose(mesh10.areas, 1.0 / 200.0)
    assert abs(mesh10.areas.sum() - 1.0) <= 1e-12


def test_orientation_counterclockwise(mesh10):
    p = mesh10.nodes[mesh10.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(cross > 0)


def test_edge_sharing(mesh10):
    counts = {}
    for tri in mesh10.triangles:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = tuple(sorted((tri[a], tri[b])))
            counts[key] = counts.get(key, 0) + 1
    boundary = {tuple(sorted(e)) for e in mesh10.boundary_edges}
    for key, c in counts.items():
        if key in boundary:
            assert c == 1
        else:
            assert c == 2


def test_default_dirichlet_classification(mesh10):
    mids = 0.5 * (mesh10.nodes[mesh10.boundary_edges[:, 0]] + mesh10.nodes[mesh10.boundary_edges[:, 1]])
    for mid, flag in zip(mids, mesh10.boundary_dirichlet):
        on_strip = 0.4 <= mid[0] <= 0.6 and (mid[1] in (0.0, 1.0))
        assert flag == on_strip
    lengths = np.hypot(*(mesh10.nodes[mesh10.boundary_edges[:, 1]] - mesh10.nodes[mesh10.boundary_edges[:, 0]]).T)
    assert abs(lengths[mesh10.boundary_dirichlet].sum() - 0.4) <= 1e-12


def test_classification_examples(mesh10):
    mids = 0.5 * (mesh10.nodes[mesh10.boundary_edges[:, 0]] + mesh10.nodes[mesh10.boundary_edges[:, 1]])
    idx_bottom = np.argmin(np.abs(mids - [0.5, 0.0]).sum(axis=1))
    assert mesh10.boundary_dirichlet[idx_bottom]
    idx_top = np.argmin(np.abs(mids - [0.5, 1.0]).sum(axis=1))
    assert mesh10.boundary_dirichlet[idx_top]
    idx_left = np.argmin(np.abs(mids - [0.0, 0.5]).sum(axis=1))
    assert not mesh10.boundary_dirichlet[idx_left]
    assert mesh10.boundary_sides[idx_left] == "left"


def test_every_boundary_edge_has_one_part(mesh10):
    assert mesh10.boundary_dirichlet.dtype == bool
    assert mesh10.boundary_dirichlet.shape[0] == mesh10.boundary_edges.shape[0]


def test_classify_rejects_offboundary_segment(mesh10):
    with pytest.raises(GeometryError):
        classify_boundary(mesh10, [((0.2, 0.5), (0.8, 0.5))])


def test_locate_vertex(mesh10):
    elem, lam = locate_point(mesh10, mesh10.nodes[37])
    assert np.isclose(lam.max(), 1.0)
    assert mesh10.triangles[elem][np.argmax(lam)] == 37


def test_locate_centroid(mesh10):
    e = 17
    centroid = mesh10.nodes[mesh10.triangles[e]].mean(axis=0)
    elem, lam = locate_point(mesh10, centroid)
    assert elem == e
    assert np.allclose(lam, 1.0 / 3.0)


def test_locate_reconstructs_point():
    m = build_unit_square_mesh(4)
    x = np.array([0.25, 0.125])
    elem, lam = locate_point(m, x)
    assert np.allclose(m.nodes[m.triangles[elem]].T @ lam, x)


def test_locate_shared_edge_lowest_element(mesh10):
    # point on the vertical grid line between two cells: both cells (and
    # even four triangles) contain it; the lowest element index wins
    x = np.array([0.3, 0.45])
    elem, lam = locate_point(mesh10, x)
    candidates = []
    for e in range(mesh10.element_count):
        p = mesh10.nodes[mesh10.triangles[e]]
        T = np.column_stack([p[1] - p[0], p[2] - p[0]])
        l12 = np.linalg.solve(T, x - p[0])
        lam_all = np.array([1 - l12.sum(), *l12])
        if np.all(lam_all >= -1e-12):
            candidates.append(e)
    assert elem == min(candidates)


def test_locate_outside_raises(mesh10):
    with pytest.raises(OutOfDomainError):
        locate_point(mesh10, (1.2, 0.5))


def test_vectorized_locate_matches_interpolation(mesh10, rng):
    values = rng.standard_normal(mesh10.node_count)
    pts = rng.uniform(0, 1, size=(200, 2))
    direct = np.empty(200)
    for i, x in enumerate(pts):
        elem, lam = locate_point(mesh10, x)
        direct[i] = values[mesh10.triangles[elem]] @ lam
    assert np.allclose(interpolate(mesh10, values, pts), direct, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_locate_points_barycentric_valid(x, y):
    m = build_unit_square_mesh(5)
    elems, lam = locate_points(m, np.array([[x, y]]))
    assert np.all(lam >= -1e-12)
    assert np.allclose(lam.sum(axis=1), 1.0)
    rebuilt = np.einsum("mkd,mk->md", m.nodes[m.triangles[elems]], lam)
    assert np.allclose(rebuilt, [[x, y]], atol=1e-12)


def test_dump_text(mesh10):
    text = dump_mesh_text(mesh10)
    lines = text.strip().splitlines()
    assert lines[0] == "# nodes: id x y"
    assert lines[1].split() == ["0", "0", "0"]
    assert "# triangles: id n0 n1 n2" in text
    assert len(lines) == 2 + mesh10.node_count + mesh10.element_count
