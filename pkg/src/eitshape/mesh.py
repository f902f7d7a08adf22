"""Structured P1 triangulations of the unit square.

The square (0,1)^2 is split into n x n cells, each cut along the
lower-left to upper-right diagonal.  Node (ix, iy) has index
iy*(n+1) + ix; cell (ix, iy) has index iy*n + ix and owns elements
2*cell (below the diagonal) and 2*cell + 1 (above it).  Boundary edges
carry a side tag in {left, right, upper, lower} and a Dirichlet flag:
flagged edges form the grounded part of the boundary, the rest is the
current-carrying / measurement part.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import GeometryError, InvalidResolutionError, OutOfDomainError

SIDES = ("left", "right", "upper", "lower")

#: Grounded boundary: the middle fifth of the lower and upper sides.
DEFAULT_DIRICHLET_SEGMENTS = (
    ((0.4, 0.0), (0.6, 0.0)),
    ((0.4, 1.0), (0.6, 1.0)),
)

_TOL = 1e-12


@dataclass(frozen=True)
class StructuredMesh:
    """Immutable triangulation of the unit square.

    Attributes
    ----------
    n : grid resolution per side; (n+1)^2 nodes, 2*n^2 elements.
    nodes : (N, 2) node coordinates.
    triangles : (E, 3) node indices, counterclockwise.
    boundary_edges : (B, 2) node index pairs along the boundary.
    boundary_sides : (B,) side tag per boundary edge.
    boundary_dirichlet : (B,) True where the edge is grounded.
    areas : (E,) element areas (all equal to 1/(2 n^2)).
    grads : (E, 3, 2) constant gradients of the three hat functions.
    dirichlet_nodes : sorted indices of grounded nodes.
    boundary_nodes : sorted indices of all boundary nodes.
    """

    n: int
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_sides: np.ndarray
    boundary_dirichlet: np.ndarray
    areas: np.ndarray
    grads: np.ndarray
    dirichlet_nodes: np.ndarray
    boundary_nodes: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def element_count(self) -> int:
        return self.triangles.shape[0]

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def build_unit_square_mesh(n, dirichlet_segments=DEFAULT_DIRICHLET_SEGMENTS):
    """Triangulate (0,1)^2 with an n x n grid and tag the boundary.

    n must be >= 1.  The default grounded segments resolve exactly only
    when n is a multiple of 5 (so that 0.4 and 0.6 are grid lines);
    for other n the midpoint classification below snaps them to the
    nearest edges.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidResolutionError(f"grid resolution must be a positive integer, got {n!r}")
    n = int(n)
    h = 1.0 / n

    ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    nodes = np.column_stack([ix.ravel() * h, iy.ravel() * h])

    cx, cy = np.meshgrid(np.arange(n), np.arange(n))
    cx = cx.ravel()
    cy = cy.ravel()
    ll = cy * (n + 1) + cx
    lr = ll + 1
    ul = ll + (n + 1)
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    k = np.arange(n)
    edges = []
    sides = []
    # left x=0 (nodes iy*(n+1)), right x=1, lower y=0, upper y=1
    edges.append(np.column_stack([k * (n + 1), (k + 1) * (n + 1)]))
    sides += ["left"] * n
    edges.append(np.column_stack([k * (n + 1) + n, (k + 1) * (n + 1) + n]))
    sides += ["right"] * n
    edges.append(np.column_stack([k, k + 1]))
    sides += ["lower"] * n
    edges.append(np.column_stack([n * (n + 1) + k, n * (n + 1) + k + 1]))
    sides += ["upper"] * n
    boundary_edges = np.vstack(edges)
    boundary_sides = np.array(sides)

    v0 = nodes[triangles[:, 0]]
    v1 = nodes[triangles[:, 1]]
    v2 = nodes[triangles[:, 2]]
    e1 = v1 - v0
    e2 = v2 - v0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    areas = 0.5 * det
    # hat gradients: grad(lambda_i) rotates the opposite edge by 90 degrees
    grads = np.empty((triangles.shape[0], 3, 2))
    for i, (j, k2) in enumerate(((1, 2), (2, 0), (0, 1))):
        opp = nodes[triangles[:, k2]] - nodes[triangles[:, j]]
        grads[:, i, 0] = -opp[:, 1]
        grads[:, i, 1] = opp[:, 0]
    grads /= det[:, None, None]

    boundary_nodes = np.unique(boundary_edges)
    mesh = StructuredMesh(
        n=n,
        nodes=nodes,
        triangles=triangles,
        boundary_edges=boundary_edges,
        boundary_sides=boundary_sides,
        boundary_dirichlet=np.zeros(boundary_edges.shape[0], dtype=bool),
        areas=areas,
        grads=grads,
        dirichlet_nodes=np.empty(0, dtype=np.int64),
        boundary_nodes=boundary_nodes,
    )
    mesh = classify_boundary(mesh, dirichlet_segments)
    _freeze(nodes, triangles, boundary_edges, boundary_sides, areas, grads, boundary_nodes)
    return mesh


def classify_boundary(mesh, dirichlet_segments):
    """Retag boundary edges: grounded iff the edge midpoint lies in a segment.

    Segments must be axis-aligned and lie on the boundary of the unit
    square; anything else raises GeometryError.
    """
    segments = [(np.asarray(a, dtype=float), np.asarray(b, dtype=float)) for a, b in dirichlet_segments]
    for a, b in segments:
        horizontal = abs(a[1] - b[1]) <= _TOL and (abs(a[1]) <= _TOL or abs(a[1] - 1.0) <= _TOL)
        vertical = abs(a[0] - b[0]) <= _TOL and (abs(a[0]) <= _TOL or abs(a[0] - 1.0) <= _TOL)
        if not (horizontal or vertical):
            raise GeometryError(f"Dirichlet segment {a.tolist()}-{b.tolist()} does not lie on the boundary")

    mids = 0.5 * (mesh.nodes[mesh.boundary_edges[:, 0]] + mesh.nodes[mesh.boundary_edges[:, 1]])
    flag = np.zeros(mids.shape[0], dtype=bool)
    for a, b in segments:
        lo = np.minimum(a, b) - _TOL
        hi = np.maximum(a, b) + _TOL
        flag |= np.all((mids >= lo) & (mids <= hi), axis=1)

    dirichlet_nodes = np.unique(mesh.boundary_edges[flag])
    flag.setflags(write=False)
    dirichlet_nodes.setflags(write=False)
    return replace(mesh, boundary_dirichlet=flag, dirichlet_nodes=dirichlet_nodes)


def _check_in_domain(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(points < -_TOL) or np.any(points > 1.0 + _TOL):
        bad = points[np.any((points < -_TOL) | (points > 1.0 + _TOL), axis=1)][0]
        raise OutOfDomainError(f"point {bad.tolist()} lies outside the unit square")
    return np.clip(points, 0.0, 1.0)


def _barycentric(mesh, elem, x):
    tri = mesh.triangles[elem]
    p = mesh.nodes[tri]
    T = np.column_stack([p[1] - p[0], p[2] - p[0]])
    lam12 = np.linalg.solve(T, x - p[0])
    return np.array([1.0 - lam12.sum(), lam12[0], lam12[1]])


def locate_point(mesh, x):
    """Return (element index, barycentric coords) for a point in [0,1]^2.

    Points on shared edges resolve to the lowest containing element
    index, so Dirac-type loads assemble deterministically.
    """
    x = _check_in_domain(x)[0]
    n = mesh.n
    fx = x * n
    cand_ix = {min(int(np.floor(fx[0])), n - 1)}
    cand_iy = {min(int(np.floor(fx[1])), n - 1)}
    # a coordinate sitting on a grid line also belongs to the previous cell
    if abs(fx[0] - round(fx[0])) <= 1e-9 and round(fx[0]) > 0:
        cand_ix.add(min(int(round(fx[0])) - 1, n - 1))
    if abs(fx[1] - round(fx[1])) <= 1e-9 and round(fx[1]) > 0:
        cand_iy.add(min(int(round(fx[1])) - 1, n - 1))
    elems = sorted(2 * (iy * n + ix) + t for ix in cand_ix for iy in cand_iy for t in (0, 1))
    for elem in elems:
        lam = _barycentric(mesh, elem, x)
        if np.all(lam >= -1e-12):
            lam = np.clip(lam, 0.0, 1.0)
            return elem, lam / lam.sum()
    raise OutOfDomainError(f"no element contains point {x.tolist()}")  # pragma: no cover


def locate_points(mesh, points):
    """Vectorized point location; ties resolved by floor arithmetic.

    Returns (elements (M,), barycentric (M, 3)).  Interpolation through
    either element sharing an edge agrees, so the tie rule here may
    differ from locate_point without affecting interpolated values.
    """
    points = _check_in_domain(points)
    n = mesh.n
    f = points * n
    cells = np.minimum(f.astype(np.int64), n - 1)
    s = f - cells
    sx, sy = s[:, 0], s[:, 1]
    cell = cells[:, 1] * n + cells[:, 0]
    lower = sy <= sx
    elems = 2 * cell + np.where(lower, 0, 1)
    lam = np.empty((points.shape[0], 3))
    # lower triangle (ll, lr, ur): (1-sx, sx-sy, sy); upper (ll, ur, ul): (1-sy, sx, sy-sx)
    lam[lower, 0] = 1.0 - sx[lower]
    lam[lower, 1] = sx[lower] - sy[lower]
    lam[lower, 2] = sy[lower]
    up = ~lower
    lam[up, 0] = 1.0 - sy[up]
    lam[up, 1] = sx[up]
    lam[up, 2] = sy[up] - sx[up]
    return elems, lam


def interpolate(mesh, nodal_values, points):
    """Evaluate the P1 interpolant of nodal values at arbitrary points."""
    elems, lam = locate_points(mesh, points)
    return np.einsum("mk,mk->m", np.asarray(nodal_values)[mesh.triangles[elems]], lam)


def dump_mesh_text(mesh):
    """Plain-text node/element listing for debugging."""
    lines = ["# nodes: id x y"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines.append("# triangles: id n0 n1 n2")
    lines += [f"{i} {a} {b} {c}" for i, (a, b, c) in enumerate(mesh.triangles)]
    return "\n".join(lines) + "\n"
