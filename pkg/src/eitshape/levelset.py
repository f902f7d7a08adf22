"""Level-set representation of the conductivity inclusion.

The inclusion is the set where a nodal scalar field is negative; the
field is built from analytic phantoms (ellipses / simple polygons),
advected along a descent field with a semi-Lagrangian step, and
periodically rebuilt as a signed distance to its own zero contour.
Conversion to an element-wise conductivity uses exact clipping of the
P1 interpolant, so each cut element gets the area fraction of its
negative part rather than a binary value.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContainmentError, GeometryError, InvalidParameterError
from .mesh import interpolate, locate_points

log = logging.getLogger(__name__)

_CHUNK = 4096


@dataclass(frozen=True)
class Ellipse:
    center: tuple
    semiaxes: tuple

    def __post_init__(self):
        if min(self.semiaxes) <= 0:
            raise GeometryError(f"ellipse semiaxes must be positive, got {self.semiaxes}")

    def signed_distance(self, points):
        # level function sqrt(sum(((x-c)/a)^2)) - 1, rescaled by the small
        # semiaxis; exact for circles, approximate otherwise
        q = np.sqrt(
            ((points[:, 0] - self.center[0]) / self.semiaxes[0]) ** 2
            + ((points[:, 1] - self.center[1]) / self.semiaxes[1]) ** 2
        )
        return (q - 1.0) * min(self.semiaxes)

    def bounds(self):
        c = np.asarray(self.center)
        a = np.asarray(self.semiaxes)
        return c - a, c + a


@dataclass(frozen=True)
class Polygon:
    vertices: np.ndarray  # (M, 2), simple, counterclockwise

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise GeometryError("polygon needs at least three 2D vertices")
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area <= 0:
            raise GeometryError("polygon must be counterclockwise with positive area")
        object.__setattr__(self, "vertices", v)

    def signed_distance(self, points):
        return _polygon_signed_distance(self.vertices, points)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def circle(center, radius):
    return Ellipse(center=tuple(center), semiaxes=(radius, radius))


@dataclass(frozen=True)
class Phantom:
    """Union of inclusion primitives, compactly contained in the square."""

    primitives: tuple

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))

    def validate_containment(self):
        for prim in self.primitives:
            lo, hi = prim.bounds()
            if np.any(lo <= 0.0) or np.any(hi >= 1.0):
                raise ContainmentError(f"primitive {prim} is not compactly contained in the unit square")

    def signed_distance(self, points):
        points = np.asarray(points, dtype=float)
        values = np.full(points.shape[0], np.inf)
        for prim in self.primitives:
            values = np.minimum(values, prim.signed_distance(points))
        return values


def _polygon_signed_distance(vertices, points):
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    ab = b - a
    ab2 = np.maximum(np.einsum("sk,sk->s", ab, ab), 1e-300)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        p = points[start : start + _CHUNK]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("msk,sk->ms", ap, ab) / ab2, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d = np.sqrt(np.sum((p[:, None, :] - closest) ** 2, axis=2)).min(axis=1)
        # even-odd rule on a horizontal ray
        cond = (a[None, :, 1] > p[:, 1, None]) != (b[None, :, 1] > p[:, 1, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = a[None, :, 0] + (p[:, 1, None] - a[None, :, 1]) * ab[None, :, 0] / ab[None, :, 1]
        crossings = np.sum(cond & (p[:, 0, None] < xs), axis=1)
        inside = crossings % 2 == 1
        out[start : start + _CHUNK] = np.where(inside, -d, d)
    return out


def phantom_to_levelset(phantom, mesh):
    """Sample the phantom's signed-distance-like function at mesh nodes."""
    if not phantom.primitives:
        raise ContainmentError("phantom has no primitives")
    phantom.validate_containment()
    return phantom.signed_distance(mesh.nodes)


def negative_area_fraction(phi, mesh):
    """Per-element fraction of area where the P1 interpolant is negative.

    Exact for each triangle: the zero line of a linear function cuts a
    triangle into a sub-triangle and a quadrilateral whose areas follow
    from the (sorted) vertex values alone.
    """
    v = np.sort(np.asarray(phi)[mesh.triangles], axis=1)
    w0, w1, w2 = v[:, 0], v[:, 1], v[:, 2]
    theta = np.zeros(mesh.element_count)
    theta[w2 < 0] = 1.0
    one_neg = (w0 < 0) & (w1 >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w0**2 / ((w0 - w1) * (w0 - w2))
        theta[one_neg] = t[one_neg]
        t = 1.0 - w2**2 / ((w2 - w0) * (w2 - w1))
        two_neg = (w1 < 0) & (w2 >= 0)
        theta[two_neg] = t[two_neg]
    return theta


def conductivity_from_levelset(phi, sigma0, sigma1, mesh):
    """Relaxed two-phase conductivity: sigma0 outside, sigma1 inside.

    Cut elements blend by the exact negative-area fraction, which keeps
    the misfit Lipschitz under sub-cell interface motion.
    """
    if sigma0 <= 0 or sigma1 <= 0:
        raise InvalidParameterError(f"conductivities must be positive, got {sigma0}, {sigma1}")
    theta = negative_area_fraction(phi, mesh)
    return sigma0 + (sigma1 - sigma0) * theta


def advect_levelset(phi, velocity, tau, mesh):
    """Semi-Lagrangian transport: new phi(x) = old phi(x - tau*V(x)).

    Foot points are clamped to the closed square; the number of feet
    clamped by more than round-off is logged.  tau must be >= 0 and the
    velocity must vanish on the boundary nodes for the inclusion to stay
    inside the domain.
    """
    if tau < 0:
        raise InvalidParameterError(f"step length must be nonnegative, got {tau}")
    velocity = np.asarray(velocity)
    if tau == 0.0 or not velocity.any():
        return np.array(phi, copy=True)
    feet = mesh.nodes - tau * velocity
    clipped = np.clip(feet, 0.0, 1.0)
    escaped = int(np.sum(np.any(np.abs(feet - clipped) > 1e-12, axis=1)))
    if escaped:
        log.info("advection clamped %d foot points to the domain", escaped)
    elems, lam = locate_points(mesh, clipped)
    return np.einsum("mk,mk->m", np.asarray(phi)[mesh.triangles[elems]], lam)


@dataclass(frozen=True)
class InterfacePolyline:
    """Zero contour of a nodal field, one straight segment per cut element."""

    segments: np.ndarray  # (S, 2, 2) endpoints
    elements: np.ndarray  # (S,) element owning each segment
    lengths: np.ndarray
    midpoints: np.ndarray
    normals: np.ndarray  # unit, pointing from negative to positive side

    @property
    def empty(self):
        return self.segments.shape[0] == 0


def extract_interface(phi, mesh, min_length=1e-12):
    """March the triangles: one segment per element whose P1 interpolant
    changes sign, endpoints interpolated along the crossing edges."""
    phi = np.asarray(phi)
    tri_vals = phi[mesh.triangles]
    neg = tri_vals < 0
    count = neg.sum(axis=1)
    cut = np.nonzero((count > 0) & (count < 3))[0]

    segments, elements = [], []
    for e in cut:
        vals = tri_vals[e]
        pts = mesh.nodes[mesh.triangles[e]]
        crossings = []
        for i, j in ((0, 1), (1, 2), (2, 0)):
            if (vals[i] < 0) != (vals[j] < 0):
                t = vals[i] / (vals[i] - vals[j])
                crossings.append(pts[i] + t * (pts[j] - pts[i]))
        if len(crossings) != 2:  # pragma: no cover - parity guarantees 2
            continue
        segments.append(crossings)
        elements.append(e)

    if not segments:
        empty2 = np.empty((0, 2))
        return InterfacePolyline(np.empty((0, 2, 2)), np.empty(0, dtype=np.int64), np.empty(0), empty2, empty2)

    segments = np.asarray(segments)
    elements = np.asarray(elements, dtype=np.int64)
    d = segments[:, 1] - segments[:, 0]
    lengths = np.hypot(d[:, 0], d[:, 1])
    keep = lengths >= min_length
    if not np.all(keep):
        log.debug("dropping %d degenerate interface segments", int(np.sum(~keep)))
    segments, elements, d, lengths = segments[keep], elements[keep], d[keep], lengths[keep]
    midpoints = segments.mean(axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    grad_phi = np.einsum("sik,si->sk", mesh.grads[elements], tri_vals[elements])
    flip = np.einsum("sk,sk->s", normals, grad_phi) < 0
    normals[flip] *= -1.0
    return InterfacePolyline(segments, elements, lengths, midpoints, normals)


def _segment_distance_block(points, segments):
    a = segments[:, 0]
    ab = segments[:, 1] - segments[:, 0]
    ab2 = np.maximum(np.einsum("sk,sk->s", ab, ab), 1e-300)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        p = points[start : start + _CHUNK]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("msk,sk->ms", ap, ab) / ab2, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        out[start : start + _CHUNK] = np.sqrt(np.sum((p[:, None, :] - closest) ** 2, axis=2)).min(axis=1)
    return out


def _candidate_distances(points, segments, candidates):
    a = segments[candidates, 0]
    ab = segments[candidates, 1] - segments[candidates, 0]
    ab2 = np.maximum(np.einsum("msk,msk->ms", ab, ab), 1e-300)
    ap = points[:, None, :] - a
    t = np.clip(np.einsum("msk,msk->ms", ap, ab) / ab2, 0.0, 1.0)
    closest = a + t[:, :, None] * ab
    return np.sqrt(np.sum((points[:, None, :] - closest) ** 2, axis=2)).min(axis=1)


def _distance_to_segments(points, segments):
    """Exact distance to a segment soup.

    Nearby segments are preselected through a tree over the segment
    midpoints; a guard decides where the preselection provably contains
    the true nearest segment (the best candidate distance undercuts the
    k-th midpoint distance by half a segment length).  Nodes failing the
    guard escalate to a larger preselection and finally to the dense
    computation.
    """
    count = segments.shape[0]
    if count <= 32:
        return _segment_distance_block(points, segments)
    from scipy.spatial import cKDTree

    midpoints = segments.mean(axis=1)
    half_longest = 0.5 * np.max(np.hypot(*(segments[:, 1] - segments[:, 0]).T))
    tree = cKDTree(midpoints)
    best = np.empty(points.shape[0])
    todo = np.arange(points.shape[0])
    for k in (24, 128):
        if todo.size == 0 or k >= count:
            break
        mid_dist, candidates = tree.query(points[todo], k=k)
        found = _candidate_distances(points[todo], segments, candidates)
        best[todo] = found
        todo = todo[found > mid_dist[:, -1] - half_longest]
    if todo.size:
        best[todo] = _segment_distance_block(points[todo], segments)
    return best


def reinitialize(phi, mesh):
    """Rebuild phi as the signed Euclidean distance to its zero contour.

    Returns (new field, True) or, when phi has uniform sign so there is
    no contour, (copy of phi, False).
    """
    interface = extract_interface(phi, mesh)
    if interface.empty:
        return np.array(phi, copy=True), False
    d = _distance_to_segments(mesh.nodes, interface.segments)
    return np.where(np.asarray(phi) < 0, -d, d), True


def _clip_polygon_negative(poly, vals):
    """Sutherland-Hodgman clip of a polygon to {linear value < 0}.

    poly: (M, 2) vertices, vals: (M, k) one or more linear functions
    evaluated at the vertices; channel 0 drives the clip and all
    channels are interpolated exactly at the crossings.
    """
    out_pts, out_vals = [], []
    m = len(poly)
    for i in range(m):
        j = (i + 1) % m
        pi, pj = poly[i], poly[j]
        vi, vj = vals[i], vals[j]
        if vi[0] < 0:
            out_pts.append(pi)
            out_vals.append(vi)
            if vj[0] >= 0:
                t = vi[0] / (vi[0] - vj[0])
                out_pts.append(pi + t * (pj - pi))
                out_vals.append(vi + t * (vj - vi))
        elif vj[0] < 0:
            t = vi[0] / (vi[0] - vj[0])
            out_pts.append(pi + t * (pj - pi))
            out_vals.append(vi + t * (vj - vi))
    if not out_pts:
        return np.empty((0, 2)), np.empty((0, vals.shape[1]))
    return np.asarray(out_pts), np.asarray(out_vals)


def _shoelace(poly):
    if poly.shape[0] < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def symmetric_difference_area(phi_a, phi_b, mesh):
    """Exact area of the symmetric difference of the two negative sets."""
    theta_a = negative_area_fraction(phi_a, mesh)
    theta_b = negative_area_fraction(phi_b, mesh)
    cut_a = (theta_a > 0) & (theta_a < 1)
    cut_b = (theta_b > 0) & (theta_b < 1)

    # overlap fraction; trivial unless both interfaces cross the element
    theta_ab = np.where(theta_b == 1.0, theta_a, np.where(theta_a == 1.0, theta_b, 0.0))

    both = np.nonzero(cut_a & cut_b)[0]
    va = np.asarray(phi_a)[mesh.triangles[both]]
    vb = np.asarray(phi_b)[mesh.triangles[both]]
    for idx, e in enumerate(both):
        if np.array_equal(va[idx], vb[idx]):
            theta_ab[e] = theta_a[e]
            continue
        poly = mesh.nodes[mesh.triangles[e]]
        vals = np.column_stack([va[idx], vb[idx]])
        poly1, vals1 = _clip_polygon_negative(poly, vals)
        poly2, _ = _clip_polygon_negative(poly1, vals1[:, ::-1])
        theta_ab[e] = _shoelace(poly2) / mesh.areas[e]

    return float(np.sum(mesh.areas * (theta_a + theta_b - 2.0 * theta_ab)))


def symmetric_difference_error(phi_r, phi_star, mesh):
    """Area of the mismatch with the reference set, relative to its area."""
    ref_area = float(np.sum(mesh.areas * negative_area_fraction(phi_star, mesh)))
    if ref_area <= 0.0:
        raise InvalidParameterError("reference inclusion has zero area")
    return symmetric_difference_area(phi_r, phi_star, mesh) / ref_area


@dataclass(frozen=True)
class SourceField:
    """Volume source with separate smooth profiles inside and outside."""

    inside: np.ndarray  # nodal values of the inside profile
    outside: np.ndarray

    def element_values(self, mesh, theta):
        tri = mesh.triangles
        f1 = np.asarray(self.inside)[tri].mean(axis=1)
        f0 = np.asarray(self.outside)[tri].mean(axis=1)
        return theta * f1 + (1.0 - theta) * f0

    def element_region_gradient(self, mesh, theta):
        """Gradient of whichever profile is active, area-fraction blended."""
        g1 = np.einsum("eik,ei->ek", mesh.grads, np.asarray(self.inside)[mesh.triangles])
        g0 = np.einsum("eik,ei->ek", mesh.grads, np.asarray(self.outside)[mesh.triangles])
        return theta[:, None] * g1 + (1.0 - theta[:, None]) * g0

    def jump_at(self, mesh, points):
        return interpolate(mesh, self.inside, points) - interpolate(mesh, self.outside, points)


def uniform_source(mesh, value):
    v = np.full(mesh.node_count, float(value))
    return SourceField(inside=v, outside=v)
