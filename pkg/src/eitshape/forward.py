"""Boundary currents, state solves and point sampling of the potential.

Current patterns are defined side by side on the unit square: either a
constant per side or a two-level profile split at the side midpoint
with a linear ramp.  The state problem is the conductivity equation
with flux data on the active boundary and a grounded strip, solved with
P1 elements.
"""

import io
from dataclasses import dataclass

import numpy as np

from . import fem
from .errors import DataMismatchError, InvalidParameterError
from .mesh import DEFAULT_DIRICHLET_SEGMENTS, SIDES, interpolate

_TOL = 1e-9


@dataclass(frozen=True)
class SideProfile:
    """Two-level profile along one side: low below the midpoint, high above,
    linear ramp of total width `ramp` centered at 0.5."""

    low: float
    high: float
    ramp: float = 0.1

    def value(self, along):
        along = np.asarray(along, dtype=float)
        half = 0.5 * self.ramp
        if self.ramp == 0.0:
            return np.where(along > 0.5, self.high, self.low)
        t = np.clip((along - (0.5 - half)) / self.ramp, 0.0, 1.0)
        return self.low + (self.high - self.low) * t


@dataclass(frozen=True)
class CurrentPattern:
    """Boundary flux, one entry per side in the order left, right, upper, lower."""

    index: int
    sides: tuple  # float or SideProfile per side

    def __post_init__(self):
        if len(self.sides) != 4:
            raise InvalidParameterError("a current pattern needs one entry per side")
        for entry in self.sides:
            bound = max(abs(entry.low), abs(entry.high)) if isinstance(entry, SideProfile) else abs(entry)
            if bound > 1.0 + 1e-12:
                raise InvalidParameterError("current pattern values must be bounded by 1")

    def value(self, side, along):
        """Evaluate on one side at coordinate(s) along it (y for left/right, x otherwise)."""
        entry = self.sides[SIDES.index(side)]
        if isinstance(entry, SideProfile):
            return entry.value(along)
        return np.full_like(np.asarray(along, dtype=float), float(entry))

    def at(self, point):
        """Evaluate at a boundary point, inferring the side (corners pick
        the vertical side)."""
        x, y = point
        if abs(x) <= _TOL:
            return float(self.value("left", np.array([y]))[0])
        if abs(x - 1.0) <= _TOL:
            return float(self.value("right", np.array([y]))[0])
        if abs(y - 1.0) <= _TOL:
            return float(self.value("upper", np.array([x]))[0])
        if abs(y) <= _TOL:
            return float(self.value("lower", np.array([x]))[0])
        raise InvalidParameterError(f"point {point} is not on the boundary")


def standard_currents(count, ramp_width=0.1):
    """The stock current patterns: three global sign patterns, optionally
    followed by four single-side dipoles with a smoothing ramp."""
    if count not in (3, 7):
        raise InvalidParameterError(f"current count must be 3 or 7, got {count}")
    # order: left, right, upper, lower
    patterns = [
        CurrentPattern(1, (1.0, 1.0, -1.0, -1.0)),
        CurrentPattern(2, (1.0, -1.0, 1.0, -1.0)),
        CurrentPattern(3, (1.0, -1.0, -1.0, 1.0)),
    ]
    if count == 7:
        if not 0.0 < ramp_width <= 0.2:
            raise InvalidParameterError(f"ramp width must be in (0, 0.2], got {ramp_width}")
        dipole = SideProfile(low=-1.0, high=1.0, ramp=ramp_width)
        for i, side in enumerate(("left", "right", "upper", "lower")):
            sides = [0.0, 0.0, 0.0, 0.0]
            sides[SIDES.index(side)] = dipole
            patterns.append(CurrentPattern(4 + i, tuple(sides)))
    return patterns


def solve_state(mesh, sigma, g, f_elem=None, operator=None, tol=1e-10, method="auto"):
    """Solve the conductivity equation for one current pattern.

    Returns the nodal potential; it vanishes on the grounded nodes.  A
    prebuilt DirichletSolver for the same stiffness matrix can be passed
    to amortize the factorization over several currents.
    """
    if operator is None:
        matrix = fem.assemble_scalar_stiffness(mesh, sigma)
        operator = fem.DirichletSolver(matrix, mesh.dirichlet_nodes, method=method, tol=tol)
    rhs = fem.assemble_boundary_flux(mesh, g)
    if f_elem is not None:
        rhs = rhs + fem.assemble_volume_source(mesh, f_elem)
    return operator.solve(rhs)


def solve_states(mesh, sigma, currents, f_elem=None, tol=1e-10, method="auto"):
    """Solve all currents against one factorization of the stiffness matrix."""
    matrix = fem.assemble_scalar_stiffness(mesh, sigma)
    operator = fem.DirichletSolver(matrix, mesh.dirichlet_nodes, method=method, tol=tol)
    states = [solve_state(mesh, sigma, g, f_elem=f_elem, operator=operator) for g in currents]
    return states, operator


def sample_measurements(u, mesh, points):
    """P1 interpolation of a nodal potential at the measurement points."""
    return interpolate(mesh, u, points)


def measurement_points(spacing, dirichlet_segments=DEFAULT_DIRICHLET_SEGMENTS):
    """Boundary sampling points at a fixed spacing along all four sides.

    Points on the grounded segments (closed) are removed and corner
    duplicates dropped; sides are walked left, right, lower, upper, each
    by increasing coordinate, so the order is reproducible.
    """
    k = round(1.0 / spacing)
    if abs(k * spacing - 1.0) > _TOL:
        raise InvalidParameterError(f"spacing {spacing} does not divide the side length 1")
    coords = np.arange(k + 1) * spacing
    sides = [
        np.column_stack([np.zeros(k + 1), coords]),
        np.column_stack([np.ones(k + 1), coords]),
        np.column_stack([coords, np.zeros(k + 1)]),
        np.column_stack([coords, np.ones(k + 1)]),
    ]
    pts = np.vstack(sides)

    keep = np.ones(pts.shape[0], dtype=bool)
    for a, b in dirichlet_segments:
        lo = np.minimum(a, b) - _TOL
        hi = np.maximum(a, b) + _TOL
        keep &= ~np.all((pts >= lo) & (pts <= hi), axis=1)
    pts = pts[keep]

    seen = set()
    unique = []
    for p in pts:
        key = (round(p[0] / _TOL), round(p[1] / _TOL))
        if key not in seen:
            seen.add(key)
            unique.append(p)
    return np.asarray(unique)


@dataclass
class MeasurementSet:
    """Point locations with per-current sampled potentials and noise metadata."""

    points: np.ndarray  # (K, 2)
    values: np.ndarray  # (I, K)
    delta: float = 0.0
    seed: int | None = None
    noise_level: float = 0.0

    @property
    def point_count(self):
        return self.points.shape[0]

    @property
    def current_count(self):
        return self.values.shape[0]

    def to_csv(self, path):
        with open(path, "w") as handle:
            handle.write(self.to_csv_text())

    def to_csv_text(self):
        out = io.StringIO()
        out.write(f"# delta = {self.delta:.17g}\n")
        out.write(f"# seed = {'' if self.seed is None else self.seed}\n")
        out.write(f"# noise_level = {self.noise_level:.17g}\n")
        headers = ", ".join(["x", "y"] + [f"h_{i + 1}" for i in range(self.current_count)])
        out.write(headers + "\n")
        for k in range(self.point_count):
            row = [self.points[k, 0], self.points[k, 1]] + list(self.values[:, k])
            out.write(", ".join(f"{v:.17g}" for v in row) + "\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, path):
        meta = {"delta": 0.0, "seed": None, "noise_level": 0.0}
        rows = []
        header = None
        with open(path) as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key in ("delta", "noise_level"):
                        meta[key] = float(value)
                    elif key == "seed":
                        meta[key] = int(value) if value else None
                    continue
                if header is None:
                    header = [c.strip() for c in line.split(",")]
                    continue
                rows.append([float(c) for c in line.split(",")])
        if header is None or not rows:
            raise DataMismatchError(f"measurement file {path} has no data rows")
        expected = ["x", "y"] + [f"h_{i + 1}" for i in range(len(header) - 2)]
        if header != expected:
            raise DataMismatchError(f"measurement file {path} has malformed header {header}")
        data = np.asarray(rows)
        return cls(
            points=data[:, :2],
            values=data[:, 2:].T.copy(),
            delta=meta["delta"],
            seed=meta["seed"],
            noise_level=meta["noise_level"],
        )
