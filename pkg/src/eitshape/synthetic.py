"""Synthetic measurement generation and the noise model.

Data are produced on a finer grid than the one used for inversion so
the two discretizations never share an error structure.  Noise is
Gaussian per current, scaled by the maximum of that current's clean
samples, and the achieved level is reported with the data.
"""

from dataclasses import replace

import numpy as np

from .errors import InvalidParameterError
from .forward import MeasurementSet, sample_measurements, solve_states
from .levelset import conductivity_from_levelset, phantom_to_levelset
from .mesh import DEFAULT_DIRICHLET_SEGMENTS, build_unit_square_mesh


def generate_measurements(
    phantom,
    currents,
    points,
    truth_resolution,
    sigma0=1.0,
    sigma1=10.0,
    dirichlet_segments=DEFAULT_DIRICHLET_SEGMENTS,
    method="auto",
):
    """Sample the clean potentials of a known inclusion at the given points."""
    mesh = build_unit_square_mesh(truth_resolution, dirichlet_segments)
    phi = phantom_to_levelset(phantom, mesh)
    sigma = conductivity_from_levelset(phi, sigma0, sigma1, mesh)
    states, _ = solve_states(mesh, sigma, currents, method=method)
    values = np.stack([sample_measurements(u, mesh, points) for u in states])
    return MeasurementSet(points=np.asarray(points, dtype=float), values=values)


def add_noise(measurements, delta, seed):
    """Corrupt each current by zero-mean Gaussian noise with standard
    deviation delta times that current's maximum absolute sample."""
    if delta < 0:
        raise InvalidParameterError(f"noise amplitude must be nonnegative, got {delta}")
    if delta == 0.0:
        return replace(measurements, values=measurements.values.copy(), delta=0.0, seed=seed, noise_level=0.0)
    rng = np.random.default_rng(seed)
    noisy = measurements.values.copy()
    for i in range(noisy.shape[0]):
        scale = delta * np.max(np.abs(measurements.values[i]))
        noisy[i] += rng.normal(0.0, scale, size=noisy.shape[1])
    level = noise_level(measurements.values, noisy)
    return replace(measurements, values=noisy, delta=delta, seed=seed, noise_level=level)


def noise_level(clean, noisy):
    """Ratio of summed per-current 2-norms: ||clean - noisy|| over ||clean||."""
    clean = np.atleast_2d(np.asarray(clean, dtype=float))
    noisy = np.atleast_2d(np.asarray(noisy, dtype=float))
    if clean.shape != noisy.shape:
        raise InvalidParameterError(f"shape mismatch: {clean.shape} vs {noisy.shape}")
    num = np.sum(np.linalg.norm(clean - noisy, axis=1))
    den = np.sum(np.linalg.norm(clean, axis=1))
    if den == 0.0:
        raise InvalidParameterError("clean measurements vanish; noise level undefined")
    return float(num / den)
