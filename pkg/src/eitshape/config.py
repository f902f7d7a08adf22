"""Experiment configuration: dataclass defaults plus INI-style files.

A configuration file is a key-value text file with sections mesh,
physics, currents, measurements, noise, descent, optimizer and
scenario.  Every key has a default except the scenario name; inclusion
geometries can be written inline with a small grammar:

    phantom = ellipse 0.6 0.7 0.144 0.08; circle 0.2 0.65 0.08
    initial_guess = circle 0.5 0.5 0.2
    phantom = polygon 0.3 0.2  0.7 0.2  0.5 0.8

(polygon vertices are x y pairs, counterclockwise).
"""

import configparser
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .levelset import Ellipse, Phantom, Polygon, circle
from .presets import get_scenario


def _default_initial_guess():
    return Phantom((circle((0.5, 0.5), 0.2),))


@dataclass
class InversionConfig:
    # mesh
    n: int = 128
    truth_n: int = 0  # 0 means twice the inversion resolution
    # physics
    sigma0: float = 1.0
    sigma1: float = 10.0
    # currents
    current_count: int = 0  # 0 means the scenario default
    ramp_width: float = 0.1
    # measurements
    spacing: float = 0.05
    # noise
    delta: float = 0.0
    seed: int = 0
    # descent
    alpha1: float = 0.3
    alpha2: float = 0.7
    # optimizer
    max_iterations: int = 300
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_step_cells: float = 2.0
    step_tolerance: float = 1e-8
    plateau_window: int = 10
    plateau_rtol: float = 1e-5
    reinit_period: int = 5
    snapshot_every: int = 0
    solver_method: str = "auto"
    solver_tol: float = 1e-10
    # scenario
    scenario: str = ""
    phantom: Phantom | None = None
    initial_guess: Phantom = field(default_factory=_default_initial_guess)

    def resolved_truth_n(self):
        return self.truth_n if self.truth_n else 2 * self.n

    def resolved_current_count(self):
        if self.current_count:
            return self.current_count
        if self.phantom is not None and not self.scenario:
            return 3
        return get_scenario(self.scenario).current_count

    def truth_phantom(self):
        if self.phantom is not None:
            return self.phantom
        return get_scenario(self.scenario).phantom

    def initial_phantom(self):
        return self.initial_guess

    def validate(self):
        checks = [
            (self.n >= 1, "mesh.n must be at least 1"),
            (self.truth_n >= 0, "mesh.truth_n must be nonnegative"),
            (self.sigma0 > 0 and self.sigma1 > 0, "physics.sigma0 and physics.sigma1 must be positive"),
            (self.spacing > 0, "measurements.spacing must be positive"),
            (self.delta >= 0, "noise.delta must be nonnegative"),
            (self.alpha1 >= 0 and self.alpha2 > 0, "descent.alpha1 must be >= 0 and descent.alpha2 > 0"),
            (self.max_iterations >= 1, "optimizer.max_iterations must be at least 1"),
            (0 < self.armijo_c < 1, "optimizer.armijo_c must lie in (0, 1)"),
            (0 < self.backtrack_factor < 1, "optimizer.backtrack_factor must lie in (0, 1)"),
            (self.max_step_cells > 0, "optimizer.max_step_cells must be positive"),
            (self.step_tolerance > 0, "optimizer.step_tolerance must be positive"),
            (self.plateau_rtol > 0, "optimizer.plateau_rtol must be positive"),
            (self.reinit_period >= 0, "optimizer.reinit_period must be nonnegative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.phantom is None:
            get_scenario(self.scenario)  # raises with the preset list
        count = self.resolved_current_count()
        if count not in (3, 7):
            raise ConfigError(f"currents.count must be 3 or 7, got {count}")
        return self


_SCHEMA = {
    "mesh": {"n": int, "truth_n": int},
    "physics": {"sigma0": float, "sigma1": float},
    "currents": {"count": ("current_count", int), "ramp_width": float},
    "measurements": {"spacing": float},
    "noise": {"delta": float, "seed": int},
    "descent": {"alpha1": float, "alpha2": float},
    "optimizer": {
        "max_iterations": int,
        "armijo_c": float,
        "backtrack_factor": float,
        "max_step_cells": float,
        "step_tolerance": float,
        "plateau_window": int,
        "plateau_rtol": float,
        "reinit_period": int,
        "snapshot_every": int,
        "solver_method": str,
        "solver_tol": float,
    },
    "scenario": {
        "name": ("scenario", str),
        "phantom": ("phantom", "phantom"),
        "initial_guess": ("initial_guess", "phantom"),
    },
}


def parse_phantom_spec(text):
    """Parse the inline inclusion grammar: semicolon-separated primitives."""
    primitives = []
    for chunk in text.replace("\n", " ").split(";"):
        tokens = chunk.split()
        if not tokens:
            continue
        kind, args = tokens[0].lower(), tokens[1:]
        try:
            values = [float(t) for t in args]
        except ValueError as exc:
            raise ConfigError(f"phantom entry {chunk.strip()!r}: {exc}") from None
        if kind == "ellipse" and len(values) == 4:
            primitives.append(Ellipse(center=(values[0], values[1]), semiaxes=(values[2], values[3])))
        elif kind == "circle" and len(values) == 3:
            primitives.append(circle((values[0], values[1]), values[2]))
        elif kind == "polygon" and len(values) >= 6 and len(values) % 2 == 0:
            primitives.append(Polygon(np.asarray(values).reshape(-1, 2)))
        else:
            raise ConfigError(
                f"phantom entry {chunk.strip()!r} is not 'ellipse cx cy ax ay', "
                "'circle cx cy r' or 'polygon x y x y ...'"
            )
    if not primitives:
        raise ConfigError("phantom specification is empty")
    return Phantom(tuple(primitives))


def load_config(path):
    """Read a configuration file into an InversionConfig and validate it."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as handle:
            parser.read_file(handle, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, raw in parser.items(section):
            spec = _SCHEMA[section].get(key)
            if spec is None:
                raise ConfigError(f"unknown field '{key}' in section [{section}] of {path}")
            if isinstance(spec, tuple):
                attr, conv = spec
            else:
                attr, conv = key, spec
            if conv == "phantom":
                values[attr] = parse_phantom_spec(raw)
            else:
                try:
                    values[attr] = conv(raw)
                except ValueError:
                    raise ConfigError(
                        f"field '{key}' in section [{section}] has invalid value {raw!r}"
                    ) from None

    if "scenario" not in values and "phantom" not in values:
        raise ConfigError(f"configuration {path} is missing the required field [scenario] name")
    return InversionConfig(**values).validate()


def config_summary(config):
    pairs = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, Phantom) or value is None:
            continue
        pairs.append(f"{f.name}={value}")
    return " ".join(pairs)
