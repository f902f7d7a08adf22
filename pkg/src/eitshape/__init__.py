"""Level-set reconstruction of conductivity inclusions from point
measurements of the electric potential on the boundary of the unit square."""

from .adjoint import ResidualSet, compute_residuals, solve_adjoint, solve_adjoints
from .config import InversionConfig, load_config, parse_phantom_spec
from .forward import (
    CurrentPattern,
    MeasurementSet,
    SideProfile,
    measurement_points,
    sample_measurements,
    solve_state,
    solve_states,
    standard_currents,
)
from .inversion import (
    InversionResult,
    IterationRecord,
    compute_weights,
    run_inversion,
    write_history_csv,
)
from .levelset import (
    Ellipse,
    Phantom,
    Polygon,
    advect_levelset,
    circle,
    conductivity_from_levelset,
    extract_interface,
    negative_area_fraction,
    phantom_to_levelset,
    reinitialize,
    symmetric_difference_error,
)
from .mesh import StructuredMesh, build_unit_square_mesh, classify_boundary, interpolate, locate_point
from .presets import SCENARIOS, get_scenario
from .shape_gradient import (
    ShapeDerivative,
    boundary_dj,
    boundary_expression,
    build_shape_derivative,
    eval_dj,
    seeded_smooth_field,
    solve_descent_field,
)
from .synthetic import add_noise, generate_measurements, noise_level

__version__ = "0.1.0"
