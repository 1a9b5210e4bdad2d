"""Numerical laboratory for non-stationary hyperbolic dynamics on T^2."""

from .torus import (
    wrap_point,
    wrap_diff,
    torus_dist,
    wrap_angle,
    proj_dist,
    direction_vector,
    angle_of,
    projective_action,
)
from .maps import (
    LinearMap,
    TrigPerturbedMap,
    BumpStretchMap,
    MapFamily,
    InverseSolveError,
    norm_report,
)
from .cones import ConeField, ConeReport, check_invariance, common_condition
from .transform import (
    Band,
    Section,
    DerivField,
    ContractionDiagnostics,
    FiberInvarianceError,
    ConvergenceError,
    graph_transform,
    derivative_transform,
    compose_prefix,
    cone_pullback,
    solve_section,
    default_band,
    section_to_csv,
    section_from_csv,
)
from .regularity import (
    Transversal,
    HolonomyResult,
    finite_diff_deriv,
    holder_exponent,
    integrate_leaf,
    holonomy,
    holonomy_field,
)
from .counterexample import (
    CounterexampleParams,
    build_family,
    verify_properties,
    blowup_experiment,
    fitted_growth_rate,
)
from .tracemap import (
    trace_map,
    fricke_vogt,
    spectrum_line,
    orbit_bounded,
    spectrum_scan,
    box_dimension,
    continued_fraction,
)

__version__ = "0.1.0"
