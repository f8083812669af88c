"""Numerical laboratory for the geometry of inextensible planar curves."""

from .errors import (
    CflViolation,
    ConfigInvalid,
    DegenerateImmersion,
    DriftBudgetExceeded,
    FlatCurve,
    LengthMismatch,
    OddNodeCount,
    ParallelSection,
    ReconstructionDrift,
    SolveFailure,
    WhipGeoError,
)
from .dynamics import (
    GeodesicTrajectory,
    WhipState,
    diagnostics,
    exp_map,
    integrate_geodesic,
    integrate_periodic,
    rhs,
    step_rk4,
)
from .linearized import (
    JacobiState,
    ModeRecord,
    conjugate_time,
    critical_omega,
    dexp_fd,
    min_singular_dexp,
    mode_amplitude_series,
    mode_seed,
    rotating_rod_mode,
    solve_jacobi,
)
from .geometry import (
    SectionReport,
    curvature_unboundedness_probe,
    periodic_curvature_bound,
    second_fundamental_sigma,
    sectional_curvature,
)
from .shape_metrics import (
    MetricKind,
    MMGeodesicState,
    MMGeodesicTrajectory,
    chord_lower_bound,
    dphi,
    metric_inner,
    mm_geodesic_integrate,
    modified_invariant_inner,
    path_length,
    reparametrize_unit_speed,
    zigzag_experiment,
)
from .serialize import (
    conjugate_report,
    curvature_sweep_to_csv,
    curve_from_csv,
    curve_from_json,
    curve_to_csv,
    curve_to_json,
    diagnostics_to_csv,
    field_from_csv,
    field_from_json,
    field_to_csv,
    field_to_json,
    green_to_csv,
    mm_trajectory_to_csv,
    mode_series_to_csv,
    summary_to_json,
    table_to_csv,
    trajectory_to_csv,
)
from .families import (
    chart_tangent_field,
    circle_curve,
    circle_state,
    exact_tangent_field,
    periodic_state,
    perturbed_circle,
    polish_unit_speed,
    random_even_theta,
    random_smooth_curve,
    random_state,
    rod_state,
    rod_tension_exact,
    rotating_circle_exact,
    rotating_rod_exact,
    straight_rod,
)
from .grid_curves import (
    AngularField,
    BoundaryKind,
    Curve,
    Grid,
    Symmetry,
    VectorField,
    angular_to_velocity,
    check_compatibility,
    cumulative_from_center,
    curve_to_theta,
    d1_matrix,
    derivative,
    energy_norm,
    enforce_odd,
    exp_chart,
    integrate,
    log_chart,
    make_grid,
    odd_violation,
    perp,
    quadrature_weights,
    signed_curvature,
    tangency_project,
    theta_to_curve,
    velocity_to_angular,
    weighted_norm,
    weighted_sup,
)
from .tension import (
    GreenMatrix,
    TensionField,
    curvature_potential,
    cyclic_solve,
    dirichlet_solve,
    green_bounds_check,
    green_matrix,
    half_interval_rho,
    orthogonal_project,
    periodic_phi,
    solve_tension_fixed_free,
    solve_tension_free_length,
    solve_tension_periodic,
)

__version__ = "0.1.0"
