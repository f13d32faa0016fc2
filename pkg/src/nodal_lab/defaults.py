"""Versioned defaults: tolerances and numeric knobs referenced by reports.

Every report row produced by the harness records ``TOLERANCES["version"]`` so
that archived CSV/JSON output remains interpretable after a retune.
"""

TOLERANCES = {
    "version": "1",
    # quadrature
    "quadrature_rel": 1e-12,
    # frequency module
    "frequency_exact": 1e-8,
    "degenerate_denominator": 1e-14,
    "decomposition_rel": 1e-6,
    "frequency_floor_factor": 1.6,
    # doubling module
    "doubling_exact": 1e-6,
    "changing_center_factor": 0.99,
    # nodal module
    "nodal_length_rel": 0.02,
    "grid_cauchy_rel": 0.01,
    "stratum_threshold": 1e-9,
    "cover_budget_factor": 0.5,
    # partition module
    "propagation_alpha_lo": 0.4,
    "propagation_alpha_hi": 0.6,
    # solver module
    "solver_residual": 1e-10,
    "convergence_ratio_lo": 3.5,
    "convergence_ratio_hi": 4.5,
}

# Numeric defaults shared between the CLI and the acceptance suite.
DEFAULTS = {
    "chart_radius": 1.0,
    "quadrature_margin": 8,      # rule degree = 2*poly degree + margin
    "degree_cap": 12,
    "r_grid_count": 40,
    "r_grid_lo": 0.05,
    "r_grid_hi": 0.8,
    "frequency_floor": 1.0,      # C0
    "sup_base_grid": 64,
    "sup_boundary_samples": 512,
    "sup_depth": 5,
    "cube_radii": 24,
    "contraction_c": 0.05,
}
