"""Numerical laboratory for biharmonic functions: frequency and doubling
diagnostics, nodal-set measurement, cube partitions, and smallness
propagation, on flat and polar-perturbed metrics."""

from .polynomials import (
    BiharmonicFunction,
    HarmonicPolynomial,
    JetValues,
    almansi_compose,
    biharmonic_residual,
    circular_harmonic,
    evaluate_jet,
    function_from_dict,
    function_to_dict,
    harmonic_basis,
    random_biharmonic,
    random_family,
)
from .geometry import (
    Ball,
    Cube,
    PolarMetric,
    QuadratureRule,
    Simplex,
    ball_quadrature,
    cube_partition,
    simplex_geometry,
    sphere_quadrature,
)
from .frequency import (
    FrequencyProfile,
    GradientFrequencies,
    ProofDecomposition,
    doubling_check,
    frequency_components,
    gradient_frequencies,
    monotonicity_profile,
    proof_decomposition,
)
from .doubling import (
    CubeIndexReport,
    SupPair,
    changing_center_check,
    cube_index,
    doubling_index,
    frequency_index_relation,
    sup_on_ball,
)
from .nodal import (
    CoverReport,
    NodalCurveSet,
    StratumLabel,
    classify_strata,
    critical_cover,
    extract_nodal_curves,
    measure_h,
    nodal_bound_report,
    separation_stability,
    stratified_bound,
)
from .partition import (
    FCurve,
    PartitionReport,
    PropagationMember,
    PropagationReport,
    SimplexCheck,
    cauchy_propagation_experiment,
    dividing_scan,
    f_recursion,
    simplex_cover_check,
)
from .solver import (
    EllipticOperator,
    GridField,
    constant_coefficient_compare,
    solve_laplace,
    solve_split_biharmonic,
)
from .harness import (
    ExperimentConfig,
    ReportRow,
    emit_report,
    parse_config,
    run_experiment,
    verify_suite,
)

__version__ = "0.1.0"
