"""Spectral laboratory for invariant graphs of parabolic evolution problems.

The package builds attracting invariant graphs over a finite block of slow
modes by backward Duhamel iteration, solves for their derivative fields,
certifies Lipschitz and Hoelder regularity, and measures how the graphs move
under spectral and nonlinear perturbations against the theoretical envelopes.
"""
from .config import (
    ExperimentConfig,
    Laboratory,
    build_lab,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
)
from .errors import (
    AdmissibilityError,
    CertificationError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    GapViolationError,
    ImlabError,
    OverflowGuardError,
)
from .gap_analysis import (
    GapReport,
    check_gap,
    exponents,
    find_admissible_m,
    gap_report,
    m0_bound,
    margin_erosion,
    theta0,
    theta1,
    theta_tilde,
)
from .lyapunov_perron import (
    DerivativeField,
    DerivativeResult,
    GraphFunction,
    ManifoldResult,
    SolveSettings,
    apply_D,
    apply_T,
    dump_field_csv,
    dump_graph_csv,
    holder_certificate,
    integrate_Theta,
    integrate_p_backward,
    lipschitz_certificate,
    load_graph_csv,
    solve_derivative,
    solve_manifold,
)
from .nonlinearity import (
    CosineBase,
    CutoffNonlinearity,
    PerturbedNonlinearityPair,
    SineBase,
    certify_constants,
    constant_map,
    holder_quotient_of_derivative,
    rho_eps,
    zero_map,
)
from .perturbation_harness import (
    C1ThetaDistance,
    DistanceReport,
    SolvedMember,
    beta_eps,
    c1_distance,
    c1theta_distance,
    derivative_mismatch,
    holder_seminorm_of_difference,
    instantiate,
    rate_study,
    rho_of,
    solve_member,
    sup_distance,
    tau_eps,
    theta_comparison,
)
from .spectral_core import (
    CoordIso,
    ExtensionPair,
    SpectralProblem,
    alpha_norm,
    alpha_norm_batch,
    certify_kappa,
    coord_iso_for_pair,
    identity_pair,
    mode_mixing_pair,
    norm_equivalence_delta,
    resolvent_deficiency,
    spectrum_from_rule,
)
from .suites import ALL_SUITES, SuiteResult, run_suites

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
