"""Sturm-Liouville spectral problems on a lasso graph: forward enumeration,
the periodic inverse problem on the loop, and the partial inverse problem
recovering the loop potential from one branch of the spectrum."""

from .config import ExperimentConfig, PotentialSpec, load_config
from .errors import (
    AssumptionViolation,
    BracketingError,
    ComputationError,
    DegenerateSystemError,
    DivergedIntegrationError,
    IllConditionedError,
    IncompleteSubspectrumError,
    MultipleZeroError,
    NonConvergenceError,
    NumberingAmbiguityError,
    SpectralDataInconsistencyError,
    StageError,
    StiffnessError,
)
from .gridfn import GridFunction, l2_error_mod_constant
from .partial_inverse import (
    MomentRow,
    MomentSystem,
    ReconstructionResult,
    algorithm2,
    assemble_moment_system,
    build_v0_basis,
    gram_condition,
    reconstruct_h_d,
    solve_moment_problem,
    v0_closeness_partial_sums,
)
from .periodic_inverse import (
    PeriodicSpectralData,
    algorithm1,
    compute_H_at_nu,
    compute_norming_constants,
    compute_s21_at_nu,
    dirichlet_zeros,
    forward_spectral_data,
    gl_reconstruct,
    h_derivative,
    load_spectral_data,
    loop_dirichlet_spectrum,
    loop_evaluators,
    save_spectral_data,
)
from .quasi_ode import (
    EndpointData,
    check_wronskian,
    evaluate_solution_grid,
    integrate_fundamental,
    integrate_fundamental_many,
)
from .spectral_forward import (
    AssumptionReport,
    EigenIndex,
    LassoProblem,
    SignSequence,
    Subspectrum,
    asymptotic_residuals,
    check_assumptions,
    delta,
    delta0,
    delta_many,
    enumerate_eigenvalues,
    extract_subspectrum,
    solve_alpha,
)

__version__ = "0.1.0"
