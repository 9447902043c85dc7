"""koopmankit: finite Koopman-invariant linear representations of nonlinear systems.

Closed-form lifts for benchmark systems, truncated Carleman linearization,
data-driven identification (DMD and sparse regression with subspace
refinement), Koopman eigenfunctions, and optimal control designed on the
lifted linear model benchmarked against standard LQR.
"""

from .control import (
    ComparisonResult,
    KoocController,
    LqrProblem,
    care_residual,
    closed_loop_cost,
    compare_lqr_kooc,
    kooc_synthesize,
    lqr_gain,
    pbh_unstabilizable_modes,
    solve_care,
)
from .dynamics import (
    CONTINUOUS,
    DISCRETE,
    PolySystem,
    Trajectory,
    builtin,
    eval_field,
    integrate,
    iterate,
    read_trajectory,
    registry_defaults,
    registry_info,
    registry_names,
    slow_manifold_field,
    write_trajectory,
)
from .exceptions import (
    BlowUp,
    DegenerateSpectrum,
    KoopmankitError,
    NotStabilizable,
    NumericsError,
)
from .identification import (
    DataSet,
    RefinementResult,
    SparseModel,
    dataset_from_trajectories,
    differentiate_series,
    dmd,
    estimate_derivatives,
    invariance_residual,
    load_sparse,
    refine_subspace,
    save_sparse,
    sindy,
    sparse_from_json,
    sparse_to_json,
)
from .lifting import (
    EXP_NEG_INV,
    KoopmanModel,
    ObservableLibrary,
    carleman_center,
    carleman_logistic,
    closure_residual,
    eval_library,
    eval_named_observable,
    lift_state,
    load_model,
    model_from_json,
    model_to_json,
    monomials,
    observable_advance,
    project_states,
    propagate,
    save_model,
    slow_manifold_lift_ct,
    slow_manifold_lift_dt,
    tu_lift,
)
from .numerics import EigenPairSet, eig, lstsq, pinv, svd
from .polynomials import Polynomial, format_polynomial, monomial_name
from .spectral import (
    Eigenfunction,
    eigenfunction_from_json,
    eigenfunction_to_json,
    eigenfunctions,
    rotate_model,
    rotation_matrix,
    save_eigenfunction,
    slow_subspace_slope,
    verify_eigenfunction,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUp",
    "CONTINUOUS",
    "ComparisonResult",
    "DISCRETE",
    "DataSet",
    "DegenerateSpectrum",
    "EXP_NEG_INV",
    "EigenPairSet",
    "Eigenfunction",
    "KoocController",
    "KoopmanModel",
    "KoopmankitError",
    "LqrProblem",
    "NotStabilizable",
    "NumericsError",
    "ObservableLibrary",
    "PolySystem",
    "Polynomial",
    "RefinementResult",
    "SparseModel",
    "Trajectory",
    "builtin",
    "care_residual",
    "carleman_center",
    "carleman_logistic",
    "closed_loop_cost",
    "closure_residual",
    "compare_lqr_kooc",
    "dataset_from_trajectories",
    "differentiate_series",
    "dmd",
    "eig",
    "eigenfunction_from_json",
    "eigenfunction_to_json",
    "eigenfunctions",
    "estimate_derivatives",
    "eval_field",
    "eval_library",
    "eval_named_observable",
    "format_polynomial",
    "integrate",
    "invariance_residual",
    "iterate",
    "kooc_synthesize",
    "lift_state",
    "load_model",
    "load_sparse",
    "lqr_gain",
    "lstsq",
    "model_from_json",
    "model_to_json",
    "monomial_name",
    "monomials",
    "observable_advance",
    "pbh_unstabilizable_modes",
    "pinv",
    "project_states",
    "propagate",
    "read_trajectory",
    "refine_subspace",
    "registry_defaults",
    "registry_info",
    "registry_names",
    "rotate_model",
    "rotation_matrix",
    "save_eigenfunction",
    "save_model",
    "save_sparse",
    "sparse_from_json",
    "sparse_to_json",
    "sindy",
    "slow_manifold_field",
    "slow_manifold_lift_ct",
    "slow_manifold_lift_dt",
    "slow_subspace_slope",
    "solve_care",
    "svd",
    "tu_lift",
    "verify_eigenfunction",
    "write_trajectory",
]
