"""Simulator for laser-driven (N+1)-level systems with a fast-decaying
excited state, and for their closed-form slow reduction.

The package builds Lindblad master equations for Lambda-type systems,
derives the reduced slow equation on the ground manifold, integrates
both with a fixed-step RK4 scheme, and checks the error scaling of the
reduction against the time-scale separation parameter.
"""

__version__ = "0.1.0"

from .linalg import (
    DensityReport,
    basis_ket,
    commutator,
    dissipator,
    frobenius_distance,
    frobenius_norm,
    hermiticity_error,
    random_density,
    random_hermitian,
    random_unitary,
    validate_density,
)
from .models import (
    DriveSpec,
    LambdaParams,
    LindbladModel,
    ThreeScaleParams,
    build_three_scale,
    build_two_scale,
    effective_hamiltonian,
    generator_apply,
    liouvillian,
    output_full,
    rwa_effective,
    slow_timescale,
)
from .reduction import (
    ReducedModel,
    SlowFastSplit,
    as_lindblad,
    bright_dark_states,
    embed_ground,
    ground_block,
    merge,
    reconstruct_full,
    reduce_model,
    reduced_params,
    rho_f_first_order,
    slow_output,
    slow_timescale_of,
    split_slow_fast,
    standard_form,
)
from .tikhonov import (
    TikhonovSystem,
    expansion_residuals,
    fit_loglog_slope,
    herm_to_vec,
    manifold_first_order,
    manifold_second_order,
    reduced_vector_field,
    vec_to_herm,
    verify_expansion_order,
)
from .sim import (
    CompareResult,
    IntegrationError,
    SweepResult,
    Trajectory,
    auto_dt,
    compare_full_vs_slow,
    conservation_report,
    convergence_order,
    dt_max,
    epsilon_sweep,
    equilibrium_check,
    integrate,
    integrate_driven,
    rwa_comparison,
)
from .kernels import NUMBA_ENABLED, backend_name

__all__ = [
    "__version__",
    "DensityReport",
    "basis_ket",
    "commutator",
    "dissipator",
    "frobenius_distance",
    "frobenius_norm",
    "hermiticity_error",
    "random_density",
    "random_hermitian",
    "random_unitary",
    "validate_density",
    "DriveSpec",
    "LambdaParams",
    "LindbladModel",
    "ThreeScaleParams",
    "build_three_scale",
    "build_two_scale",
    "effective_hamiltonian",
    "generator_apply",
    "liouvillian",
    "output_full",
    "rwa_effective",
    "slow_timescale",
    "ReducedModel",
    "SlowFastSplit",
    "as_lindblad",
    "bright_dark_states",
    "embed_ground",
    "ground_block",
    "merge",
    "reconstruct_full",
    "reduce_model",
    "reduced_params",
    "rho_f_first_order",
    "slow_output",
    "slow_timescale_of",
    "split_slow_fast",
    "standard_form",
    "TikhonovSystem",
    "expansion_residuals",
    "fit_loglog_slope",
    "herm_to_vec",
    "manifold_first_order",
    "manifold_second_order",
    "reduced_vector_field",
    "vec_to_herm",
    "verify_expansion_order",
    "CompareResult",
    "IntegrationError",
    "SweepResult",
    "Trajectory",
    "auto_dt",
    "compare_full_vs_slow",
    "conservation_report",
    "convergence_order",
    "dt_max",
    "epsilon_sweep",
    "equilibrium_check",
    "integrate",
    "integrate_driven",
    "rwa_comparison",
    "NUMBA_ENABLED",
    "backend_name",
]
