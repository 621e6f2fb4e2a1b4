"""Finite-window models of left-invertible weighted composition operators.

The package builds truncated matrix models of weighted composition
operators and weighted shifts on directed trees, their Cauchy duals and
model subspaces, the two-sided coefficient model in which the operator
acts as multiplication by the variable, the reproducing kernel of the
model space in block-series and resolvent form, and the convergence
annulus, with every structural identity checked against brute-force
oracles.
"""

__version__ = "0.1.0"

from .dynamics import (
    DirectedTree,
    OrbitStructure,
    SystemSpec,
    WindowMeta,
    analyze_orbits,
    descendants,
    gen_range,
    iterate,
    k_phi,
    w_set,
)
from .operators import (
    TruncatedOperator,
    WanderingSubspace,
    adjoint_power_apply,
    build_composition,
    cauchy_dual,
    dense_cauchy_dual,
    gram_diagonal,
    is_left_invertible,
    null_space_adjoint,
    wandering_from_points,
    wandering_subspace,
)
from .model import (
    LaurentCoefficients,
    RadiiEstimate,
    check_li,
    check_prep,
    dual_model_coefficients,
    eigenrelation_check,
    estimate_radii,
    l_apply,
    laurent_coefficients,
    mz_apply,
    shimorin_coincidence,
    unitary_pairing,
)
from .kernel import (
    KernelBlocks,
    band_check,
    gram_psd_check,
    kernel_blocks,
    kernel_eval,
    kernel_eval_resolvent,
    reproducing_check,
    series_tail_bound,
)
from .config import JobConfig, load_config, parse_config
from .verify import Report, emit, run_verify

__all__ = [
    "__version__",
    "DirectedTree", "OrbitStructure", "SystemSpec", "WindowMeta",
    "analyze_orbits", "descendants", "gen_range", "iterate", "k_phi", "w_set",
    "TruncatedOperator", "WanderingSubspace", "adjoint_power_apply",
    "build_composition", "cauchy_dual", "dense_cauchy_dual", "gram_diagonal",
    "is_left_invertible", "null_space_adjoint", "wandering_from_points",
    "wandering_subspace",
    "LaurentCoefficients", "RadiiEstimate", "check_li", "check_prep",
    "dual_model_coefficients", "eigenrelation_check", "estimate_radii",
    "l_apply", "laurent_coefficients", "mz_apply", "shimorin_coincidence",
    "unitary_pairing",
    "KernelBlocks", "band_check", "gram_psd_check", "kernel_blocks",
    "kernel_eval", "kernel_eval_resolvent", "reproducing_check",
    "series_tail_bound",
    "JobConfig", "load_config", "parse_config",
    "Report", "emit", "run_verify",
]
