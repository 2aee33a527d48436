"""Greedy descent restricted to radial dictionaries.

Building blocks: weighted sequence spaces, convex energy models with
certified smoothness/ellipticity parameters, dictionary families with
norming constants, the greedy loop itself, and rate analysis utilities.
"""

from .vectorspace import SpaceVector, make_space_vector
from .energy import (
    EnergyModel,
    SmoothnessParams,
    check_gradient,
    estimate_ellipticity,
    estimate_smoothness,
    power_energy,
    plaplacian_energy,
    quadratic_energy,
    solve_reference,
)
from .dictionary import (
    ConeData,
    DictionaryModel,
    FiniteAtomData,
    SubspaceUnionData,
    build_neural_atoms,
    canonical_axis_atoms,
    cone_dictionary,
    finite_atoms_dictionary,
    full_space_dictionary,
    norming_constant_finite,
    subspace_norming_constant,
    subspace_union_dictionary,
    verify_norming,
)
from .greedy import (
    GreedyConfig,
    GreedyTrace,
    check_one_step_bound,
    check_orthogonality,
    check_telescoping,
    greedy_step,
    line_minimize,
    run_greedy,
)
from .analysis import (
    RateReport,
    beta_global,
    beta_local,
    exponential_factor,
    fit_rate,
    gap_sigma_constant,
    predicted_rate,
    sequence_bound,
)
from .config import ExperimentConfig, load_config, parse_config
from .runner import RunOutcome, execute_config, run_config_file

__version__ = "0.1.0"

__all__ = [
    "SpaceVector",
    "make_space_vector",
    "EnergyModel",
    "SmoothnessParams",
    "check_gradient",
    "estimate_ellipticity",
    "estimate_smoothness",
    "power_energy",
    "plaplacian_energy",
    "quadratic_energy",
    "solve_reference",
    "ConeData",
    "DictionaryModel",
    "FiniteAtomData",
    "SubspaceUnionData",
    "build_neural_atoms",
    "canonical_axis_atoms",
    "cone_dictionary",
    "finite_atoms_dictionary",
    "full_space_dictionary",
    "norming_constant_finite",
    "subspace_norming_constant",
    "subspace_union_dictionary",
    "verify_norming",
    "GreedyConfig",
    "GreedyTrace",
    "check_one_step_bound",
    "check_orthogonality",
    "check_telescoping",
    "greedy_step",
    "line_minimize",
    "run_greedy",
    "RateReport",
    "beta_global",
    "beta_local",
    "exponential_factor",
    "fit_rate",
    "gap_sigma_constant",
    "predicted_rate",
    "sequence_bound",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "RunOutcome",
    "execute_config",
    "run_config_file",
]
