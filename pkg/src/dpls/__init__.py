"""Differentially private distributed least squares: solvers and experiments."""

from .errors import (
    AdjacencyError,
    AssumptionError,
    CalibrationError,
    ConvergenceError,
    DivergenceError,
    DplsError,
    GraphError,
    HeadroomError,
    ShapeError,
    SingularError,
)
from .graph import Network, build_cycle, build_network, consensus_rate
from .mechanisms import (
    GTCalibration,
    PrivacyBudget,
    ShuffleCalibration,
    calibrate_gradient_tracking,
    calibrate_shuffle_consensus,
    delta_floor,
    gaussian_mechanism_delta,
    gaussian_mechanism_snr,
    trunc_laplace_cdf,
    trunc_laplace_sample,
    trunc_laplace_variance,
)
from .problem import (
    GlobalProblem,
    QuadraticCost,
    build_problem,
    exact_solution,
    pack_sensitive,
    random_problem,
    sym_to_vec,
    unpack_sensitive,
    vec_to_sym,
)
from .shuffle import ShuffleResult, plaintext_shuffle_oracle, run_shuffle
from .solvers import (
    SolveOutcome,
    average_consensus,
    gt_error_bound,
    solve_gradient_tracking,
    solve_noisy_consensus,
    solve_shuffle_consensus,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyError",
    "AssumptionError",
    "CalibrationError",
    "ConvergenceError",
    "DivergenceError",
    "DplsError",
    "GraphError",
    "HeadroomError",
    "ShapeError",
    "SingularError",
    "Network",
    "build_cycle",
    "build_network",
    "consensus_rate",
    "GTCalibration",
    "PrivacyBudget",
    "ShuffleCalibration",
    "calibrate_gradient_tracking",
    "calibrate_shuffle_consensus",
    "delta_floor",
    "gaussian_mechanism_delta",
    "gaussian_mechanism_snr",
    "trunc_laplace_cdf",
    "trunc_laplace_sample",
    "trunc_laplace_variance",
    "GlobalProblem",
    "QuadraticCost",
    "build_problem",
    "exact_solution",
    "pack_sensitive",
    "random_problem",
    "sym_to_vec",
    "unpack_sensitive",
    "vec_to_sym",
    "ShuffleResult",
    "plaintext_shuffle_oracle",
    "run_shuffle",
    "SolveOutcome",
    "average_consensus",
    "gt_error_bound",
    "solve_gradient_tracking",
    "solve_noisy_consensus",
    "solve_shuffle_consensus",
    "__version__",
]
