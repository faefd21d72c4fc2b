"""LASSO-type sparse regression when the noise variance is unknown.

Two tuning strategies select the penalty jointly with the noise level: one
scales the penalty by the empirical residual variance (fixed-point
iteration), the other enforces a penalty-vs-fidelity trade-off at optimality
(safeguarded Newton).  Both are backed by an exact homotopy path with
closed-form tuning functions per segment, plus oracle estimators, theoretical
constants, and a seeded Monte Carlo harness.
"""

from .exceptions import (ConvergenceError, DegenerateBreakpointError,
                         GammaRangeError, PathRangeError, VlassoError)
from .experiments import (AggregateReport, EstimatorSpec, ExperimentConfig,
                          RecoveryReport, run_monte_carlo, run_trial)
from .lasso import (LassoPath, LassoSolution, OptimalityCertificate,
                    SolverConfig, check_generic_condition_local,
                    check_optimality, eval_path, homotopy_path, lazy_path,
                    solve_lasso, tau_threshold)
from .model import (DesignMatrix, GroundTruth, Observation, coherence,
                    gen_gaussian_design, gen_ground_truth, observe,
                    operator_norm)
from .oracle import (CpConditionReport, OracleResult, check_cp_conditions,
                     oracle_beta, oracle_lambda_a, oracle_lambda_b)
from .strategy_a import (TunedEstimate, cvar_admissible_interval, gamma_a,
                         tune_a, tune_fixed_point, tune_path_exact_a)
from .strategy_b import (gamma_b, gamma_b_derivative, tune_b, tune_newton,
                         tune_path_exact_b)
from .theory import (AssumptionReport, TheoryParams, bounds_a, bounds_b,
                     c_circ, check_assumptions, chi_tails, kappa,
                     model_constants)

__version__ = "0.1.0"

__all__ = [
    "AggregateReport", "AssumptionReport", "ConvergenceError",
    "CpConditionReport", "DegenerateBreakpointError", "DesignMatrix",
    "EstimatorSpec", "ExperimentConfig", "GammaRangeError", "GroundTruth",
    "LassoPath", "LassoSolution", "Observation", "OptimalityCertificate",
    "OracleResult", "PathRangeError", "RecoveryReport", "SolverConfig",
    "TheoryParams", "TunedEstimate", "VlassoError", "bounds_a", "bounds_b",
    "c_circ", "check_assumptions", "check_cp_conditions",
    "check_generic_condition_local", "check_optimality", "chi_tails",
    "coherence", "cvar_admissible_interval", "eval_path", "gamma_a",
    "gamma_b", "gamma_b_derivative", "gen_gaussian_design",
    "gen_ground_truth", "homotopy_path", "kappa", "lazy_path",
    "model_constants",
    "observe", "operator_norm", "oracle_beta", "oracle_lambda_a",
    "oracle_lambda_b", "run_monte_carlo", "run_trial", "solve_lasso",
    "tau_threshold", "tune_a", "tune_b", "tune_fixed_point", "tune_newton",
    "tune_path_exact_a", "tune_path_exact_b",
]
