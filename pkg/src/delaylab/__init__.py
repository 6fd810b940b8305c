"""Delay consensus laboratory: profiles, integrators and certificates."""

from .analysis import (ConditionsCertificate, ConservedSeries,
                       ConvergenceResult, RazumikhinReport, ResidualSeries,
                       SweepReport, SweepRun, VerificationReport, analyze_run,
                       conserved_quantity, convergence_check,
                       drazin_inverse_diagonal, limiting_residual,
                       predicted_consensus_linear,
                       predicted_consensus_nonlinear, razumikhin_certificate,
                       residual_decay_factor, semistability_conditions,
                       semistability_sweep)
from .corpus import (SCENARIO_NAMES, builtin_scenario, builtin_scenarios,
                     evaluate_expectations)
from .delays import EXP_SIN_EXCESS, DelayProfile, max_bound
from .history import DenseTrajectory, HistoryFunction
from .integrator import (EulerResult, IntegrationConfig, IntegrationResult,
                         NonconvergentStepError, StepResult,
                         integrate, integrate_euler_reference, observed_order,
                         solution_at, step_rk4_dde, time_grid)
from .network import (ConsensusNetwork, LaplacianReport, Link, SystemMatrices,
                      build_system_matrices, rank_deficiency,
                      validate_laplacian_structure)
from .scenario import Expectations, Scenario, ScenarioError
from .systems import LimitingSystem, SystemRHS, limiting_of

__version__ = "0.1.0"

__all__ = [
    "ConditionsCertificate", "ConservedSeries", "ConvergenceResult",
    "RazumikhinReport", "ResidualSeries", "SweepReport", "SweepRun",
    "VerificationReport", "analyze_run", "conserved_quantity",
    "convergence_check", "drazin_inverse_diagonal", "limiting_residual",
    "predicted_consensus_linear", "predicted_consensus_nonlinear",
    "razumikhin_certificate", "residual_decay_factor",
    "semistability_conditions", "semistability_sweep",
    "SCENARIO_NAMES", "builtin_scenario", "builtin_scenarios",
    "evaluate_expectations",
    "EXP_SIN_EXCESS", "DelayProfile", "max_bound",
    "DenseTrajectory", "HistoryFunction",
    "EulerResult", "IntegrationConfig", "IntegrationResult",
    "NonconvergentStepError", "StepResult",
    "integrate", "integrate_euler_reference", "observed_order",
    "solution_at", "step_rk4_dde", "time_grid",
    "ConsensusNetwork", "LaplacianReport", "Link", "SystemMatrices",
    "build_system_matrices", "rank_deficiency", "validate_laplacian_structure",
    "Expectations", "Scenario", "ScenarioError",
    "LimitingSystem", "SystemRHS", "limiting_of",
    "__version__",
]
