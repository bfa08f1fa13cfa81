"""Monte Carlo lab for the Wright-Fisher stochastic heat equation with
irregular drifts and its dual branching-coalescing Brownian particle system."""

from .drift import (DriftSpec, ValidationReport, binomial_coeffs,
                    check_condition, eval_drift, eval_truncated_drift,
                    validate)
from .duality import (DualityReport, estimate_indicator, estimate_moment_l,
                      estimate_rhs, verify_duality)
from .particles import (Label, RunSummary, bridge_local_time, label_less,
                        run_coupled_truncations, run_system,
                        sample_pair_local_time)
from .spde import (Domain, FieldState, InitialCondition, estimate_lhs,
                   simulate_field, step_field)
from .stats import MonteCarloEstimate

__all__ = [
    "DriftSpec", "ValidationReport", "binomial_coeffs", "check_condition",
    "eval_drift", "eval_truncated_drift", "validate",
    "DualityReport", "estimate_indicator", "estimate_moment_l",
    "estimate_rhs", "verify_duality",
    "Label", "RunSummary", "bridge_local_time", "label_less",
    "run_coupled_truncations", "run_system", "sample_pair_local_time",
    "Domain", "FieldState", "InitialCondition", "estimate_lhs",
    "simulate_field", "step_field",
    "MonteCarloEstimate",
]

__version__ = "0.1.0"
