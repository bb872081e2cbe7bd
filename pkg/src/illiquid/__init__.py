"""Optimal investment/consumption with one illiquid asset under proportional
transaction costs, via an internal (shadow) price built from a free-boundary
ODE, plus Monte Carlo verification of that construction."""

from .errors import (AssumptionViolated, BracketingFailed, DegenerateLiquidity,
                     EventNotFound, MultipleRoots, NonpositiveWealth,
                     NumericalBreakdown, OutOfDomain, PositivityViolated,
                     RegionExit, Singularity, StepRejected, TailTooFat,
                     ToleranceNotMet, ValidationError)
from .model import (CONFIG_KEYS, DerivedConstants, MarketParams, Regime,
                    frictionless_value, load_config, merton_point,
                    params_from_mapping, validate)
from .coeffs import (OptimizerValues, QuadCoeffs, abc, f_rhs, gamma_curve,
                     optimizers, shadow_ratios)
from .fbsolver import (FreeBoundarySolution, constraint_integral,
                       integrate_from, ode_residual, shoot)
from .policy import (AsymptoticCoeffs, InitialTrade, PolicySurface,
                     asymptotic_coeffs, build_policy, no_trade_band,
                     policy_summary, value, write_policy_csv,
                     write_solution_csv)
from .sim import (BudgetReport, SimConfig, SimulatedPaths, mc_verify_budget,
                  mc_verify_g, simulate)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated", "BracketingFailed", "DegenerateLiquidity",
    "EventNotFound", "MultipleRoots", "NonpositiveWealth",
    "NumericalBreakdown", "OutOfDomain", "PositivityViolated", "RegionExit",
    "Singularity", "StepRejected", "TailTooFat", "ToleranceNotMet",
    "ValidationError",
    "CONFIG_KEYS", "DerivedConstants", "MarketParams", "Regime",
    "frictionless_value", "load_config", "merton_point",
    "params_from_mapping", "validate",
    "OptimizerValues", "QuadCoeffs", "abc", "f_rhs", "gamma_curve",
    "optimizers", "shadow_ratios",
    "FreeBoundarySolution", "constraint_integral", "integrate_from",
    "ode_residual", "shoot",
    "AsymptoticCoeffs", "InitialTrade", "PolicySurface", "asymptotic_coeffs",
    "build_policy", "no_trade_band", "policy_summary", "value",
    "write_policy_csv", "write_solution_csv",
    "BudgetReport", "SimConfig", "SimulatedPaths", "mc_verify_budget",
    "mc_verify_g", "simulate",
    "__version__",
]
