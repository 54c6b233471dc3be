"""Fractional-order compartmental epidemic toolkit.

Simulation of an eight-compartment Caputo-order outbreak model with
vaccination, hospitalization and post-mortem transmission; reproduction
numbers, equilibria and stability; normalized sensitivities; and a
four-control optimal-intervention solver.
"""
from .analysis import (EquilibriumPoint, NGMatrices, RootFindingError,
                       SensitivityReport, StabilityResult,
                       disease_free_equilibrium, endemic_equilibrium, jacobian,
                       mittag_leffler, ngm_matrices, r0_closed_form,
                       r0_spectral, sensitivity_indices, stability_check)
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .control import (AdjointTrajectory, ControlSchedule, CostWeights,
                      SweepResult, adjoint_rhs, default_strategies,
                      forward_backward_sweep, objective, project_controls,
                      run_strategy)
from .integrators import (IntegrationError, IntegratorConfig, Trajectory,
                          abm_fractional_solve, rkf45_solve)
from .kernels import USING_COMPILED
from .model import (baseline_controls, force_of_infection, rhs_controlled,
                    rhs_uncontrolled)
from .params import CONTROL_BOUNDS, STATE_NAMES, ControlVector, ModelParams, State8
from .simulate import simulate_model

__version__ = "1.0.0"

__all__ = [
    "AdjointTrajectory", "CONTROL_BOUNDS", "ConfigError", "ControlSchedule",
    "ControlVector", "CostWeights", "EquilibriumPoint", "IntegrationError",
    "IntegratorConfig", "ModelParams", "NGMatrices", "RootFindingError",
    "STATE_NAMES", "ScenarioConfig", "SensitivityReport", "StabilityResult",
    "State8", "SweepResult", "Trajectory", "USING_COMPILED",
    "abm_fractional_solve", "adjoint_rhs", "baseline_controls",
    "default_strategies", "disease_free_equilibrium", "endemic_equilibrium",
    "force_of_infection", "forward_backward_sweep", "jacobian", "load_config",
    "mittag_leffler", "ngm_matrices", "objective", "parse_config",
    "project_controls", "r0_closed_form", "r0_spectral", "rhs_controlled",
    "rhs_uncontrolled", "rkf45_solve", "run_strategy", "sensitivity_indices",
    "simulate_model", "stability_check",
]
