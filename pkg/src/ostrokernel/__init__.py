"""One-cell path-integral kernels for first- and second-order Lagrangians.

The package builds derivative jets of Lagrangians with dual numbers, forms
Legendre and Ostrogradsky Hamiltonians, evaluates one-cell actions, solves the
stationary-phase conditions with their Gaussian normalizations and propagates
wave functions on periodic grids with symbol and kernel steppers.
"""

from .cell import action_expansion1, action_expansion2, action_quadrature, cubic_cell, linear_cell
from .config import load_config, shipped_scenarios
from .convergence import ConvergenceReport, fit_slope
from .errors import (
    ConfigError,
    DomainError,
    EvaluationError,
    IntegrationBlowUp,
    InversionError,
    NormBlowUp,
    OstroError,
    SingularLagrangianError,
    StationaryPointError,
)
from .jet import Lagrangian1, Lagrangian2, builtin_lagrangian, eval_jet1, eval_jet2, expression_lagrangian
from .legendre import (
    check_canonical_equivalence,
    hamiltonian1,
    hamiltonian2,
    invert_momentum1,
    invert_p1,
    invert_p2,
    ostrogradsky_map,
)
from .pipelines import run_config
from .propagator import (
    WaveGrid1D,
    WaveGrid2D,
    analytic_reference,
    apply_symbol1,
    apply_symbol2,
    evolve,
    kernel_step1,
    kernel_step2,
    make_stepper,
)
from .stationary import norm1, norm2, solve_sp1, solve_sp2

__version__ = "0.1.0"

__all__ = [
    "action_expansion1",
    "action_expansion2",
    "action_quadrature",
    "cubic_cell",
    "linear_cell",
    "load_config",
    "shipped_scenarios",
    "ConvergenceReport",
    "fit_slope",
    "ConfigError",
    "DomainError",
    "EvaluationError",
    "IntegrationBlowUp",
    "InversionError",
    "NormBlowUp",
    "OstroError",
    "SingularLagrangianError",
    "StationaryPointError",
    "Lagrangian1",
    "Lagrangian2",
    "builtin_lagrangian",
    "eval_jet1",
    "eval_jet2",
    "expression_lagrangian",
    "check_canonical_equivalence",
    "hamiltonian1",
    "hamiltonian2",
    "invert_momentum1",
    "invert_p1",
    "invert_p2",
    "ostrogradsky_map",
    "run_config",
    "WaveGrid1D",
    "WaveGrid2D",
    "analytic_reference",
    "apply_symbol1",
    "apply_symbol2",
    "evolve",
    "kernel_step1",
    "kernel_step2",
    "make_stepper",
    "norm1",
    "norm2",
    "solve_sp1",
    "solve_sp2",
]
