"""Mechanism selection for the two-species competition model via PINN-style fitting."""

__version__ = "0.1.0"

from .errors import BlowUp, ConfigError, IllConditioned, LVSelectError, NumericalOverflow  # noqa: E402
from .model import (  # noqa: E402
    FIG1A,
    FIG1B,
    PARAM_NAMES,
    AugmentParams,
    BaseParams,
    ParameterState,
    PhaseClass,
    active_parameter_count,
    classify_phase,
    coexistence_equilibrium,
    rhs_full,
)
from .ode import Dataset, Trajectory, generate_dataset, integrate, sample, trajectory_mse  # noqa: E402
from .selection import SelectionTrace, eliminate_smallest, run_selection, step_mse_series  # noqa: E402
from .surrogate import (  # noqa: E402
    LossWeights,
    SurrogateConfig,
    SurrogateWeights,
    grad_all,
    init_weights,
    mlp_forward,
    mlp_time_derivative,
)
from .trainer import FitResult, HyperParams, adam_step, fit, oracle_derivative_fit, pinn_loss  # noqa: E402
