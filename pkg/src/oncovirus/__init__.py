"""Oncolytic-virotherapy model: nonlocal delayed reaction-diffusion toolkit."""
from ._backend import BACKEND
from .errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    InputError,
    NumericalError,
    OncovirusError,
    UnsupportedConfigurationError,
)
from .model import (
    AssumptionReport,
    Gompertz,
    GridSpec,
    HollingII,
    Logistic,
    MassAction,
    ModelParams,
    eval_growth,
    eval_incidence,
    validate_assumptions,
)
from .kernel import Kernel, age_ladder, apply_kernel, build_kernel, build_kernel_semigroup, build_kernel_spectral
from .integrator import SimState, SimulationTrace, compute_infected_field, init_state, simulate, step
from .thresholds import EigenResult, lambda1_closed_form, lambda1_linear, s1_delayed, scalar_steady_state, sigma1
from .equilibria import (
    EquilibriumSet,
    HomogeneousParams,
    PersistenceBounds,
    Regime,
    classify_regime,
    find_constant_equilibria,
    persistence_lower_bounds,
    steady_state_residual,
)

__version__ = "0.1.0"
