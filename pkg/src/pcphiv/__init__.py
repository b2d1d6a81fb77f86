"""HIV/AIDS and PCP co-infection model toolkit."""

from .equilibria import PUBLISHED_INITIAL_STATE, EquilibriumReport, dfe, endemic_numeric
from .errors import (
    DomainError,
    InvalidParameterError,
    NumericalError,
    PcpHivError,
    ThresholdError,
)
from .integrator import IntegratorConfig, Trajectory, integrate, settle_to_equilibrium
from .model import (
    COMPARTMENTS,
    ModelVariant,
    ParameterSet,
    StateVector,
    derived_rates,
    force_hiv,
    force_pcp,
    vector_field,
)
from .reproduction import ngm, r0, r0_hiv_closed, r0_pcp_closed
from .scenarios import ScenarioSpec, baseline_parameters, load_config, run_scenario
from .sensitivity import Target, sensitivity_index, sensitivity_table
from .stability import castillo_chavez_check, local_stability, routh_hurwitz_hiv

__version__ = "0.1.0"
