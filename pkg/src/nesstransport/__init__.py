"""Non-equilibrium steady-state transport through a finite sample coupled to
semi-infinite tight-binding leads: scattering matrix, Landauer-Buttiker
currents, Levitov full counting statistics, and exact finite-lattice and
Fock-space oracles."""
from .errors import ComputationError, InvalidInput, TransportError
from .fcs import CountingField, cumulant_generating, current_from_fcs, rate_function
from .model import (
    EquilibriumRef,
    LeadCoupling,
    ReservoirParams,
    SampleSpec,
    SystemSpec,
    bound_states,
    build_system,
    is_time_reversal_invariant,
)
from .scattering import on_shell_s_matrix, s_matrices, transmittances
from .transport import all_currents, current_report, onsager_matrix, steady_current

__version__ = "0.1.0"

__all__ = [
    "ComputationError",
    "CountingField",
    "EquilibriumRef",
    "InvalidInput",
    "LeadCoupling",
    "ReservoirParams",
    "SampleSpec",
    "SystemSpec",
    "TransportError",
    "all_currents",
    "bound_states",
    "build_system",
    "cumulant_generating",
    "current_from_fcs",
    "current_report",
    "is_time_reversal_invariant",
    "on_shell_s_matrix",
    "onsager_matrix",
    "rate_function",
    "s_matrices",
    "steady_current",
    "transmittances",
]
