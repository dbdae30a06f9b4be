"""Exact small-scale checks of area laws and mutual-information bounds for
thermal lattice states, finitely correlated states and Gibbs tensor networks."""

from .qstate import (
    CapExceededError,
    DensityMatrix,
    Observable,
    SiteSpace,
    fannes_bound,
    partial_trace,
    shannon_entropy,
    trace_norm_distance,
    von_neumann_entropy,
)
from .measures import (
    Bipartition,
    ShellGeometry,
    block_entropy_profile,
    check_correlator_bound,
    check_shell_chain,
    connected_correlator,
    mutual_information,
    relative_entropy,
    ring_mi_increments,
    xi_m_estimate,
)
from .lattice import LatticeHamiltonian, Term, model_preset
from .thermal import BoundarySplit, GibbsState, build_gibbs, classical_area_check, quantum_thermal_area_check
from .fcs import FcsDescriptor, QuantumChannel, channel_preset, separated_block_state, transfer_spectrum
from .gibbs_peps import build_gibbs_tensor_1d, build_gibbs_tensor_2d, operator_schmidt
from .singlet import SingletModel, scaling_analysis

__all__ = [
    "Bipartition",
    "BoundarySplit",
    "CapExceededError",
    "DensityMatrix",
    "FcsDescriptor",
    "GibbsState",
    "LatticeHamiltonian",
    "Observable",
    "QuantumChannel",
    "ShellGeometry",
    "SingletModel",
    "SiteSpace",
    "Term",
    "block_entropy_profile",
    "build_gibbs",
    "build_gibbs_tensor_1d",
    "build_gibbs_tensor_2d",
    "channel_preset",
    "check_correlator_bound",
    "check_shell_chain",
    "classical_area_check",
    "connected_correlator",
    "fannes_bound",
    "model_preset",
    "mutual_information",
    "operator_schmidt",
    "partial_trace",
    "quantum_thermal_area_check",
    "relative_entropy",
    "ring_mi_increments",
    "scaling_analysis",
    "separated_block_state",
    "shannon_entropy",
    "trace_norm_distance",
    "transfer_spectrum",
    "von_neumann_entropy",
    "xi_m_estimate",
]
