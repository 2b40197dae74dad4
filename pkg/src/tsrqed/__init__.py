"""Circuit QED with a triple-leg stripline resonator.

Four building blocks: the lumped-element resonator eigenproblem with its
two-fold degenerate fundamental modes (resonator), semiclassical pulse
reflection off the dispersively coupled cavity (dispersive), a full
Lindblad master-equation oracle (lindblad), and the hybrid
controlled-phase-flip gate algebra (gates).  The cli module reproduces
the reference figures as CSV files.
"""

__version__ = "0.1.0"

from .dispersive import (DISPERSIVE_VALIDITY_THRESHOLD, IntegrationError,
                         OverlapResult, PulseSpec, SystemParams, TimeSeries,
                         adiabatic_reflection, chi_of, gaussian_pulse,
                         integrate_semiclassical, overlap_metrics,
                         sigma_z_closed_form)
from .gates import (FlyingQubitState, GateReport, HybridState, TqcpfReport,
                    apply_cpf_ideal, apply_cpf_simulated,
                    beamsplitter_transform, compose_tqcpf, qubit_rotation)
from .lindblad import (DensityState, HilbertConfig, MasterTrajectory,
                       PositivityError, TruncationError, build_hamiltonian,
                       build_operators, evolve_master, initial_state,
                       output_field)
from .resonator import (A_MINUS, A_PLUS, BracketingError, CircuitParams,
                        CouplingProfile, ModeSolution, build_circuit_matrices,
                        continuum_wavevector, coupling_profile,
                        coupling_strength, mode_function, solve_modes)

__all__ = [
    "__version__",
    # resonator
    "A_PLUS", "A_MINUS", "BracketingError", "CircuitParams", "CouplingProfile",
    "ModeSolution", "build_circuit_matrices", "continuum_wavevector",
    "coupling_profile", "coupling_strength", "mode_function", "solve_modes",
    # dispersive
    "DISPERSIVE_VALIDITY_THRESHOLD", "IntegrationError", "OverlapResult",
    "PulseSpec", "SystemParams", "TimeSeries", "adiabatic_reflection",
    "chi_of", "gaussian_pulse", "integrate_semiclassical", "overlap_metrics",
    "sigma_z_closed_form",
    # lindblad
    "DensityState", "HilbertConfig", "MasterTrajectory", "PositivityError",
    "TruncationError", "build_hamiltonian", "build_operators", "evolve_master",
    "initial_state", "output_field",
    # gates
    "FlyingQubitState", "GateReport", "HybridState", "TqcpfReport",
    "apply_cpf_ideal", "apply_cpf_simulated", "beamsplitter_transform",
    "compose_tqcpf", "qubit_rotation",
]
