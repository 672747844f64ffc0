"""Geometric entangling gates between DFS-encoded qubits in fiber-coupled cavities."""

from .errors import (
    ClosureSearchError,
    ConvergenceError,
    GeomGateError,
    IntegratorError,
    ParameterError,
    SingularityError,
)
from .gatephase import (
    build_gate,
    entangling_measure,
    find_closure,
    phase_closed_form,
    phase_quadrature,
    phases_at,
    photon_occupation,
    trajectory_amplitude,
)
from .model import (
    BASES,
    ChiTable,
    EffectiveCouplings,
    EtaTriple,
    LogicalBasis,
    SystemParams,
    chi_table,
    derive_couplings,
    eta_values,
    regime_report,
)

__version__ = "0.1.0"
