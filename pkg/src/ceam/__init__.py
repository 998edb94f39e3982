"""Phase sensitivity of a waveguide atom array in front of a mirror."""

__version__ = "0.1.0"

from .errors import (
    DegenerateError,
    EstimationError,
    NonSmoothError,
    NumericalFailure,
    OpaqueElementError,
    PoleError,
)
from .model import AtomSpec, IdealArraySpec, SIConfig, SystemSpec, homogeneous_system, to_internal_units, validate
from .scattering import (
    ScatterCoeffs,
    TransferMatrix,
    ceam_coeffs,
    reflection_on_grid,
    single_atom_coeffs,
    total_reflection_closed_form,
    total_reflection_transfer_matrix,
)
from .sensitivity import find_working_point, phase_derivative_analytic, phase_derivative_numeric, scaling_sweep
from .disorder import DisorderSpec, run_ensemble
from .estimator import estimate_x, monte_carlo

__all__ = [
    "__version__",
    "AtomSpec",
    "DegenerateError",
    "DisorderSpec",
    "EstimationError",
    "IdealArraySpec",
    "NonSmoothError",
    "NumericalFailure",
    "OpaqueElementError",
    "PoleError",
    "SIConfig",
    "ScatterCoeffs",
    "SystemSpec",
    "TransferMatrix",
    "ceam_coeffs",
    "estimate_x",
    "find_working_point",
    "homogeneous_system",
    "monte_carlo",
    "phase_derivative_analytic",
    "phase_derivative_numeric",
    "reflection_on_grid",
    "run_ensemble",
    "scaling_sweep",
    "single_atom_coeffs",
    "to_internal_units",
    "total_reflection_closed_form",
    "total_reflection_transfer_matrix",
    "validate",
]
