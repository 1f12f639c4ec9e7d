"""Simulation and parameter optimisation for dissipative GHZ-state preparation
by combined Z- and X-pumping of qubits coupled to a shared oscillator."""

__version__ = "0.1.0"

from .core import Basis, DensityMatrix, GroundState, SystemParams, fidelity, ghz_state  # noqa: E402
from .liouvillian import DriveSchedule, DriveTone, build_full_model  # noqa: E402
from .effective import build_effective_model  # noqa: E402
from .dynamics import (IntegrationError, IntegratorConfig, SimTrace, evolve,  # noqa: E402
                       initial_state, steady_state, time_to_fidelity, trotter_evolve)
from .compartment import (build_4compartment, rate_bundle_from_schedule,  # noqa: E402
                          stationary_error, weak_rates)
from .optimize import (DriveVector, numeric_time_minimizer, strong_drive_params,  # noqa: E402
                       weak_drive_params)

__all__ = [
    "__version__", "Basis", "DensityMatrix", "GroundState", "SystemParams", "fidelity",
    "ghz_state", "DriveSchedule", "DriveTone", "build_full_model", "build_effective_model",
    "IntegrationError", "IntegratorConfig", "SimTrace", "evolve", "initial_state",
    "steady_state", "time_to_fidelity", "trotter_evolve", "build_4compartment",
    "rate_bundle_from_schedule", "stationary_error", "weak_rates", "DriveVector",
    "numeric_time_minimizer", "strong_drive_params", "weak_drive_params",
]
