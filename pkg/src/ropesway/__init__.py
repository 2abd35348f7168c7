"""Elevator rope sway: reduced modal model, semi-active damper control and a PDE oracle."""

from .basis import SineBasis, basis_integrals, check_orthonormal
from .control import ControllerConfig, command, control_thm1, control_thm2, lyapunov_V
from .errors import (ConfigurationError, DomainError, IntegrationError, PlacementError,
                     RopeSwayError, ValidationError)
from .model import (DisturbanceProfile, KinematicState, ModalState, RopeParams,
                    assemble_matrices, natural_frequencies, sway_at)
from .pde import FdGrid, FdSolver, compare_modal_vs_pde, pde_step
from .sim import (ActuatorModel, Scenario, SensorModel, SimConfig, SimResult, impulse_scenario,
                  run_scenario, sustained_scenario)

__version__ = "0.1.0"

__all__ = [
    "ActuatorModel", "ConfigurationError", "ControllerConfig", "DisturbanceProfile",
    "DomainError", "FdGrid", "FdSolver", "IntegrationError", "KinematicState", "ModalState",
    "PlacementError", "RopeParams", "RopeSwayError", "Scenario", "SensorModel", "SimConfig",
    "SimResult", "SineBasis", "ValidationError", "assemble_matrices", "basis_integrals",
    "check_orthonormal", "command", "compare_modal_vs_pde", "control_thm1", "control_thm2",
    "impulse_scenario", "lyapunov_V", "natural_frequencies", "pde_step", "run_scenario",
    "sustained_scenario", "sway_at",
]
