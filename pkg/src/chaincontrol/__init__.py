"""Gate synthesis on isotropic Heisenberg spin chains controlled through one end spin."""

from .controllability import full_controllability_check, lie_closure
from .core import ChainSpec, DomainError, GateKind, GateTarget, gate_target
from .filtering import (
    GaussianFilter,
    IdealLowPass,
    filtered_fidelity,
    fidelity_vs_cutoff,
    iterate_filter_optimize,
    power_spectrum,
)
from .optima import load_optimum
from .optimizer import OptimizerConfig, bfgs_maximize, minimal_time_scan, objective, optimize_gate
from .propagation import ControlMode, ControlSequence, evolve_sequence, gate_fidelity
from .sensitivity import NoiseModel, average_fidelity_under_noise, sensitivity_sweep

__version__ = "0.1.0"

__all__ = [
    "ChainSpec", "ControlMode", "ControlSequence", "DomainError", "GateKind", "GateTarget",
    "GaussianFilter", "IdealLowPass", "NoiseModel", "OptimizerConfig",
    "average_fidelity_under_noise", "bfgs_maximize", "evolve_sequence", "filtered_fidelity",
    "fidelity_vs_cutoff", "full_controllability_check", "gate_fidelity", "gate_target",
    "iterate_filter_optimize", "lie_closure", "load_optimum", "minimal_time_scan", "objective",
    "optimize_gate", "power_spectrum", "sensitivity_sweep",
]
