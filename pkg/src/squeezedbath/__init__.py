"""Exact qubit decoherence in a squeezed Lorentzian reservoir.

Two independent solvers for the time-local single-qubit master equation (an
algebraic disentangling route and direct integration), two-qubit concurrence
with sudden-death detection, and a CSV-emitting parameter-sweep front end.
"""

from .entanglement import (
    BellFamilyState,
    ConcurrenceSeries,
    NotXStateError,
    StateValidityWarning,
    concurrence_full,
    concurrence_x,
    detect_esd,
    initial_state,
    joint_density,
)
from .oracle import IntegrationError, evolve_direct, liouvillian, superoperator_matrices
from .propagator import (
    MapOverflowError,
    PropagatorSingularity,
    QubitDensity,
    SingleQubitMap,
    evolve_algebraic,
    integrate_riccati,
    single_qubit_maps,
)
from .reservoir import (
    ReservoirParams,
    accumulated_decay,
    correlations,
    generator_coeffs,
    kernel_quadrature_check,
    squeeze_moments,
)
from .sweep import PRESETS, FigurePreset, SweepSpec, get_preset, run_series, run_sweep, run_validate

__all__ = [
    "BellFamilyState",
    "ConcurrenceSeries",
    "FigurePreset",
    "IntegrationError",
    "MapOverflowError",
    "NotXStateError",
    "PRESETS",
    "PropagatorSingularity",
    "QubitDensity",
    "ReservoirParams",
    "SingleQubitMap",
    "StateValidityWarning",
    "SweepSpec",
    "accumulated_decay",
    "concurrence_full",
    "concurrence_x",
    "correlations",
    "detect_esd",
    "evolve_algebraic",
    "evolve_direct",
    "generator_coeffs",
    "get_preset",
    "initial_state",
    "integrate_riccati",
    "joint_density",
    "kernel_quadrature_check",
    "liouvillian",
    "run_series",
    "run_sweep",
    "run_validate",
    "single_qubit_maps",
    "squeeze_moments",
    "superoperator_matrices",
]
