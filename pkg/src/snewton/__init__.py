"""Radial Schrödinger-Newton evolution, stationary states and experiments."""

from .core import CodeUnits, RadialGrid, ScaleTransform, WaveState, apply_scale, discrete_norm, gaussian_initial, rescale_mu
from .diagnostics import (
    DiagnosticsRecord,
    escape_velocity,
    find_peak,
    hamiltonian_expectation,
    kinetic_energy,
    mass_within,
    peak_velocity,
    sn_energy,
    total_probability,
)
from .errors import (
    BracketError,
    DomainExceededError,
    DomainTooSmallError,
    EvolutionCancelled,
    ExtrapolationError,
    GridMismatchError,
    InconclusiveError,
    InstabilityError,
    InsufficientPointsError,
    NoInteriorPeakError,
    NumericalError,
    OutputError,
    ResolutionError,
    SNError,
)
from .evolve import EvolutionParams, absorber_profile, evolve, rhs, rk4_step, second_derivative
from .poisson import PotentialField, analytic_gaussian_potential, compute_potential, newton_cotes_cumulative
from .stationary import StationaryState, fractional_groundstate, groundstate_energy, solve_groundstate, stationary_rhs

__version__ = "0.1.0"

__all__ = [
    "CodeUnits",
    "RadialGrid",
    "ScaleTransform",
    "WaveState",
    "apply_scale",
    "discrete_norm",
    "gaussian_initial",
    "rescale_mu",
    "DiagnosticsRecord",
    "escape_velocity",
    "find_peak",
    "hamiltonian_expectation",
    "kinetic_energy",
    "mass_within",
    "peak_velocity",
    "sn_energy",
    "total_probability",
    "BracketError",
    "DomainExceededError",
    "DomainTooSmallError",
    "EvolutionCancelled",
    "ExtrapolationError",
    "GridMismatchError",
    "InconclusiveError",
    "InstabilityError",
    "InsufficientPointsError",
    "NoInteriorPeakError",
    "NumericalError",
    "OutputError",
    "ResolutionError",
    "SNError",
    "EvolutionParams",
    "absorber_profile",
    "evolve",
    "rhs",
    "rk4_step",
    "second_derivative",
    "PotentialField",
    "analytic_gaussian_potential",
    "compute_potential",
    "newton_cotes_cumulative",
    "StationaryState",
    "fractional_groundstate",
    "groundstate_energy",
    "solve_groundstate",
    "stationary_rhs",
]
