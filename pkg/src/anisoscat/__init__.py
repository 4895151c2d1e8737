"""Desk-scale scattering experiments for block-anisotropic multiplier Hamiltonians."""

__version__ = "0.1.0"

from .admissibility import (AdmissibilityReport, DecayIndex, classify,
                            decay_index, in_E_j, rho_components)
from .errors import ConfigError, ConvergenceError, GuardViolation
from .field import (Lattice, WaveFunction, gaussian_packet, lattice_for,
                    to_momentum, to_position, weight_field, weight_norm)
from .potential import (PotentialSpec, StaticPotential, TimeEnvelope,
                        build_static, eval_timedep, potential_spec)
from .propagate import (PropagationPlan, SpectralTransform, evolve_static,
                        evolve_timedep, free_evolve, monodromy_apply,
                        named_transform)
from .symbol import (BlockSpec, DispersionSymbol, SmoothCutoff, SpectralWindow,
                     cutoff_eval, eval_symbol, group_velocity, make_dispersion,
                     symbol_range)

__all__ = [
    "AdmissibilityReport", "BlockSpec", "ConfigError", "ConvergenceError",
    "DecayIndex", "DispersionSymbol", "GuardViolation", "Lattice",
    "PotentialSpec", "PropagationPlan", "SmoothCutoff", "SpectralTransform",
    "SpectralWindow", "StaticPotential", "TimeEnvelope", "WaveFunction",
    "build_static", "classify", "cutoff_eval", "decay_index", "eval_symbol",
    "eval_timedep", "evolve_static", "evolve_timedep", "free_evolve",
    "gaussian_packet", "group_velocity", "in_E_j", "lattice_for",
    "make_dispersion", "monodromy_apply", "named_transform", "potential_spec",
    "rho_components", "symbol_range", "to_momentum", "to_position",
    "weight_field", "weight_norm",
]
