"""Wigner-Smith time delay, resonance counting and adiabatic invariants.

Natural units throughout: hbar = 1 and 2m = 1, so k = sqrt(E) and v = 2 sqrt(E).
"""
from .delay import (DelayProfile, count_resonances, detect_resonances, integrate_delay,
                    q_matrix, time_delay)
from .engine import BreitWignerScatterer, EnergyGrid, SMatrixSample, s_matrix, sample_series
from .potential import Geometry, Layer, PotentialProfile, validate_profile
from .resonance import BWParams, bw_phase, classical_phase, fit_bw

__version__ = "0.1.0"

__all__ = [
    "BWParams", "BreitWignerScatterer", "DelayProfile", "EnergyGrid", "Geometry", "Layer",
    "PotentialProfile", "SMatrixSample", "bw_phase", "classical_phase", "count_resonances",
    "detect_resonances", "fit_bw", "integrate_delay", "q_matrix", "s_matrix", "sample_series",
    "time_delay", "validate_profile",
]
