"""Natural units used throughout: hbar = 1 and 2m = 1.

With these choices the free wavenumber is ``k = sqrt(E)`` and the group
velocity is ``v = dE/dk = 2k``. Conversion to laboratory units happens only
when results are displayed (see :mod:`wsdelay.io.config`).
"""
import numpy as np

HBAR = 1.0
TWO_M = 1.0

#: counting quantum per resonance implied by a full Breit-Wigner phase sweep
H_PLANCK = 2.0 * np.pi * HBAR


def wavenumber(energy):
    return np.sqrt(TWO_M * np.asarray(energy, dtype=float)) / HBAR


def velocity(energy):
    """Group velocity dE/(hbar dk) for a free particle."""
    return 2.0 * HBAR * wavenumber(energy) / TWO_M
