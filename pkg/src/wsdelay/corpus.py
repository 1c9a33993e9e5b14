"""Bundled potential profiles used by the tests, the CLI and ``verify``.

Every entry is a :class:`ValidatedProfile` in natural units.

``well_barrier``
    Radial well of depth 10 for r < 1 behind a barrier of height 6 out to
    r = 1.5. The barrier is too low and thin to trap anything, so the phase
    shift drifts without sharp pi-sweeps.
``resonant_shell``
    Radial well of depth 5 for r < 1 behind a thin, tall shell (height 300,
    width 0.25). Three narrow s-wave resonances lie below E = 100, near
    E = 3.82, 30.24 and 74.04.
``square_well``
    Radial well of depth 10 for r < 1, with closed-form phase shift.
``barrier``
    Full-line rectangular barrier of height 5 and width 1.
``double_barrier``
    Full-line pair of barriers (height 8, width 0.5) around a gap of width 1.
``multilayer``
    Full-line stack of alternating high/low layers, a neutron-mirror-like
    structure in natural units.
``free_radial`` / ``free_line``
    No potential.
"""
from __future__ import annotations

from .potential import Geometry, Layer, PotentialProfile, ValidatedProfile, validate_profile

_SPECS = {
    "free_radial": (Geometry.RADIAL_S_WAVE, ()),
    "free_line": (Geometry.FULL_LINE, ()),
    "square_well": (Geometry.RADIAL_S_WAVE, ((1.0, -10.0),)),
    "well_barrier": (Geometry.RADIAL_S_WAVE, ((1.0, -10.0), (0.5, 6.0))),
    "resonant_shell": (Geometry.RADIAL_S_WAVE, ((1.0, -5.0), (0.25, 300.0))),
    "barrier": (Geometry.FULL_LINE, ((1.0, 5.0),)),
    "double_barrier": (Geometry.FULL_LINE, ((0.5, 8.0), (1.0, 0.0), (0.5, 8.0))),
    "multilayer": (Geometry.FULL_LINE, ((0.3, 4.0), (0.5, 1.0)) * 5),
}

# resonances of ``resonant_shell`` below E = 100 (centre, width), from the
# independent Numerov oracle in tests/oracles
SHELL_RESONANCES = ((3.8244964, 1.549e-4), (30.2388, 2.34e-3), (74.0399, 1.37e-2))


def names() -> tuple[str, ...]:
    return tuple(_SPECS)


def profile(name: str) -> ValidatedProfile:
    try:
        geometry, layers = _SPECS[name]
    except KeyError:
        raise KeyError(f"unknown corpus profile {name!r}; known: {', '.join(_SPECS)}") from None
    raw = PotentialProfile(geometry, tuple(Layer(w, h) for w, h in layers),
                           free_particle=not layers)
    return validate_profile(raw, name=name)


def all_profiles() -> dict[str, ValidatedProfile]:
    return {n: profile(n) for n in _SPECS}
