"""Piecewise-constant scattering potentials.

A profile is an ordered stack of layers starting at the origin. On the full
line the stack occupies ``0 <= x < support_end`` with free space on both
sides; in the radial s-wave geometry the stack starts at ``r = 0`` where the
wavefunction vanishes. Beyond ``support_end`` the potential is exactly zero.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGeometry, NegativeRadius, NonFiniteHeight, NonPositiveWidth


class Geometry(enum.Enum):
    FULL_LINE = "full_line"
    RADIAL_S_WAVE = "radial"


@dataclass(frozen=True)
class Layer:
    width: float
    height: float


@dataclass(frozen=True)
class PotentialProfile:
    geometry: Geometry
    layers: tuple[Layer, ...] = ()
    free_particle: bool = False

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class ValidatedProfile:
    """Profile whose layers passed validation, with cumulative boundaries.

    ``boundaries`` has ``len(layers) + 1`` entries starting at 0; its last
    entry is ``support_end``.
    """

    geometry: Geometry
    layers: tuple[Layer, ...]
    boundaries: tuple[float, ...]
    support_end: float
    name: str = field(default="", compare=False)

    @property
    def widths(self):
        return np.array([layer.width for layer in self.layers])

    @property
    def heights(self):
        return np.array([layer.height for layer in self.layers])

    @property
    def n_channels(self):
        return 2 if self.geometry is Geometry.FULL_LINE else 1

    @property
    def is_free(self):
        return not self.layers


def validate_profile(profile: PotentialProfile, name: str = "") -> ValidatedProfile:
    if not profile.layers and not profile.free_particle:
        raise EmptyGeometry(
            "profile has no layers; set free_particle=True for a free particle"
        )
    boundaries = [0.0]
    total = 0.0
    for i, layer in enumerate(profile.layers):
        if not (layer.width > 0.0) or not math.isfinite(layer.width):
            raise NonPositiveWidth(f"layer {i}: width {layer.width!r} must be > 0")
        if not math.isfinite(layer.height):
            raise NonFiniteHeight(f"layer {i}: height {layer.height!r} is not finite")
        total += layer.width
        boundaries.append(total)
    return ValidatedProfile(
        geometry=profile.geometry,
        layers=tuple(Layer(float(l.width), float(l.height)) for l in profile.layers),
        boundaries=tuple(boundaries),
        support_end=total,
        name=name,
    )


def evaluate_potential(profile: ValidatedProfile, x: float) -> float:
    """Potential at position ``x`` (radius for the radial geometry).

    Layer ``i`` covers the half-open interval ``[b_i, b_{i+1})``.
    """
    if profile.geometry is Geometry.RADIAL_S_WAVE and x < 0:
        raise NegativeRadius(f"radius {x!r} is negative")
    if x < 0.0 or x >= profile.support_end:
        return 0.0
    i = int(np.searchsorted(profile.boundaries, x, side="right")) - 1
    return profile.layers[i].height


def layer_thresholds(profile: ValidatedProfile) -> np.ndarray:
    """Distinct layer heights, i.e. energies where a local wavenumber vanishes."""
    return np.unique(profile.heights) if profile.layers else np.empty(0)
