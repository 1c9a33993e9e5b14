import math

import pytest

from wsdelay.errors import EmptyGeometry, NegativeRadius, NonFiniteHeight, NonPositiveWidth
from wsdelay.potential import (Geometry, Layer, PotentialProfile, evaluate_potential,
                               layer_thresholds, validate_profile)


def radial(*layers):
    return validate_profile(PotentialProfile(Geometry.RADIAL_S_WAVE,
                                             tuple(Layer(w, h) for w, h in layers)))


def test_free_particle_has_zero_support():
    p = validate_profile(PotentialProfile(Geometry.FULL_LINE, (), free_particle=True))
    assert p.support_end == 0.0
    assert p.is_free


def test_single_layer_boundaries():
    p = validate_profile(PotentialProfile(Geometry.FULL_LINE, (Layer(1.0, 5.0),)))
    assert p.support_end == 1.0
    assert p.boundaries == (0.0, 1.0)


def test_negative_width_rejected():
    with pytest.raises(NonPositiveWidth):
        radial((-1.0, 2.0))


def test_infinite_height_rejected():
    with pytest.raises(NonFiniteHeight):
        radial((1.0, math.inf))


def test_empty_without_flag_rejected():
    with pytest.raises(EmptyGeometry):
        validate_profile(PotentialProfile(Geometry.RADIAL_S_WAVE, ()))


def test_evaluate_lookup_and_outside():
    free = validate_profile(PotentialProfile(Geometry.RADIAL_S_WAVE, (), free_particle=True))
    assert evaluate_potential(free, 3.7) == 0.0
    p = radial((1.0, -10.0), (0.5, 4.0))
    assert evaluate_potential(p, 1.2) == 4.0
    assert evaluate_potential(p, 0.3) == -10.0
    assert evaluate_potential(p, 100.0) == 0.0


def test_negative_radius_rejected():
    with pytest.raises(NegativeRadius):
        evaluate_potential(radial((1.0, 1.0)), -0.1)


def test_evaluation_is_repeatable():
    p = radial((0.1, 1.0), (0.2, -3.0), (0.7, 2.0))
    assert evaluate_potential(p, 0.25) == evaluate_potential(p, 0.25)


def test_support_end_is_single_pass_sum():
    widths = [0.1] * 7 + [0.3]
    p = radial(*[(w, 1.0) for w in widths])
    total = 0.0
    for w in widths:
        total += w
    assert p.support_end == total
    assert p.boundaries[-1] == p.support_end


def test_thresholds_are_distinct_heights():
    p = radial((1.0, -10.0), (0.5, 6.0), (0.5, 6.0))
    assert sorted(layer_thresholds(p)) == [-10.0, 6.0]
