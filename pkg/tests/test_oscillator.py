import math

import numpy as np
import pytest

from wsdelay.errors import ConstraintViolation, StepTooLarge, TooFewPeriods
from wsdelay.oscillator import (OscillatorConfig, contraction_exponent, damped_response,
                                integrate_oscillator, per_period_amplitude, turning_points,
                                wkb_envelope)
from wsdelay.resonance import classical_phase, friction_to_width


def ramp(eps, omega0=1.0):
    cfg = OscillatorConfig(omega0, eps, 1.0, 0.0, 1.0 / eps, 1.0)
    return integrate_oscillator(OscillatorConfig(omega0, eps, 1.0, 0.0, cfg.t_end, cfg.max_dt()))


def test_one_period_closure():
    tr = integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 2 * math.pi, 2 * math.pi / 1000))
    assert abs(tr.x[-1] - 1.0) < 1e-9 and abs(tr.p[-1]) < 1e-9


def test_action_constant_without_ramp():
    tr = integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 200.0, 2 * math.pi / 1000))
    assert tr.action_drift() < 1e-8
    assert len(tr.times) == len(tr.x) == len(tr.p) == len(tr.energy) == len(tr.action)


def test_adiabatic_scaling():
    drifts = [ramp(eps).action_drift() for eps in (1e-2, 1e-3, 1e-4)]
    assert drifts[0] / drifts[1] >= 5 and drifts[1] / drifts[2] >= 5


def test_integrator_order():
    def errors(dt):
        tr = integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 20 * math.pi, dt))
        exact_x = np.cos(tr.times)
        return np.max(np.abs(tr.x - exact_x)), np.max(np.abs(tr.energy - 0.5))

    x1, e1 = errors(2 * math.pi / 200)
    x2, e2 = errors(2 * math.pi / 400)
    assert 14 < x1 / x2 < 18
    # the RK4 amplification factor differs from 1 at order h^6 per step
    assert e1 / e2 >= 16


def test_wkb_envelope_examples():
    cfg = OscillatorConfig(1.0, 1e-3, 1.0, 0.0, 3000.0, 1e-3)
    assert abs(wkb_envelope(cfg, 3000.0) - 0.5) < 1e-15
    flat = OscillatorConfig(1.0, 0.0, 2.0, 0.0, 10.0, 1e-3)
    assert np.all(wkb_envelope(flat, np.linspace(0, 10, 5)) == 2.0)


def test_wkb_envelope_matches_turning_points():
    tr = ramp(1e-3)
    t, a = turning_points(tr)
    env = wkb_envelope(tr.config, t)
    assert np.max(np.abs(a / env - 1)) < 0.01


def test_per_period_amplitude_decreases():
    _, amp = per_period_amplitude(ramp(1e-3))
    assert len(amp) > 50 and np.all(np.diff(amp) < 0)


def test_adiabatic_frame_is_a_circle():
    tr = ramp(1e-3)
    u, v = tr.adiabatic_frame()
    r = np.hypot(u, v)
    assert np.max(np.abs(r / r[0] - 1)) < 1e-3


def test_contraction_exponent():
    series = contraction_exponent(ramp(1e-3))
    assert abs(series.gamma_initial / 5e-4 - 1) < 0.05
    assert abs(series.mean_gamma() / series.mean_analytic() - 1) < 0.05
    assert series.equivalent_width == friction_to_width(series.gamma_initial)


def test_contraction_exponent_without_ramp():
    tr = integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 200.0, 2 * math.pi / 400))
    series = contraction_exponent(tr)
    assert abs(series.gamma_initial) < 1e-6 and np.max(np.abs(series.gamma)) < 1e-6


def test_too_few_periods():
    tr = integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 20.0, 2 * math.pi / 400))
    with pytest.raises(TooFewPeriods):
        contraction_exponent(tr)


def test_config_errors():
    with pytest.raises(StepTooLarge):
        integrate_oscillator(OscillatorConfig(1.0, 0.0, 1.0, 0.0, 10.0, 0.1))
    with pytest.raises(ConstraintViolation):
        integrate_oscillator(OscillatorConfig(0.0, 0.0, 1.0, 0.0, 10.0, 1e-3))
    with pytest.raises(ConstraintViolation):
        integrate_oscillator(OscillatorConfig(1.0, 1e-2, 1.0, 0.0, 1000.0, 1e-4))


def test_damped_response_examples():
    amp, lag = damped_response(2.0, 2.0, 0.05, 3.0)
    assert abs(lag - math.pi / 2) < 1e-15
    assert abs(amp - 3.0 / (2 * 0.05 * 2.0)) < 1e-12
    omega0, g = 10.0, 0.1
    w = np.linspace(omega0 - g, omega0 + g, 41)
    _, lag = damped_response(w, omega0, g)
    assert np.max(np.abs(lag / classical_phase(w, omega0, g) - 1)) < 0.01
