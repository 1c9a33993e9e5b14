import math

import numpy as np
import pytest

from wsdelay import corpus
from wsdelay.delay import (count_resonances, cumulative_integral, delay_profile, detect_resonances,
                           hermiticity_defect, integrate_delay, q_matrix, time_delay)
from wsdelay.engine import BreitWignerScatterer, EnergyGrid, s_matrix, sample_series
from wsdelay.errors import OutOfRange, RefinementLimit
from wsdelay.units import H_PLANCK, HBAR

# 2 d(delta)/dE of the well+barrier profile at its tau maximum, from the
# Numerov oracle (Numerov step 2e-4, Richardson in both steps)
WELL_BARRIER_PEAK_E = 12.226945
WELL_BARRIER_PEAK_TAU_ORACLE = 0.3698437291590001


def test_q_matrix_is_hermitian_and_trace_gives_delay():
    p = corpus.profile("double_barrier")
    smp = s_matrix(p, np.linspace(0.5, 20, 80), p.support_end)
    q = q_matrix(smp)
    assert np.max(hermiticity_defect(q)) < 1e-10
    tau = time_delay(smp)
    assert np.allclose(tau, np.real(np.trace(q, axis1=1, axis2=2)) / 2, atol=1e-12)


def test_full_line_delay_is_det_phase_derivative():
    p = corpus.profile("double_barrier")
    e = np.linspace(1.0, 10.0, 41)
    h = 1e-5

    def phase(x):
        return np.angle(np.linalg.det(s_matrix(p, x, p.support_end).s))

    fd = np.angle(np.exp(1j * (phase(e + h) - phase(e - h)))) / (2 * h)
    tau = time_delay(s_matrix(p, e, p.support_end))
    assert np.max(np.abs(tau - fd / 2)) < 1e-6 * np.max(np.abs(tau))


def test_breit_wigner_peak_delay():
    bw = BreitWignerScatterer.single(5.0, 0.2)
    assert abs(time_delay(sample_series(bw, np.array([5.0])))[0] - 4 * HBAR / 0.2) < 1e-10


def test_well_barrier_delay_matches_numerov_oracle():
    p = corpus.profile("well_barrier")
    tau = time_delay(s_matrix(p, WELL_BARRIER_PEAK_E, p.support_end))
    tau_bare = tau + p.support_end / math.sqrt(WELL_BARRIER_PEAK_E)
    assert abs(tau_bare - WELL_BARRIER_PEAK_TAU_ORACLE) < 1e-6 * WELL_BARRIER_PEAK_TAU_ORACLE


def test_free_particle_integral_is_zero():
    free = corpus.profile("free_radial")
    dp = integrate_delay(free, EnergyGrid.linspace(0.01, 10.0, 501))
    assert np.all(dp.tau == 0) and np.all(dp.cumulative == 0)
    assert detect_resonances(dp) == []


def test_isolated_resonance_integrates_to_h():
    g = 0.01
    bw = BreitWignerScatterer.single(20.0, g)
    dp = integrate_delay(bw, EnergyGrid.linspace(20.0 - 1e3 * g, 20.0 + 1e3 * g, 2001))
    total = dp.cumulative[-1]
    # the Lorentzian tails beyond +-1000 Gamma hold 2/1000 of the area
    assert abs(total - 2 * math.pi) < 2e-3 * 2 * math.pi
    assert dp.refinements >= 1


def test_count_out_of_range():
    dp = integrate_delay(BreitWignerScatterer.single(2.0, 0.1), EnergyGrid.linspace(1.0, 3.0, 101))
    with pytest.raises(OutOfRange):
        count_resonances(dp, 3.5)


def test_synthetic_count_and_quantum_choice():
    bw = BreitWignerScatterer((2.0, 6.0, 11.0), (0.02, 0.05, 0.03))
    dp = integrate_delay(bw, EnergyGrid.linspace(0.01, 200.0, 4001))
    c = count_resonances(dp, 200.0)
    assert c.nearest == 3 and abs(c.residual) < 0.02
    c_hbar = count_resonances(dp, 200.0, quantum=HBAR)
    assert abs(c_hbar.count - 2 * math.pi * c.count) < 1e-9
    assert c_hbar.notes


def test_detect_single_and_double_peaks():
    one = integrate_delay(BreitWignerScatterer.single(4.0, 0.05), EnergyGrid.linspace(1, 8, 2001))
    cands = detect_resonances(one)
    assert len(cands) == 1
    assert abs(cands[0].E0 - 4.0) < 1e-4 and abs(cands[0].gamma / 0.05 - 1) < 0.02
    two = integrate_delay(BreitWignerScatterer((3.0, 5.0), (0.05, 0.1)),
                          EnergyGrid.linspace(1, 8, 2001))
    e0s = sorted(c.E0 for c in detect_resonances(two))
    assert len(e0s) == 2 and abs(e0s[0] - 3) < 1e-3 and abs(e0s[1] - 5) < 1e-3


def test_grid_convergence_well_barrier():
    p = corpus.profile("well_barrier")
    vals = [integrate_delay(p, EnergyGrid.linspace(0.01, 40.0, n), a=p.support_end).cumulative[-1]
            for n in (2001, 4001, 8001)]
    assert abs(vals[1] - vals[2]) < 1e-3 * abs(vals[2])
    assert abs(vals[0] - vals[2]) < 1e-3 * abs(vals[2])


def test_reference_covariance_of_integral():
    p = corpus.profile("square_well")
    grid = EnergyGrid.linspace(0.5, 30.0, 2001)
    a0, d = p.support_end, 0.5
    i0 = integrate_delay(p, grid, a=a0, refine=False).cumulative
    i1 = integrate_delay(p, grid, a=a0 + d, refine=False).cumulative
    k = np.sqrt(grid.points)
    expected = -d * 2 * (k - k[0])  # integral of -2d/v with v = 2k and dE = 2k dk
    # even nodes close Simpson panels
    assert np.max(np.abs((i1 - i0) - expected)[::2]) < 1e-8


def test_recompute_is_bit_identical():
    p = corpus.profile("resonant_shell")
    grid = EnergyGrid.linspace(0.05, 40.0, 4001)
    a = integrate_delay(p, grid, a=p.support_end, threads=1)
    b = integrate_delay(p, grid, a=p.support_end, threads=3)
    assert np.array_equal(a.energy, b.energy)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.cumulative, b.cumulative)


def test_shell_peaks_each_carry_about_one_quantum():
    p = corpus.profile("resonant_shell")
    dp = integrate_delay(p, EnergyGrid.linspace(0.05, 100.0, 4001), a=p.support_end)
    cands = sorted(detect_resonances(dp), key=lambda c: c.E0)
    assert len(cands) == 3
    for c, (e0, g) in zip(cands, corpus.SHELL_RESONANCES):
        assert abs(c.E0 - e0) < 0.05 * g + 1e-6
        assert 0.85 < c.integral_quantum / H_PLANCK < 1.05


@pytest.mark.xfail(strict=True, reason="background delay of the shell profile shifts the "
                                       "total count well away from the number of peaks")
def test_shell_total_count_equals_peak_number():
    p = corpus.profile("resonant_shell")
    dp = integrate_delay(p, EnergyGrid.linspace(0.05, 100.0, 4001), a=p.support_end)
    assert count_resonances(dp, 100.0).nearest == 3


def test_refinement_limit():
    bw = BreitWignerScatterer.single(5.0, 1e-7)
    with pytest.raises(RefinementLimit):
        integrate_delay(bw, EnergyGrid.linspace(1.0, 9.0, 4001), max_points=5000)


def test_delay_profile_cumulative_away_from_origin():
    grid = EnergyGrid.linspace(5.0, 6.0, 11)
    dp = delay_profile(grid, np.ones(11), channels=1)
    assert dp.cumulative[0] == 0 and abs(dp.cumulative[-1] - 1.0) < 1e-14
    cubic = delay_profile(grid, grid.points ** 3, channels=1)
    assert abs(cubic.cumulative[-1] - (6.0 ** 4 - 5.0 ** 4) / 4) < 1e-11


def test_inverse_sqrt_delay_near_origin():
    # free flight with a = 1: tau = -1/sqrt(E) plus a smooth part
    grid = EnergyGrid.linspace(0.01, 4.0, 401)
    e = grid.points
    tau = -1 / np.sqrt(e) + e
    dp = delay_profile(grid, tau, channels=1)
    exact = -2 * (np.sqrt(e) - 0.1) + (e ** 2 - 0.01 ** 2) / 2
    err = np.max(np.abs(dp.cumulative - exact))
    plain = np.max(np.abs(cumulative_integral(e, tau) - exact))
    assert err < 1e-5 and err < 1e-2 * plain
