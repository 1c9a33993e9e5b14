"""The Numerov oracle, rerun live, reproduces the constants frozen in the suite."""
import numpy as np

import numerov_oracle as no
from test_delay import WELL_BARRIER_PEAK_E, WELL_BARRIER_PEAK_TAU_ORACLE
from test_engine import NUMEROV_SQUARE_WELL_DELTA_E1
from wsdelay import corpus, verify


def test_layers_match_corpus():
    for name, layers in (("square_well", no.SQUARE_WELL), ("well_barrier", no.WELL_BARRIER),
                         ("resonant_shell", no.RESONANT_SHELL)):
        p = corpus.profile(name)
        assert [(l.width, l.height) for l in p.layers] == layers


def test_square_well_phase():
    d = no.richardson_phase(no.SQUARE_WELL, np.array([1.0]))[0]
    assert abs(d - NUMEROV_SQUARE_WELL_DELTA_E1) < 1e-12


def test_well_barrier_has_no_sharp_sweeps():
    grid = np.linspace(1e-3, verify.WELL_BARRIER_E_STAR, 40001)
    d = no.unwrapped_phase(no.WELL_BARRIER, grid, h=5e-4)
    assert len(no.count_phase_jumps(grid, d)) == verify.WELL_BARRIER_ORACLE_COUNT
    # the net sweep is set by the bound state of the well, not by resonances
    assert abs((d[-1] - d[0]) / np.pi + 0.849) < 0.01


def test_sweep_counter_sees_shell_resonances():
    coarse = np.linspace(0.01, 100.0, 100001)
    found = no.count_phase_jumps(coarse, no.unwrapped_phase(no.RESONANT_SHELL, coarse, h=5e-4))
    fine = np.linspace(3.80, 3.85, 5001)
    found += no.count_phase_jumps(fine, no.unwrapped_phase(no.RESONANT_SHELL, fine, h=5e-4))
    centres = sorted(e for e, _ in found)
    assert len(centres) == 3
    for c, (e0, g) in zip(centres, corpus.SHELL_RESONANCES):
        assert abs(c - e0) < 2 * g


def test_shell_pole():
    e0, g = no.pole_parameters(no.RESONANT_SHELL, 3.8245 - 0.004, 3.8245 + 0.004)
    assert (e0, g) == verify.SHELL_ORACLE_POLE


def test_well_barrier_peak_delay():
    e = WELL_BARRIER_PEAK_E

    def fd(h):
        d = no.richardson_phase(no.WELL_BARRIER, np.array([e - h, e + h, e - 2 * h, e + 2 * h]),
                                h=2e-4)
        return (8 * (d[1] - d[0]) - (d[3] - d[2])) / (12 * h)

    tau = 2 * (16 * fd(0.01) - fd(0.02)) / 15
    assert abs(tau - WELL_BARRIER_PEAK_TAU_ORACLE) < 1e-12
