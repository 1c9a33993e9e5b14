import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsdelay.cli import main, unit_scales
from wsdelay.delay import detect_resonances
from wsdelay.errors import (BadHeader, ConfigSyntaxError, ConstraintViolation,
                            NonMonotonicEnergy, TooFewRows, UnknownKey)
from wsdelay.io.config import (GridSpec, OscillatorSpec, ProfileSpec, QuantumSpec, RunConfig,
                               WignerSpec, parse_config, serialize_config)
from wsdelay.io.emit import delay_csv, heatmap_dat, json_text, series_dat, write_outputs
from wsdelay.io.ingest import format_phase_shift_csv, ingest_phase_shifts, read_phase_shift_csv
from wsdelay.resonance import BWParams, bw_phase, fit_candidates
from wsdelay.units import H_PLANCK

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# -- config ---------------------------------------------------------------------

def test_minimal_free_particle_config():
    cfg = parse_config("[profile]\ngeometry = radial\n")
    src = cfg.source()
    assert src.layers == () and src.support_end == 0
    assert cfg.quantum.value == H_PLANCK


def test_empty_config_is_valid():
    assert parse_config("") == RunConfig()


def test_reference_inside_support():
    with pytest.raises(ConstraintViolation, match="scattering-engine"):
        parse_config("[profile]\nlayer = 1 -10\nlayer = 0.5 6\n[reference]\na = 1.2\n")


def test_quantum_selector():
    assert parse_config("[count]\nquantum = h\n").quantum.value == 2 * math.pi
    assert parse_config("[count]\nquantum = hbar\n").quantum.value == 1.0
    assert parse_config("[count]\nquantum = custom=2.5\n").quantum.value == 2.5
    with pytest.raises(ConstraintViolation):
        parse_config("[count]\nquantum = planck\n")


def test_syntax_errors_carry_line_numbers():
    with pytest.raises(ConfigSyntaxError, match="line 2"):
        parse_config("[grid]\ne_min 0.1\n")
    with pytest.raises(ConfigSyntaxError, match="line 1"):
        parse_config("e_min = 0.1\n")
    with pytest.raises(ConfigSyntaxError):
        parse_config("[grid\n")
    with pytest.raises(ConfigSyntaxError, match="duplicate"):
        parse_config("[grid]\ne_min = 0.1\ne_min = 0.2\n")


def test_unknown_keys_and_sections():
    with pytest.raises(UnknownKey):
        parse_config("[grid]\nemax = 3\n")
    with pytest.raises(UnknownKey):
        parse_config("[server]\nport = 80\n")


def test_constraint_messages_name_the_module():
    cases = {
        "[grid]\ne_min = 5\ne_max = 1\n": "scattering-engine",
        "[wigner]\nwindow = kaiser\n": "wigner-bridge",
        "[oscillator]\ndt = 1.0\n": "adiabatic-oscillator",
        "[profile]\nlayer = -1 3\n": "potential-model",
        "[units]\nmass = neutron\n": "units",
    }
    for text, module in cases.items():
        with pytest.raises(ConstraintViolation, match=module):
            parse_config(text)


def test_comments_and_whitespace():
    cfg = parse_config("# header\n  [grid]  # trailing\n  points =  17   \n")
    assert cfg.grid.points == 17


def test_bundled_configs_parse():
    for path in CONFIGS.glob("*.cfg"):
        cfg = parse_config(path.read_text(encoding="utf-8"))
        assert parse_config(serialize_config(cfg)) == cfg


finite = st.floats(0.1, 10.0, allow_nan=False)


@st.composite
def run_configs(draw):
    kind = draw(st.sampled_from(["layers", "corpus", "resonances", "free"]))
    profile = ProfileSpec()
    if kind == "layers":
        layers = tuple(draw(st.lists(st.tuples(finite, st.floats(-20, 20)), min_size=1,
                                     max_size=4)))
        profile = ProfileSpec(geometry=draw(st.sampled_from(["radial", "full_line"])),
                              layers=layers)
    elif kind == "corpus":
        profile = ProfileSpec(corpus=draw(st.sampled_from(["square_well", "barrier"])))
    elif kind == "resonances":
        profile = ProfileSpec(resonances=tuple(draw(st.lists(st.tuples(finite, finite),
                                                             min_size=1, max_size=3))),
                              background=draw(st.floats(-3, 3)))
    e_min = draw(st.floats(1e-3, 1.0))
    grid = GridSpec(e_min, e_min + draw(st.floats(0.5, 100.0)), draw(st.integers(2, 10**5)),
                    draw(st.booleans()))
    quantum = draw(st.sampled_from([QuantumSpec.parse("h"), QuantumSpec.parse("hbar"),
                                    QuantumSpec("custom", draw(finite))]))
    osc = OscillatorSpec(omega0=draw(finite), ramp_rate=draw(st.sampled_from([0.0, 1e-3, 1e-2])))
    wig = WignerSpec(window=draw(st.sampled_from(["hann", "rectangular", "blackman"])),
                     pad=draw(st.integers(2, 8)), points=draw(st.integers(16, 5000)),
                     eps_steps=draw(st.integers(1, 8)))
    return RunConfig(profile=profile, grid=grid, quantum=quantum, oscillator=osc, wigner=wig,
                     out_dir=draw(st.sampled_from(["out", "out/x y", "results"])))


@settings(max_examples=100, deadline=None)
@given(cfg=run_configs())
def test_config_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


# -- ingest ----------------------------------------------------------------------

def bw_table(n, e0=0.77, gamma=0.15):
    e = np.linspace(e0 - 5 * gamma, e0 + 5 * gamma, n)
    return e, bw_phase(e, BWParams(e0, gamma))


def test_ingest_round_trip_50_rows():
    e, d = bw_table(50)
    dp = ingest_phase_shifts(format_phase_shift_csv(e, d))
    cands = detect_resonances(dp)
    assert len(cands) == 1
    assert abs(cands[0].E0 / 0.77 - 1) < 0.01 and abs(cands[0].gamma / 0.15 - 1) < 0.05
    fit = fit_candidates(dp, cands)[0]
    assert abs(fit.params.gamma / 0.15 - 1) < 0.05


def test_ingest_round_trip_500_rows():
    e, d = bw_table(500)
    dp = ingest_phase_shifts(format_phase_shift_csv(e, d))
    fit = fit_candidates(dp, detect_resonances(dp))[0]
    assert abs(fit.params.gamma / 0.15 - 1) < 0.01


def test_ingest_wrapped_phase():
    e, d = bw_table(200)
    wrapped = np.angle(np.exp(2j * d)) / 2  # the table may arrive modulo pi
    a = ingest_phase_shifts(format_phase_shift_csv(e, d))
    b = ingest_phase_shifts(format_phase_shift_csv(e, wrapped))
    assert np.allclose(a.tau, b.tau, atol=1e-9)


def test_constant_phase_gives_zero_delay():
    e = np.linspace(1, 2, 10)
    dp = ingest_phase_shifts(format_phase_shift_csv(e, np.full(10, 0.3)))
    assert np.max(np.abs(dp.tau)) < 1e-12


def test_ingest_errors():
    e = np.linspace(1, 2, 10)
    with pytest.raises(NonMonotonicEnergy, match="row"):
        read_phase_shift_csv(format_phase_shift_csv(e[::-1], np.zeros(10)))
    with pytest.raises(TooFewRows):
        read_phase_shift_csv(format_phase_shift_csv(e[:7], np.zeros(7)))
    with pytest.raises(BadHeader):
        read_phase_shift_csv("energy,phase\n" + "1,0\n" * 8)
    with pytest.raises(BadHeader):
        read_phase_shift_csv("E,delta\n" + "1,abc\n" * 8)


def test_sigma_column_is_kept():
    e = np.linspace(1, 2, 10)
    t = read_phase_shift_csv(format_phase_shift_csv(e, np.zeros(10), np.full(10, 0.01)))
    assert np.all(t.sigma == 0.01)


# -- emit -----------------------------------------------------------------------

def test_number_format_round_trips():
    x = np.random.default_rng(0).normal(size=50) * 10.0 ** np.arange(-25, 25)
    text = series_dat(("a", "b"), x, x)
    back = np.loadtxt(text.splitlines(), comments="#")
    assert np.array_equal(back[:, 0], x)


def test_json_is_versioned_and_sorted():
    text = json_text({"b": np.float64(1.5), "a": np.arange(2), "c": float("nan")})
    data = json.loads(text)
    assert data["format_version"] == 1 and data["c"] is None and data["a"] == [0, 1]
    assert list(data) == sorted(data)


def test_heatmap_has_blank_lines_between_rows():
    z = np.arange(6.0).reshape(2, 3)
    lines = heatmap_dat(("x", "y", "z"), [0, 1], [0, 1, 2], z).splitlines()
    assert lines[5] == "" and len([l for l in lines if l and not l.startswith("#")]) == 6


def test_write_outputs_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_outputs(blocker / "sub", {"a.txt": "x"})


# -- CLI ----------------------------------------------------------------------

def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(Path(root).rglob("*")) if p.is_file()}


def test_cli_free_particle_scan(tmp_path):
    cfg = write_cfg(tmp_path, "[profile]\ngeometry = radial\n[grid]\npoints = 101\ne_max = 5\n")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "1"]) == 0
    lines = (tmp_path / "o" / "delay.csv").read_text().splitlines()
    assert lines[0] == "# format_version = 1" and lines[2] == "E,tau,cumulative,count_estimate"
    assert all(float(l.split(",")[1]) == 0.0 for l in lines[3:])
    for name in ("resonances.json", "report.txt", "plot/tau.dat", "plot/cumulative.dat",
                 "plot/phase.dat"):
        assert (tmp_path / "o" / name).is_file()


def test_cli_corpus_count_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, "[profile]\ncorpus = resonant_shell\n[grid]\ne_max = 100\n"
                              "points = 4001\n[count]\nquantum = h\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fit", "--config", cfg, "--out", str(a), "--threads", "1"]) == 0
    assert main(["fit", "--config", cfg, "--out", str(b), "--threads", "4"]) == 0
    assert read_tree(a) == read_tree(b)
    data = json.loads((a / "resonances.json").read_text())
    assert len(data["candidates"]) == 3
    for c in data["candidates"]:
        assert 0.9 <= c["units_of_h"] <= 1.1 and c["verdict"]
    assert {"units_of_h", "units_of_hbar"} <= set(data["count"])
    assert len(data["fits"]) == 3
    assert "one resonance" in (a / "report.txt").read_text()


def test_cli_quantum_flag(tmp_path):
    cfg = write_cfg(tmp_path, "[profile]\nresonance = 3 0.1\n[grid]\ne_max = 6\npoints = 601\n")
    out = tmp_path / "o"
    assert main(["count", "--config", cfg, "--out", str(out), "--quantum", "hbar",
                 "--threads", "1"]) == 0
    data = json.loads((out / "resonances.json").read_text())
    assert data["quantum"]["kind"] == "hbar"
    assert abs(data["count"]["units_of_hbar"] / data["count"]["units_of_h"] - 2 * math.pi) < 1e-9
    assert data["count"]["selected"] == data["count"]["units_of_hbar"]


def test_cli_ingest(tmp_path):
    out = tmp_path / "o"
    assert main(["ingest", "--config", str(CONFIGS / "ingest.cfg"), "--out", str(out)]) == 0
    data = json.loads((out / "resonances.json").read_text())
    assert len(data["candidates"]) == 1
    assert abs(data["candidates"][0]["E0"] / 0.77 - 1) < 0.01


def test_cli_oscillator(tmp_path):
    cfg = write_cfg(tmp_path, "[oscillator]\nramp_rate = 0.001\n")
    out = tmp_path / "o"
    assert main(["oscillator", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "oscillator.json").read_text())["contraction"]
    assert abs(data["gamma_initial"] / 0.0005 - 1) < 0.05
    assert data["equivalent_width"] == 2 * data["gamma_initial"]
    assert (out / "plot" / "spiral.dat").is_file()


def test_cli_wigner(tmp_path):
    cfg = write_cfg(tmp_path, "[profile]\nresonance = 2 0.1\n[grid]\ne_max = 4\n"
                              "[wigner]\npoints = 400\n")
    out = tmp_path / "o"
    assert main(["wigner", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    data = json.loads((out / "wigner.json").read_text())
    ps = data["phase_space"]
    assert abs(ps["interior"] / ps["direct_interior"] - 1) < 0.03
    assert data["wigner"]["imag_residue"] < 1e-10
    assert (out / "plot" / "wigner.dat").is_file()


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_cfg(tmp_path, "[grid]\nbogus = 1\n", "bad.cfg")
    assert main(["scan", "--config", bad]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["scan", "--config", str(tmp_path / "missing.cfg")]) == 4
    short = write_cfg(tmp_path, "[oscillator]\nramp_rate = 0.001\nt_end = 20\n", "short.cfg")
    assert main(["oscillator", "--config", short, "--out", str(tmp_path / "s")]) == 3
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    ok = write_cfg(tmp_path, "[grid]\npoints = 11\ne_max = 2\n", "ok.cfg")
    assert main(["scan", "--config", ok, "--out", str(blocker / "sub")]) == 4
    binary = tmp_path / "bin.cfg"
    binary.write_bytes(b"\xff\xfe\x00")
    assert main(["scan", "--config", str(binary)]) == 2


def test_units_block_is_display_only(tmp_path):
    plain = write_cfg(tmp_path, "[profile]\nresonance = 3 0.1\n[grid]\ne_max = 6\npoints = 301\n",
                      "plain.cfg")
    units = write_cfg(tmp_path, "[profile]\nresonance = 3 0.1\n[grid]\ne_max = 6\npoints = 301\n"
                                "[units]\nmass = neutron\nlength_nm = 10\n", "units.cfg")
    main(["scan", "--config", plain, "--out", str(tmp_path / "p")])
    main(["scan", "--config", units, "--out", str(tmp_path / "u")])
    assert (tmp_path / "p" / "delay.csv").read_bytes() == (tmp_path / "u" / "delay.csv").read_bytes()
    assert "neV" in (tmp_path / "u" / "report.txt").read_text()
    energy_nev, _ = unit_scales(parse_config(Path(units).read_text()))
    assert abs(energy_nev / 207.2 - 1) < 1e-3
