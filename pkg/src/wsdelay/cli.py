"""Command-line interface: ``wsdelay SUBCOMMAND --config PATH [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure or failed
invariant, 4 input/output error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import constants

from . import verify as vf
from . import wigner as wb
from .delay import count_resonances, detect_resonances, integrate_delay, time_delay
from .engine import BreitWignerScatterer, EnergyGrid, phase_shift, sample_series, unwrap_phase
from .errors import ConfigError, NumericalError
from .io.config import QuantumSpec, RunConfig, load_config
from .io.emit import delay_csv, fmt, heatmap_dat, json_text, series_dat, write_outputs
from .io.ingest import ingest_phase_shifts, read_phase_shift_csv
from .oscillator import contraction_exponent, integrate_oscillator
from .potential import layer_thresholds
from .resonance import bw_phase, classical_phase, fit_candidates, width_to_friction
from .units import HBAR, H_PLANCK

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
VERDICT_BAND = (0.9, 1.1)


# -- shared pieces -----------------------------------------------------------

def unit_scales(cfg: RunConfig):
    """(energy unit in neV, time unit in s) for the display block, or None."""
    u = cfg.units
    if not u.mass:
        return None
    mass = {"neutron": constants.m_n, "electron": constants.m_e}.get(u.mass)
    mass = float(u.mass) if mass is None else mass
    length = u.length_nm * 1e-9
    e_unit = constants.hbar ** 2 / (2 * mass * length ** 2)  # joule
    return e_unit / (constants.e * 1e-9), constants.hbar / e_unit


def _units_lines(cfg):
    scales = unit_scales(cfg)
    if scales is None:
        return []
    e_nev, t_s = scales
    return [f"display units: mass={cfg.units.mass} length={cfg.units.length_nm!r} nm",
            f"  1 energy unit = {fmt(e_nev)} neV, 1 time unit = {fmt(t_s)} s"]


def _counts(integral: float, quantum: float) -> dict:
    return {"integral": integral, "selected": integral / quantum,
            "units_of_h": integral / H_PLANCK, "units_of_hbar": integral / HBAR}


def _phase_series(source, energies):
    """Unwrapped phase for plotting: delta for one channel, arg(det S)/2 otherwise."""
    if isinstance(source, BreitWignerScatterer):
        return source.phase(energies)
    if source.n_channels == 1:
        return unwrap_phase(phase_shift(source, energies))
    # undo the reference phase exp(-2ika) carried by each of the channels
    a = source.support_end
    s = sample_series(source, energies, a).s
    det = np.linalg.det(s) * np.exp(2j * source.n_channels * np.sqrt(energies) * a)
    return np.unwrap(np.angle(det)) / 2


def _candidate_record(c, quantum):
    ratio = c.integral_quantum / quantum
    return {"E0": c.E0, "gamma": c.gamma, "peak_tau": c.peak_tau,
            "integral": c.integral_quantum, "window": list(c.window),
            "units_of_h": c.integral_quantum / H_PLANCK,
            "units_of_hbar": c.integral_quantum / HBAR,
            "verdict": VERDICT_BAND[0] <= ratio <= VERDICT_BAND[1]}


def _fit_record(f):
    return {"E0": f.params.E0, "gamma": f.params.gamma, "background_tau": f.background_tau,
            "stderr": f.stderr, "residual_norm": f.residual_norm,
            "iterations": f.iterations, "converged": f.converged,
            "friction": width_to_friction(f.params.gamma),
            "peaks": [{"E0": p.E0, "gamma": p.gamma} for p in f.peaks],
            "diagnostics": {"reason": f.diagnostics["reason"],
                            "condition": f.diagnostics["condition"]}}


def _delay_outputs(cfg, dp, candidates, quantum, mode, paper_sign, phase=None,
                   header=()):
    """Files common to scan/count/fit/ingest."""
    e_star = min(max(cfg.star_energy(), dp.energy[0]), dp.energy[-1])
    res = count_resonances(dp, e_star, quantum)
    fits = fit_candidates(dp, candidates) if mode == "fit" else []
    payload = {
        "mode": mode,
        "quantum": {"kind": cfg.quantum.kind, "value": quantum},
        "count": {"e_star": e_star, "nearest": res.nearest, "residual": res.residual,
                  **_counts(res.integral, quantum)},
        "candidates": [_candidate_record(c, quantum) for c in candidates],
        "fits": [_fit_record(f) for f in fits],
        "diagnostics": {"grid_points": len(dp.energy), "refinement_rounds": dp.refinements,
                        "reference_length": dp.reference_length_a,
                        "paper_sign": paper_sign},
    }
    files = {
        "delay.csv": delay_csv(dp, quantum),
        "resonances.json": json_text(payload),
        "plot/tau.dat": series_dat(("E", "tau"), dp.energy, dp.tau),
        "plot/cumulative.dat": series_dat(("E", "I"), dp.energy, dp.cumulative),
    }
    if phase is not None:
        files["plot/phase.dat"] = series_dat(("E", "delta"), dp.energy, phase)
    for i, f in enumerate(fits):
        lo, hi = f.params.E0 - 10 * f.params.gamma, f.params.E0 + 10 * f.params.gamma
        e = np.linspace(lo, hi, 401)
        files[f"plot/fit_phase_{i}.dat"] = series_dat(
            ("E", "delta_bw"), e, bw_phase(e, f.params, paper_sign=paper_sign))

    lines = list(header) + [
        f"mode: {mode}",
        f"grid: {len(dp.energy)} points on [{fmt(dp.energy[0])}, {fmt(dp.energy[-1])}], "
        f"{dp.refinements} refinement rounds, reference length a = {fmt(dp.reference_length_a)}",
        f"I(E*) at E* = {fmt(e_star)}: {fmt(res.integral)}",
        f"  count in units of h    = {fmt(res.count_h)}",
        f"  count in units of hbar = {fmt(res.count_hbar)}",
        f"  selected quantum {cfg.quantum.text()} -> {fmt(res.count)} (nearest {res.nearest})",
        f"resonances detected: {len(candidates)}",
    ]
    for c in candidates:
        r = c.integral_quantum / quantum
        verdict = "one resonance" if VERDICT_BAND[0] <= r <= VERDICT_BAND[1] else "not one resonance"
        lines.append(f"  E0={fmt(c.E0)} Gamma={fmt(c.gamma)} integral/quantum={fmt(r)}: {verdict}")
    for f in fits:
        lines.append(f"  fit E0={fmt(f.params.E0)} Gamma={fmt(f.params.gamma)} "
                     f"converged={f.converged}")
    scales = unit_scales(cfg)
    lines += _units_lines(cfg)
    if scales is not None:
        for c in candidates:
            lines.append(f"  E0={fmt(c.E0 * scales[0])} neV, lifetime hbar/Gamma="
                         f"{fmt(scales[1] / c.gamma)} s")
    files["report.txt"] = "\n".join(lines) + "\n"
    return files


# -- subcommands ---------------------------------------------------------------

def run_delay(cfg: RunConfig, mode: str, threads: int, paper_sign: bool) -> dict:
    source = cfg.source()
    grid = EnergyGrid.linspace(cfg.grid.e_min, cfg.grid.e_max, cfg.grid.points)
    dp = integrate_delay(source, grid, cfg.reference_length(), refine=cfg.grid.refine,
                         threads=threads)
    candidates = detect_resonances(dp) if len(dp.energy) >= 32 else []
    phase = _phase_series(source, dp.energy)
    return _delay_outputs(cfg, dp, candidates, cfg.quantum.value, mode, paper_sign, phase)


def run_ingest(cfg: RunConfig, base: Path, paper_sign: bool) -> dict:
    if not cfg.ingest_file:
        raise ConfigError("ingest: [ingest] file is required")
    path = base / cfg.ingest_file
    text = path.read_text(encoding="utf-8")
    dp = ingest_phase_shifts(text)
    candidates = detect_resonances(dp) if len(dp.energy) >= 32 else []
    phase = unwrap_phase(read_phase_shift_csv(text).delta)
    cfg = replace(cfg, e_star=float(dp.energy[-1]))
    return _delay_outputs(cfg, dp, candidates, cfg.quantum.value, "fit", paper_sign, phase,
                          header=(f"source: {cfg.ingest_file}",))


def run_oscillator(cfg: RunConfig, paper_sign: bool) -> dict:
    ocfg = cfg.oscillator.build()
    traj = integrate_oscillator(ocfg)
    stride = max(1, len(traj.times) // 20000)
    xs, ps = traj.adiabatic_frame()
    payload = {"config": {"omega0": ocfg.omega0, "ramp_rate": ocfg.ramp_rate_eps,
                          "x0": ocfg.x0, "p0": ocfg.p0, "t_end": ocfg.t_end, "dt": ocfg.dt},
               "action_drift": traj.action_drift()}
    lines = [f"oscillator: omega0={fmt(ocfg.omega0)} eps={fmt(ocfg.ramp_rate_eps)} "
             f"t_end={fmt(ocfg.t_end)} dt={fmt(ocfg.dt)}",
             f"action drift max|J-J0|/J0 = {fmt(traj.action_drift())}"]
    files = {
        "plot/spiral.dat": series_dat(("x", "p"), traj.x[::stride], traj.p[::stride]),
        "plot/adiabatic_frame.dat": series_dat(("x_sqrt_omega", "p_over_sqrt_omega"),
                                               xs[::stride], ps[::stride]),
        "plot/action.dat": series_dat(("t", "J"), traj.times[::stride], traj.action[::stride]),
    }
    series = contraction_exponent(traj)
    payload["contraction"] = {
        "gamma_initial": series.gamma_initial, "analytic_initial": series.analytic_initial,
        "gamma_mean": series.mean_gamma(), "analytic_mean": series.mean_analytic(),
        "equivalent_width": series.equivalent_width}
    lines += [f"contraction exponent at t=0: {fmt(series.gamma_initial)} "
              f"(eps omega0/2 = {fmt(series.analytic_initial)})",
              f"time-averaged exponent: {fmt(series.mean_gamma())} "
              f"(analytic {fmt(series.mean_analytic())})",
              f"equivalent width Gamma_eq = 2 hbar gamma = {fmt(series.equivalent_width)}"]
    files["plot/gamma.dat"] = series_dat(("t", "gamma"), series.times, series.gamma)
    files["plot/gamma_analytic.dat"] = series_dat(("t", "gamma"), series.times,
                                                  series.analytic)
    if series.gamma_initial > 0:
        w = ocfg.omega0 + np.linspace(-5, 5, 201) * series.gamma_initial
        files["plot/twin_phase.dat"] = series_dat(
            ("omega", "phase"), w,
            classical_phase(w, ocfg.omega0, series.gamma_initial, paper_sign=paper_sign))
    files["oscillator.json"] = json_text(payload)
    files["report.txt"] = "\n".join(lines) + "\n"
    return files


def _uniform_wigner_grid(source, e_max, points):
    """E_j = j dE, j = 1..points, with dE nudged until no node sits on a threshold."""
    thresholds = layer_thresholds(source) if not isinstance(source, BreitWignerScatterer) else ()
    de = e_max / points
    for _ in range(100):
        e = np.arange(1, points + 1) * de
        if all(np.min(np.abs(e - v)) > 1e-9 for v in thresholds):
            return e
        de *= 1 - 1e-6
    raise NumericalError("could not place a uniform grid off the thresholds")


def run_wigner(cfg: RunConfig, threads: int) -> dict:
    source = cfg.source()
    if source.n_channels != 1:
        raise ConfigError("wigner: the kernel needs a single-channel (radial or synthetic) profile")
    a = cfg.reference_length()
    e = _uniform_wigner_grid(source, cfg.wigner_e_max(), cfg.wigner.points)
    series = sample_series(source, e, a, threads=threads)
    kg = wb.van_kampen_kernel(series, a, window=cfg.wigner.window, pad=cfg.wigner.pad)
    wg = wb.wigner_distribution(kg)
    interior = wb.phase_space_delay_integral(wg)
    full = wb.phase_space_delay_integral(wg, band=(e[0], e[-1]))
    direct = wb.direct_delay_integral(series, interior.band)
    corr = wb.correlation_integral(series, cfg.wigner.eps_steps * kg.dE)
    corr_direct = wb.direct_delay_integral(series, (corr.e_lo, corr.e_hi))
    e_mid = float(e[len(e) // 2])
    sq = wb.symmetric_q(source, e_mid, kg.dE, a)
    tau_mid = float(np.asarray(time_delay(sample_series(source, np.array([e_mid]), a)))[0])
    _, _, prefactor_residue = wb.wigner_correlation(wg, kg, 2 * kg.dE)
    payload = {
        "grid": {"dE": kg.dE, "E_min": kg.E_min, "E_max": kg.E_max, "points": len(e),
                 "window": kg.window, "pad": kg.pad, "dzeta": kg.dzeta, "a": a},
        "symmetric_q": {"E": e_mid, "value_real": sq.real, "value_imag": sq.imag,
                        "time_delay": tau_mid},
        "correlation": {"eps": corr.eps, "delay_integral": corr.delay_integral,
                        "direct": corr_direct, "band": [corr.e_lo, corr.e_hi]},
        "phase_space": {"interior": interior.value, "interior_band": list(interior.band),
                        "direct_interior": direct, "full_band": full.value},
        "wigner": {"imag_residue": wg.imag_residue, "rows": len(wg.zeta_plus),
                   "first_order_prefactor_residue": prefactor_residue},
    }
    lines = [
        f"wigner: {len(e)} energies, dE={fmt(kg.dE)}, window={kg.window}, pad={kg.pad}, a={fmt(a)}",
        f"symmetric Q at E={fmt(e_mid)}: {fmt(sq.real)} (time_delay {fmt(tau_mid)})",
        f"correlation derivative: {fmt(corr.delay_integral)} vs int tau dE {fmt(corr_direct)}",
        f"phase-space integral (interior band): {fmt(interior.value)} vs int tau dE {fmt(direct)}",
        f"phase-space integral (full band): {fmt(full.value)}",
        f"W imaginary residue: {fmt(wg.imag_residue)}",
        f"first-order prefactor residue at eps=2 dE: {fmt(prefactor_residue)}",
    ]
    files = {
        "wigner.json": json_text(payload),
        "plot/kernel.dat": series_dat(("zeta", "abs_H"), kg.zeta, np.abs(kg.H)),
        "plot/wigner.dat": heatmap_dat(("zeta_plus", "E", "W"), wg.zeta_plus, wg.energy, wg.W),
        "plot/local_delay.dat": series_dat(("E", "tau_W"), interior.energy, interior.local_delay),
        "report.txt": "\n".join(lines) + "\n",
    }
    return files


def run_verify(threads: int, seed: int) -> tuple[dict, bool]:
    checks = vf.run_all(threads=threads, seed=seed)
    text = vf.report(checks)
    return {"verify.txt": text}, all(c.passed for c in checks)


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsdelay", description="Wigner-Smith time delay, resonance counting and "
                                    "adiabatic-invariance checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "scan": "tau(E) and I(E) over the configured grid",
        "count": "resonance count I(E*)/quantum with a verdict per resonance",
        "fit": "Breit-Wigner fits of detected resonances",
        "oscillator": "ramped oscillator, contraction exponent and equivalent width",
        "wigner": "kernel, Wigner function and phase-space delay integral",
        "ingest": "delay profile from a phase-shift CSV",
        "verify": "run the invariant suite and print pass/fail",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--quantum", help="counting quantum: h, hbar or custom=VALUE")
        p.add_argument("--paper-sign", action="store_true",
                       help="use (E - E0) in the Breit-Wigner phase denominator")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads (default: all cores)")
        p.add_argument("--seed", type=int, default=0, help="seed for random fixtures")
    return parser


def execute(args) -> int:
    cfg = load_config(args.config)
    if args.quantum:
        cfg = replace(cfg, quantum=QuantumSpec.parse(args.quantum))
    out = Path(args.out if args.out else cfg.out_dir)
    threads = max(1, args.threads)
    status = EXIT_OK
    if args.command in ("scan", "count", "fit"):
        files = run_delay(cfg, args.command, threads, args.paper_sign)
    elif args.command == "ingest":
        files = run_ingest(cfg, Path(args.config).resolve().parent, args.paper_sign)
    elif args.command == "oscillator":
        files = run_oscillator(cfg, args.paper_sign)
    elif args.command == "wigner":
        files = run_wigner(cfg, threads)
    else:
        files, ok = run_verify(threads, args.seed)
        status = EXIT_OK if ok else EXIT_NUMERIC
    write_outputs(out, files)
    sys.stdout.write(files.get("verify.txt", files.get("report.txt", "")))
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return execute(args)
    except (ConfigError, UnicodeDecodeError) as err:
        print(f"wsdelay: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"wsdelay: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"wsdelay: i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
