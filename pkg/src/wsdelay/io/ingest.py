"""Delay profiles from tabulated phase shifts.

Input is CSV text with header ``E,delta`` or ``E,delta,sigma`` (angles in
radians, energies strictly increasing, at least 8 rows). The phase is
unwrapped modulo pi, interpolated by a natural cubic spline, and the delay
is ``tau = 2 hbar d(delta)/dE`` from the spline derivative, sampled on the
input energies.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ..delay import DelayProfile, delay_profile
from ..engine import EnergyGrid, unwrap_phase
from ..errors import BadHeader, NonMonotonicEnergy, TooFewRows
from ..units import HBAR

MIN_ROWS = 8


@dataclass(frozen=True)
class PhaseShiftTable:
    energy: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray | None = None


def read_phase_shift_csv(text: str) -> PhaseShiftTable:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise TooFewRows("empty phase-shift table")
    header = [c.strip() for c in rows[0]]
    if header not in (["E", "delta"], ["E", "delta", "sigma"]):
        raise BadHeader(f"header must be 'E,delta' or 'E,delta,sigma', got {','.join(header)!r}")
    body = rows[1:]
    if len(body) < MIN_ROWS:
        raise TooFewRows(f"need at least {MIN_ROWS} rows, got {len(body)}")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as err:
        raise BadHeader(f"non-numeric entry: {err}") from None
    if data.shape[1] != len(header):
        raise BadHeader("row length does not match header")
    if not np.all(np.isfinite(data)):
        raise BadHeader("table contains non-finite values")
    e = data[:, 0]
    bad = np.flatnonzero(np.diff(e) <= 0)
    if bad.size:
        i = int(bad[0])
        raise NonMonotonicEnergy(f"energy not strictly increasing at data row {i + 2}: "
                                 f"{e[i]!r} -> {e[i + 1]!r}")
    sigma = data[:, 2] if data.shape[1] == 3 else None
    return PhaseShiftTable(e, data[:, 1], sigma)


def table_delay(table: PhaseShiftTable):
    """Unwrapped phase spline and its delay on the table energies."""
    delta = unwrap_phase(table.delta)
    spline = CubicSpline(table.energy, delta, bc_type="natural")
    return spline, 2.0 * HBAR * spline(table.energy, 1)


def ingest_phase_shifts(text: str) -> DelayProfile:
    table = read_phase_shift_csv(text)
    _, tau = table_delay(table)
    return delay_profile(EnergyGrid.from_points(table.energy), tau, channels=1)


def format_phase_shift_csv(energy, delta, sigma=None) -> str:
    """Write a table in the ingest format with round-trip precision."""
    lines = ["E,delta" if sigma is None else "E,delta,sigma"]
    for i, (e, d) in enumerate(zip(energy, delta)):
        row = [repr(float(e)), repr(float(d))]
        if sigma is not None:
            row.append(repr(float(sigma[i])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"

