"""Wigner-Smith time delay, its energy integral and resonance counting.

``Q = -i hbar S^dagger dS/dE`` is the lifetime matrix; the channel-averaged
delay is ``tau = Tr(Q)/N``. The cumulative integral ``I(E) = int tau dE``
divided by a counting quantum estimates the number of resonances below
``E``. For an isolated Breit-Wigner resonance ``tau = 2 hbar d(delta)/dE``
and the phase sweeps by pi, so one resonance contributes exactly
``2 pi hbar = h``; that is the default quantum, and the count in units of
``hbar`` is always reported alongside.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import EnergyGrid, SMatrixSample, nudge_off_thresholds, sample_series
from .errors import NonUnitaryInput, NumericalError, OutOfRange, RefinementLimit
from .potential import ValidatedProfile, layer_thresholds
from .units import H_PLANCK, HBAR

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-10
MAX_POINTS = 10**6


@dataclass(frozen=True)
class DelayProfile:
    grid: EnergyGrid
    tau: np.ndarray
    cumulative: np.ndarray
    channels: int
    reference_length_a: float = 0.0
    refinements: int = 0

    @property
    def energy(self):
        return self.grid.points


@dataclass(frozen=True)
class ResonanceCandidate:
    E0: float
    gamma: float
    peak_tau: float
    integral_quantum: float
    window: tuple[float, float]


@dataclass(frozen=True)
class CountResult:
    """Resonance count ``I(E*)/quantum`` with diagnostics.

    ``count_h`` and ``count_hbar`` are the same integral expressed in units of
    ``2 pi hbar`` and ``hbar``; both are kept whatever quantum was selected.
    """

    count: float
    nearest: int
    residual: float
    quantum: float
    integral: float
    e_star: float
    count_h: float
    count_hbar: float
    notes: tuple[str, ...] = field(default=())


def _unitarity_defect(s):
    sds = np.conj(np.swapaxes(s, -1, -2)) @ s
    eye = np.eye(s.shape[-1])
    return np.abs(sds - eye).max(axis=(-2, -1))


def q_matrix(sample: SMatrixSample) -> np.ndarray:
    """Lifetime matrix -i hbar S^dagger dS/dE (batched over leading axes)."""
    defect = _unitarity_defect(sample.s)
    if np.any(defect > UNITARITY_TOL):
        raise NonUnitaryInput(f"||S^dagger S - I||_max = {np.max(defect):.3e}")
    sh = np.conj(np.swapaxes(sample.s, -1, -2))
    return -1j * HBAR * (sh @ sample.ds_dE)


def hermiticity_defect(q) -> np.ndarray:
    return np.abs(q - np.conj(np.swapaxes(q, -1, -2))).max(axis=(-2, -1))


def time_delay(sample: SMatrixSample):
    q = q_matrix(sample)
    n = q.shape[-1]
    tr = np.trace(q, axis1=-2, axis2=-1) / n
    scale = np.maximum(1.0, np.abs(tr.real))
    if np.any(np.abs(tr.imag) > HERMITICITY_TOL * scale):
        raise NumericalError(
            f"Tr Q has imaginary part {np.max(np.abs(tr.imag)):.3e}; Q is not Hermitian"
        )
    return tr.real if np.ndim(tr) else float(tr.real)


# -- quadrature -------------------------------------------------------------

def _uniform_runs(x, rtol=1e-9):
    """Split interval indices into maximal runs of equal spacing."""
    h = np.diff(x)
    runs = []
    start = 0
    for i in range(1, len(h)):
        if abs(h[i] - h[start]) > rtol * h[start]:
            runs.append((start, i))
            start = i
    runs.append((start, len(h)))
    return runs


# intervals starting closer to E = 0 than this many spacings get the
# product rule for an inverse-square-root endpoint
ORIGIN_ZONE = 20.0
# ...but only on grids whose first node lies within this many spacings of E = 0
ORIGIN_START = 10.0


def _origin_intervals(x, y, out):
    """Replace intervals near E = 0 by product integration against E^(-1/2).

    Near threshold ``tau`` behaves like ``c/sqrt(E)`` (free flight and the
    scattering length both contribute), so ``g = tau sqrt(E)`` is smooth.
    ``g`` is interpolated by the parabola through three neighbouring nodes
    and ``g(E)/sqrt(E)`` is integrated exactly.
    """
    n = len(x)
    # only grids that start within a few spacings of E = 0 see the singularity
    if n < 3 or x[0] <= 0 or x[0] >= ORIGIN_START * (x[1] - x[0]):
        return
    g = y * np.sqrt(x)
    for i in range(n - 1):
        h = x[i + 1] - x[i]
        if x[i] >= ORIGIN_ZONE * h:
            break
        j = min(i, n - 3)
        nodes = x[j:j + 3]
        coef = np.polyfit(nodes - x[i], g[j:j + 3], 2)  # exact through 3 points
        c2, c1, c0 = coef
        # expand in powers of E: g = c0 + c1 (E - xi) + c2 (E - xi)^2
        xi = x[i]
        p0 = c0 - c1 * xi + c2 * xi * xi
        p1 = c1 - 2 * c2 * xi
        p2 = c2
        a, b = np.sqrt(x[i]), np.sqrt(x[i + 1])
        out[i] = (2 * p0 * (b - a) + (2 / 3) * p1 * (b ** 3 - a ** 3)
                  + (2 / 5) * p2 * (b ** 5 - a ** 5))


def interval_integrals(x, y, origin_singular: bool = False) -> np.ndarray:
    """Integral of ``y`` over each interval ``[x_i, x_{i+1}]``.

    Within a run of equally spaced points the parabola through three
    neighbouring samples is integrated (pairs of intervals then reproduce
    composite Simpson exactly); a run of a single interval uses the
    trapezoid rule. With ``origin_singular`` the intervals near ``x = 0``
    assume ``y ~ 1/sqrt(x)`` there (see :func:`_origin_intervals`).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty(len(x) - 1)
    for lo, hi in _uniform_runs(x):
        m = hi - lo
        if m == 1:
            out[lo] = 0.5 * (x[lo + 1] - x[lo]) * (y[lo] + y[lo + 1])
            continue
        h = (x[hi] - x[lo]) / m
        yy = y[lo:hi + 1]
        forward = h / 12.0 * (5 * yy[:-2] + 8 * yy[1:-1] - yy[2:])   # intervals 0..m-2
        backward = h / 12.0 * (-yy[:-2] + 8 * yy[1:-1] + 5 * yy[2:])  # intervals 1..m-1
        seg = np.empty(m)
        seg[0::2] = forward[0::2] if m % 2 == 0 else np.append(forward[0::2], backward[-1])
        seg[1::2] = backward[0::2]
        out[lo:hi] = seg
    if origin_singular:
        _origin_intervals(x, y, out)
    return out


def cumulative_integral(x, y, origin_singular: bool = False) -> np.ndarray:
    out = np.zeros(len(x))
    out[1:] = np.cumsum(interval_integrals(x, y, origin_singular))
    return out


def definite_integral(x, y) -> float:
    return float(np.sum(interval_integrals(x, y)))


# -- profile construction ---------------------------------------------------

def delay_profile(grid: EnergyGrid, tau, channels: int, a: float = 0.0,
                  refinements: int = 0) -> DelayProfile:
    tau = np.asarray(tau, dtype=float)
    return DelayProfile(grid, tau, cumulative_integral(grid.points, tau, origin_singular=True),
                        channels, float(a), refinements)


def _evaluate(source, energies, a, threads):
    return time_delay(sample_series(source, energies, a, threads=threads))


def _thresholds(source):
    if isinstance(source, ValidatedProfile):
        return layer_thresholds(source)
    return ()


def _merge_windows(windows):
    windows = sorted(windows)
    merged = [list(windows[0])]
    for lo, hi, step in windows[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
            merged[-1][2] = min(merged[-1][2], step)
        else:
            merged.append([lo, hi, step])
    return merged


def integrate_delay(source, grid: EnergyGrid, a: float = 0.0, refine: bool = True,
                    threads: int = 1, max_points: int = MAX_POINTS,
                    max_rounds: int = 12) -> DelayProfile:
    """Sample tau on ``grid`` and accumulate ``I(E)``.

    With ``refine`` the grid is densified around every detected peak until
    the spacing within ``+-5 Gamma_est`` is at most ``Gamma_est/20``.
    ``source`` is a :class:`ValidatedProfile` or a synthetic scatterer.
    """
    points = np.asarray(grid.points, dtype=float)
    thresholds = _thresholds(source)
    points = nudge_off_thresholds(points, thresholds)
    channels = source.n_channels
    tau = _evaluate(source, points, a, threads)
    rounds = 0
    while refine and rounds < max_rounds:
        dp = delay_profile(EnergyGrid.from_points(points), tau, channels, a)
        windows = []
        for c in detect_resonances(dp):
            lo = max(points[0], c.E0 - 5 * c.gamma)
            hi = min(points[-1], c.E0 + 5 * c.gamma)
            target = c.gamma / 20.0
            inside = (points >= lo) & (points <= hi)
            idx = np.flatnonzero(inside)
            span = points[max(idx[0] - 1, 0):idx[-1] + 2] if idx.size else points
            if idx.size >= 2 and np.max(np.diff(span)) <= target * (1 + 1e-9):
                continue
            windows.append((lo, hi, target))
        if not windows:
            break
        for lo, hi, step in _merge_windows(windows):
            n = int(np.ceil((hi - lo) / step)) + 1
            if len(points) + n > max_points:
                raise RefinementLimit(f"refinement would exceed {max_points} points")
            keep = (points < lo) | (points > hi)
            points = np.union1d(points[keep], np.linspace(lo, hi, n))
        # drop points closer than a relative 1e-12 (window edges meeting old nodes)
        d = np.diff(points)
        points = points[np.concatenate([[True], d > 1e-12 * np.abs(points[1:])])]
        points = nudge_off_thresholds(points, thresholds)
        tau = _evaluate(source, points, a, threads)
        rounds += 1
    return delay_profile(EnergyGrid.from_points(points), tau, channels, a, rounds)


# -- counting and detection ---------------------------------------------------

def count_resonances(dp: DelayProfile, E_star: float, quantum: float = H_PLANCK) -> CountResult:
    e = dp.energy
    if not (e[0] <= E_star <= e[-1]):
        raise OutOfRange(f"E* = {E_star!r} outside grid [{e[0]!r}, {e[-1]!r}]")
    integral = _cumulative_at(dp, E_star)
    count = integral / quantum
    nearest = int(np.rint(count))
    notes = []
    if abs(quantum - HBAR) < 1e-15:
        notes.append("quantum = hbar: one isolated resonance contributes 2*pi")
    return CountResult(
        count=count,
        nearest=nearest,
        residual=count - nearest,
        quantum=quantum,
        integral=integral,
        e_star=float(E_star),
        count_h=integral / H_PLANCK,
        count_hbar=integral / HBAR,
        notes=tuple(notes),
    )


def _cumulative_at(dp: DelayProfile, energy: float) -> float:
    """I(energy), integrating the last partial interval with the trapezoid rule."""
    e = dp.energy
    i = int(np.searchsorted(e, energy, side="right")) - 1
    i = min(max(i, 0), len(e) - 1)
    if i == len(e) - 1 or e[i] == energy:
        return float(dp.cumulative[i])
    t = (energy - e[i]) / (e[i + 1] - e[i])
    tau_mid = dp.tau[i] + t * (dp.tau[i + 1] - dp.tau[i])
    return float(dp.cumulative[i] + 0.5 * (energy - e[i]) * (dp.tau[i] + tau_mid))


def _local_maxima(y):
    """Indices of strict local maxima; a flat top reports its leftmost sample."""
    idx = []
    n = len(y)
    i = 1
    while i < n - 1:
        if y[i] > y[i - 1]:
            j = i
            while j < n - 1 and y[j + 1] == y[i]:
                j += 1
            if j < n - 1 and y[j + 1] < y[i]:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    return idx


def _half_crossing(e, tau, i, half, step):
    j = i
    while 0 < j < len(e) - 1 and tau[j] >= half:
        j += step
    if tau[j] >= half:
        return None
    k = j - step
    return e[j] + (half - tau[j]) * (e[k] - e[j]) / (tau[k] - tau[j])


def _parabolic_peak(e, tau, i):
    if i == 0 or i == len(e) - 1:
        return e[i], tau[i]
    x = e[i - 1:i + 2]
    y = tau[i - 1:i + 2]
    c2, c1, c0 = np.polyfit(x - x[1], y, 2)
    if c2 >= 0:
        return e[i], tau[i]
    off = -c1 / (2 * c2)
    if abs(off) > max(x[2] - x[1], x[1] - x[0]):
        return e[i], tau[i]
    return x[1] + off, c0 - c1 * c1 / (4 * c2)


def detect_resonances(dp: DelayProfile) -> list[ResonanceCandidate]:
    """Peaks of tau standing more than 5 MAD above the median.

    The width comes from the full width at half maximum; the window is
    ``E0 +- 5 Gamma`` and ``integral_quantum`` is the rise of ``I(E)`` across
    it (raw, background included).
    """
    e, tau = dp.energy, dp.tau
    if len(e) < 32:
        return []
    med = np.median(tau)
    mad = np.median(np.abs(tau - med))
    threshold = med + 5.0 * mad
    found = []
    for i in _local_maxima(tau):
        if not tau[i] > threshold or tau[i] <= 0:
            continue
        half = 0.5 * tau[i]
        left = _half_crossing(e, tau, i, half, -1)
        right = _half_crossing(e, tau, i, half, +1)
        if left is None and right is None:
            continue
        e0, peak = _parabolic_peak(e, tau, i)
        if left is None:
            gamma = 2.0 * (right - e0)
        elif right is None:
            gamma = 2.0 * (e0 - left)
        else:
            gamma = right - left
        if not gamma > 0:
            continue
        lo = max(e[0], e0 - 5 * gamma)
        hi = min(e[-1], e0 + 5 * gamma)
        jump = _cumulative_at(dp, hi) - _cumulative_at(dp, lo)
        found.append(ResonanceCandidate(float(e0), float(gamma), float(peak),
                                        float(jump), (float(lo), float(hi))))
    return found
