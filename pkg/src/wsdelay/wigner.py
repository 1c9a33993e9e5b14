"""From the S-matrix to a phase-space picture of the time delay.

Chain of numerical identities checked here, single channel:

* ``-i hbar d/d eps [S(E+eps/2) S*(E-eps/2)]`` at ``eps = 0`` is the delay;
* integrated over energy, that derivative of the two-point correlation of
  ``S`` equals ``int tau dE``;
* the kernel ``H(zeta) = 1/(2 pi hbar) int exp(-i E zeta/hbar) e^{2ika} S(E) dE``
  turns ``e^{2ika} S`` into a function of a time-like variable ``zeta``;
* the Wigner function of that kernel, ``W(zeta+, E)``, has first
  ``zeta+``-moment ``|f|^2 d(arg f)/dE``, so averaging ``zeta+ - 2a/v`` over
  it recovers the delay at each energy.

The energy domain is finite, so ``e^{2ika} S`` is tapered by a window before
transforming and zero-padded; every output keeps the window so comparisons
with direct quadrature can be made like-for-like.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delay import interval_integrals, time_delay
from .engine import SMatrixSample, sample_series
from .errors import NonPositiveEnergy, NonUniformGrid, OffGridEpsilon
from .units import HBAR, velocity, wavenumber

WINDOWS = ("rectangular", "hann", "blackman")


def window_function(name: str, x):
    """Taper on x in [0, 1]; zero at both ends except the rectangular one."""
    x = np.asarray(x, dtype=float)
    if name == "rectangular":
        return np.ones_like(x)
    if name == "hann":
        return np.sin(np.pi * x) ** 2
    if name == "blackman":
        return 0.42 - 0.5 * np.cos(2 * np.pi * x) + 0.08 * np.cos(4 * np.pi * x)
    raise ValueError(f"unknown window {name!r}; choose from {WINDOWS}")


def _trace_corr(s_minus, s_plus):
    """(1/N) Tr[S(E-)^dagger S(E+)] for stacked matrices."""
    prod = np.conj(np.swapaxes(s_minus, -1, -2)) @ s_plus
    return np.trace(prod, axis1=-2, axis2=-1) / s_plus.shape[-1]


# -- symmetric Q form -----------------------------------------------------------

def symmetric_q_difference(source, E: float, eps: float, a: float = 0.0) -> complex:
    """Central difference in eps of -i hbar (1/N)Tr[S(E-eps/2)^dagger S(E+eps/2)]."""
    if E - abs(eps) / 2 <= 0:
        raise NonPositiveEnergy("E - eps/2 must stay positive")
    e = np.array([E - eps / 2, E + eps / 2])
    s = sample_series(source, e, a).s
    c_plus = _trace_corr(s[0], s[1])
    c_minus = _trace_corr(s[1], s[0])
    return complex(-1j * HBAR * (c_plus - c_minus) / (2 * eps))


def symmetric_q(source, E: float, eps: float, a: float = 0.0) -> complex:
    """Delay from the symmetric correlation form, Richardson-extrapolated eps -> 0.

    Three step sizes (eps, eps/2, eps/4) and two extrapolation levels remove
    the eps^2 and eps^4 error terms.
    """
    d = [symmetric_q_difference(source, E, eps / 2 ** i, a) for i in range(3)]
    r1 = [(4 * d[i + 1] - d[i]) / 3 for i in range(2)]
    return (16 * r1[1] - r1[0]) / 15


# -- correlation integral ----------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    """int S(E+eps/2) S*(E-eps/2) dE over ``[e_lo, e_hi]`` and its eps-derivative."""

    eps: float
    value: complex
    delay_integral: float
    e_lo: float
    e_hi: float


def _uniform_spacing(energies, rtol=1e-9):
    e = np.asarray(energies, dtype=float)
    d = np.diff(e)
    if len(e) < 3 or np.any(np.abs(d - d[0]) > rtol * d[0]):
        raise NonUniformGrid("a uniform energy grid is required")
    return float((e[-1] - e[0]) / (len(e) - 1))


def correlation_integral(series: SMatrixSample, eps: float) -> CorrelationResult:
    """Two-point correlation of S integrated over energy.

    ``eps`` must be a whole multiple ``m`` of the grid spacing, at most 8, so
    that both partners ``E +- eps/2`` are grid nodes. For even ``m`` the base
    energies are nodes; for odd ``m`` they are interval midpoints. No
    interpolation is involved. The base range is the largest one for which
    both partners exist.
    """
    e = np.asarray(series.energy, dtype=float)
    de = _uniform_spacing(e)
    m_float = eps / de
    m = int(round(m_float))
    if m < 1 or abs(m_float - m) > 1e-9 * max(1.0, m_float):
        raise OffGridEpsilon(f"eps = {eps!r} is not a positive multiple of dE = {de!r}")
    if m > 8:
        raise OffGridEpsilon("eps exceeds 8 grid spacings")
    if m % 2 == 0:
        shift = m // 2
        idx = np.arange(shift, len(e) - shift)
        plus, minus = idx + shift, idx - shift
        base = e[idx]
    else:
        half = (m - 1) // 2
        idx = np.arange(half, len(e) - 1 - half)  # midpoint between idx and idx+1
        plus, minus = idx + 1 + half, idx - half
        base = 0.5 * (e[idx] + e[idx + 1])
    corr = _trace_corr(series.s[minus], series.s[plus])
    value = complex(np.sum(interval_integrals(base, corr.real))
                    + 1j * np.sum(interval_integrals(base, corr.imag)))
    # C(-eps) = conj(C(eps)), so the central difference is Im C / eps
    delay = HBAR * value.imag / eps
    return CorrelationResult(float(eps), value, float(delay), float(base[0]), float(base[-1]))


# -- van Kampen kernel --------------------------------------------------------

@dataclass(frozen=True)
class KernelGrid:
    """Discrete kernel ``H`` on a centred zeta grid.

    ``zeta`` runs over ``[-zeta_max/2, zeta_max/2)`` with spacing
    ``2 pi hbar/(pad * M * dE)``; negative zeta carries leakage from the finite
    band and windowing. ``window_values`` holds the taper applied at each
    source energy.
    """

    zeta: np.ndarray
    H: np.ndarray
    a: float
    dE: float
    E_min: float
    E_max: float
    energies: np.ndarray
    window: str
    window_values: np.ndarray
    pad: int

    @property
    def dzeta(self):
        return float(self.zeta[1] - self.zeta[0])

    def window_at(self, energy):
        m = len(self.energies)
        x = (np.asarray(energy) - (self.E_min - self.dE)) / ((m + 1) * self.dE)
        return window_function(self.window, x)


def van_kampen_kernel(series: SMatrixSample, a: float, window: str = "hann",
                      pad: int = 4) -> KernelGrid:
    if series.n_channels != 1:
        raise ValueError("the kernel is defined for single-channel S-matrices")
    if pad < 1:
        raise ValueError("pad must be >= 1")
    e = np.asarray(series.energy, dtype=float)
    de = _uniform_spacing(e)
    if e[0] > de * (1 + 1e-9):
        raise NonUniformGrid(f"grid must start at or below dE = {de!r}, starts at {e[0]!r}")
    m = len(e)
    x = (e - (e[0] - de)) / ((m + 1) * de)
    w = window_function(window, x)
    f = w * np.exp(2j * wavenumber(e) * a) * series.s[:, 0, 0]
    n = pad * m
    dz = 2 * np.pi * HBAR / (n * de)
    idx = np.arange(-n // 2, n // 2)
    zeta = idx * dz
    spec = np.fft.fft(f, n)[idx % n]
    h = de / (2 * np.pi * HBAR) * np.exp(-1j * e[0] * zeta / HBAR) * spec
    return KernelGrid(zeta, h, float(a), de, float(e[0]), float(e[-1]), e, window, w, pad)


def reconstruct(kg: KernelGrid) -> np.ndarray:
    """Inverse transform: windowed ``e^{2ika} S`` at the source energies, window removed."""
    n = len(kg.zeta)
    g = kg.H * np.exp(1j * kg.E_min * kg.zeta / HBAR) * kg.dzeta
    circ = np.zeros(n, dtype=complex)
    circ[np.arange(-n // 2, n // 2) % n] = g
    f = n * np.fft.ifft(circ)[: len(kg.energies)]
    with np.errstate(divide="ignore", invalid="ignore"):
        return f / kg.window_values


def kernel_decay_rate(kg: KernelGrid, zeta_lo: float, zeta_hi: float) -> float:
    """Slope of ln|H(zeta)| over ``[zeta_lo, zeta_hi]`` (least squares)."""
    sel = (kg.zeta >= zeta_lo) & (kg.zeta <= zeta_hi)
    return float(np.polyfit(kg.zeta[sel], np.log(np.abs(kg.H[sel])), 1)[0])


# -- Wigner distribution ---------------------------------------------------------

@dataclass(frozen=True)
class WignerGrid:
    zeta_plus: np.ndarray
    energy: np.ndarray
    W: np.ndarray
    window_values: np.ndarray
    imag_residue: float
    dzeta: float
    a: float
    window: str

    def energy_marginal(self):
        return self.W.sum(axis=0) * self.dzeta

    def zeta_moment(self):
        return (self.zeta_plus[:, None] * self.W).sum(axis=0) * self.dzeta


def wigner_distribution(kg: KernelGrid, mass_cut: float = 1e-16,
                        batch: int = 256) -> WignerGrid:
    """W(zeta+, E) = int exp(i E zeta-/hbar) H(zeta+ + zeta-/2) H*(zeta+ - zeta-/2) dzeta-.

    Evaluated at the source energies for every zeta+ node whose row can
    carry weight: rows are kept between the outermost nodes where ``|H|^2``
    exceeds ``mass_cut`` times its maximum. Lags stay inside the kernel grid.
    """
    if kg.pad < 2:
        raise ValueError("the Wigner transform needs a kernel padded at least 2x "
                         "to stay alias-free")
    n = len(kg.zeta)
    dz = kg.dzeta
    h = kg.H
    power = np.abs(h) ** 2
    live = np.flatnonzero(power > mass_cut * power.max())
    rows = np.arange(live[0], live[-1] + 1)  # indices into the centred grid
    lags = np.arange(-n // 2, n // 2)
    phase = np.exp(2j * kg.E_min * lags * dz / HBAR)
    cols = (2 * np.arange(len(kg.energies))) % n
    out = np.empty((len(rows), len(kg.energies)))
    worst_im, worst_re = 0.0, 0.0
    for start in range(0, len(rows), batch):
        r = rows[start:start + batch]
        p = r[:, None] + lags[None, :]
        q = r[:, None] - lags[None, :]
        ok = (p >= 0) & (p < n) & (q >= 0) & (q < n)
        prod = np.where(ok, h[np.clip(p, 0, n - 1)] * np.conj(h[np.clip(q, 0, n - 1)]), 0)
        prod *= phase[None, :]
        circ = np.zeros_like(prod)
        circ[:, lags % n] = prod
        vals = 2 * dz * n * np.fft.ifft(circ, axis=1)[:, cols]
        worst_im = max(worst_im, float(np.abs(vals.imag).max()))
        worst_re = max(worst_re, float(np.abs(vals.real).max()))
        out[start:start + len(r)] = vals.real
    residue = worst_im / worst_re if worst_re > 0 else 0.0
    return WignerGrid(kg.zeta[rows], kg.energies.copy(), out, kg.window_values.copy(),
                      residue, dz, kg.a, kg.window)


# -- phase-space delay integral -----------------------------------------------

@dataclass(frozen=True)
class PhaseSpaceResult:
    value: float
    band: tuple[float, float]
    local_delay: np.ndarray
    energy: np.ndarray
    normalized: bool


def interior_band(energy, fraction=0.8):
    lo, hi = float(energy[0]), float(energy[-1])
    trim = 0.5 * (1 - fraction) * (hi - lo)
    return lo + trim, hi - trim


def phase_space_delay_integral(wg: WignerGrid, a: float | None = None, band=None,
                               normalize: bool = True) -> PhaseSpaceResult:
    """Energy integral of the delay ``zeta+ - 2a/v`` weighted by W.

    With ``normalize`` the ``zeta+`` average at each energy is taken over W
    itself (dividing by the energy marginal), which removes the window taper;
    otherwise the plain double integral is returned, which equals the
    window-squared-weighted delay integral.
    """
    a = wg.a if a is None else a
    band = interior_band(wg.energy) if band is None else band
    sel = (wg.energy >= band[0]) & (wg.energy <= band[1])
    e = wg.energy[sel]
    rho = wg.energy_marginal()[sel]
    moment = wg.zeta_moment()[sel]
    flight = 2.0 * a / velocity(e)
    if normalize:
        local = moment / rho - flight
    else:
        local = moment - flight * rho
    value = float(np.sum(interval_integrals(e, local)))
    return PhaseSpaceResult(value, (float(e[0]), float(e[-1])), local, e, normalize)


def direct_delay_integral(series: SMatrixSample, band, weights=None) -> float:
    """Oracle: composite-Simpson integral of tau(E) over grid nodes inside ``band``."""
    e = np.asarray(series.energy)
    sel = (e >= band[0]) & (e <= band[1])
    tau = time_delay(series[sel])
    if weights is not None:
        tau = tau * np.asarray(weights)[sel]
    return float(np.sum(interval_integrals(e[sel], tau)))


def wigner_correlation(wg: WignerGrid, kg: KernelGrid, eps: float, order: int = 1):
    """Rebuild S(E+eps/2) S*(E-eps/2) from W at the grid energies.

    The zeta+ transform of W gives the windowed product of ``e^{2ika} S``;
    the reference phase is then removed with ``exp(-2i(k+ - k-)a)``, either
    exactly or expanded to first order in eps as ``exp(-i a eps/sqrt(E))``.
    Returns ``(product, residue)``, the residue being the largest difference
    between the first-order and exact prefactors.
    """
    e = wg.energy
    if np.any(e - eps / 2 <= 0):
        keep = e - eps / 2 > 0
    else:
        keep = np.ones_like(e, dtype=bool)
    e = e[keep]
    transform = (np.exp(1j * eps * wg.zeta_plus / HBAR)[:, None] * wg.W[:, keep]).sum(axis=0) * wg.dzeta
    taper = kg.window_at(e + eps / 2) * kg.window_at(e - eps / 2)
    kp, km = wavenumber(e + eps / 2), wavenumber(e - eps / 2)
    exact = np.exp(-2j * (kp - km) * wg.a)
    first = np.exp(-1j * wg.a * eps / np.sqrt(e))
    pref = first if order == 1 else exact
    with np.errstate(divide="ignore", invalid="ignore"):
        product = pref * transform / taper
    return e, product, float(np.max(np.abs(first - exact)))
