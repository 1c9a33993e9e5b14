"""Exact S-matrices of piecewise-constant potentials via transfer matrices.

Inside a layer of height ``V`` the wavefunction is a superposition of
``exp(+i kappa x)`` and ``exp(-i kappa x)`` with ``kappa = sqrt(E - V)`` on
the principal branch, so evanescent layers simply get an imaginary
``kappa``. Matching value and slope at each interface gives a 2x2 matrix per
interface; chaining them (and their energy derivatives, by the product rule)
yields the S-matrix and an analytic ``dS/dE``.

Phase convention: the S-matrix carries the factor ``exp(-2ika)`` for the
reference length ``a``, so moving the reference outward by ``d`` multiplies
``S`` by ``exp(-2ikd)`` and lowers the delay by the free-flight time
``2d/v``. With ``a = 0`` the radial S-matrix is the bare ``exp(2i delta_0)``.

All routines accept an array of energies and evaluate every energy
independently with elementwise arithmetic, so results do not depend on how a
grid is chunked or threaded.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EnergyAtThreshold,
    NonPositiveEnergy,
    NonUniformGrid,
    ReferenceInsideSupport,
)
from .potential import Geometry, ValidatedProfile
from .units import wavenumber

THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class SMatrixSample:
    """S-matrix and its energy derivative.

    ``s`` and ``ds_dE`` have shape ``(N, N)`` for a single energy or
    ``(n, N, N)`` for ``n`` energies; ``energy`` is then a float or an array of
    length ``n``.
    """

    energy: float | np.ndarray
    s: np.ndarray
    ds_dE: np.ndarray
    reference_length_a: float

    @property
    def n_channels(self) -> int:
        return self.s.shape[-1]

    def __len__(self):
        return 0 if np.ndim(self.energy) == 0 else len(self.energy)

    def __getitem__(self, idx):
        return SMatrixSample(
            energy=np.asarray(self.energy)[idx],
            s=self.s[idx],
            ds_dE=self.ds_dE[idx],
            reference_length_a=self.reference_length_a,
        )


@dataclass(frozen=True)
class EnergyGrid:
    points: np.ndarray
    uniform: bool
    min_spacing: float

    @classmethod
    def from_points(cls, points, rtol=1e-9) -> "EnergyGrid":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("energy grid needs at least two points")
        if not np.all(pts > 0):
            raise NonPositiveEnergy("grid energies must be > 0 (E = 0 is a branch point)")
        d = np.diff(pts)
        if not np.all(d > 0):
            raise ValueError("energy grid must be strictly increasing")
        uniform = bool(np.all(np.abs(d - d[0]) <= rtol * d[0]))
        return cls(points=pts, uniform=uniform, min_spacing=float(d.min()))

    @classmethod
    def linspace(cls, e_min, e_max, n) -> "EnergyGrid":
        return cls.from_points(np.linspace(e_min, e_max, int(n)))

    @property
    def spacing(self) -> float:
        if not self.uniform:
            raise NonUniformGrid("grid spacing is not uniform")
        return float((self.points[-1] - self.points[0]) / (len(self.points) - 1))

    def __len__(self):
        return len(self.points)


# -- elementwise 2x2 algebra on (..., 2, 2) stacks -------------------------

def _mm(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    out[..., 0, 0] = a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0]
    out[..., 0, 1] = a[..., 0, 0] * b[..., 0, 1] + a[..., 0, 1] * b[..., 1, 1]
    out[..., 1, 0] = a[..., 1, 0] * b[..., 0, 0] + a[..., 1, 1] * b[..., 1, 0]
    out[..., 1, 1] = a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1]
    return out


def _mv(a, v):
    return np.stack(
        [a[..., 0, 0] * v[..., 0] + a[..., 0, 1] * v[..., 1],
         a[..., 1, 0] * v[..., 0] + a[..., 1, 1] * v[..., 1]],
        axis=-1,
    )


def _interface(kap1, dkap1, kap2, dkap2):
    """Coefficient map across an interface from wavenumber ``kap1`` to ``kap2``."""
    rho = kap1 / kap2
    drho = (dkap1 * kap2 - kap1 * dkap2) / (kap2 * kap2)
    m = np.empty(rho.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = m[..., 1, 1] = 0.5 * (1.0 + rho)
    m[..., 0, 1] = m[..., 1, 0] = 0.5 * (1.0 - rho)
    dm = np.empty_like(m)
    dm[..., 0, 0] = dm[..., 1, 1] = 0.5 * drho
    dm[..., 0, 1] = dm[..., 1, 0] = -0.5 * drho
    return m, dm


def _advance(kap, dkap, width):
    ep = np.exp(1j * kap * width)
    em = np.exp(-1j * kap * width)
    m = np.zeros(kap.shape + (2, 2), dtype=complex)
    dm = np.zeros_like(m)
    m[..., 0, 0] = ep
    m[..., 1, 1] = em
    dm[..., 0, 0] = 1j * width * dkap * ep
    dm[..., 1, 1] = -1j * width * dkap * em
    return m, dm


def _apply(mat, dmat, acc, dacc):
    """(mat, dmat) applied on the left of an accumulated (acc, dacc)."""
    return _mm(mat, acc), _mm(dmat, acc) + _mm(mat, dacc)


def _check_energies(profile: ValidatedProfile, energies):
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    if not np.all(e > 0):
        raise NonPositiveEnergy("scattering energies must be > 0")
    for layer in profile.layers:
        close = np.abs(e - layer.height) < THRESHOLD_TOL
        if np.any(close):
            raise EnergyAtThreshold(
                f"E = {e[close][0]!r} coincides with layer height {layer.height!r}"
            )
    return e


def _local_wavenumbers(profile, e):
    kaps = [np.sqrt((e - layer.height).astype(complex)) for layer in profile.layers]
    dkaps = [0.5 / kap for kap in kaps]
    return kaps, dkaps


def _transfer(profile: ValidatedProfile, e: np.ndarray):
    """Full-line transfer matrix and derivative for an array of energies."""
    k = wavenumber(e).astype(complex)
    dk = 0.5 / k
    eye = np.zeros(e.shape + (2, 2), dtype=complex)
    eye[..., 0, 0] = eye[..., 1, 1] = 1.0
    m, dm = eye, np.zeros_like(eye)
    if profile.is_free:
        return m, dm
    kaps, dkaps = _local_wavenumbers(profile, e)
    prev, dprev = k, dk
    for layer, kap, dkap in zip(profile.layers, kaps, dkaps):
        m, dm = _apply(*_interface(prev, dprev, kap, dkap), m, dm)
        m, dm = _apply(*_advance(kap, dkap, layer.width), m, dm)
        prev, dprev = kap, dkap
    m, dm = _apply(*_interface(prev, dprev, k, dk), m, dm)
    # right-hand coefficients referred back to the global origin
    shift, dshift = _advance(k, dk, -profile.support_end)
    return _apply(shift, dshift, m, dm)


def transfer_matrix(profile: ValidatedProfile, E) -> np.ndarray:
    """Map from left plane-wave coefficients to right ones.

    Both sides use the global basis ``A exp(ikx) + B exp(-ikx)``, so a free
    particle gives the identity and ``|det M| = 1`` for any real potential.
    """
    e = _check_energies(profile, E)
    m, _ = _transfer(profile, e)
    return m[0] if np.ndim(E) == 0 else m


def _radial_coefficients(profile: ValidatedProfile, e: np.ndarray):
    """Outer coefficients (A, B) of u = A e^{ikr} + B e^{-ikr}, regular at r=0."""
    k = wavenumber(e).astype(complex)
    dk = 0.5 / k
    v = np.zeros(e.shape + (2,), dtype=complex)
    v[..., 0], v[..., 1] = 1.0, -1.0
    dv = np.zeros_like(v)
    if profile.is_free:
        return v, dv
    kaps, dkaps = _local_wavenumbers(profile, e)
    for i, (layer, kap, dkap) in enumerate(zip(profile.layers, kaps, dkaps)):
        adv, dadv = _advance(kap, dkap, layer.width)
        v, dv = _mv(adv, v), _mv(dadv, v) + _mv(adv, dv)
        if i + 1 < len(kaps):
            nxt, dnxt = kaps[i + 1], dkaps[i + 1]
        else:
            nxt, dnxt = k, dk
        jm, djm = _interface(kap, dkap, nxt, dnxt)
        v, dv = _mv(jm, v), _mv(djm, v) + _mv(jm, dv)
    shift, dshift = _advance(k, dk, -profile.support_end)
    return _mv(shift, v), _mv(dshift, v) + _mv(shift, dv)


def _bare_s(profile: ValidatedProfile, e: np.ndarray):
    """S-matrix with a = 0 and its derivative, shape (n, N, N)."""
    k = wavenumber(e).astype(complex)
    dk = 0.5 / k
    if profile.geometry is Geometry.RADIAL_S_WAVE:
        v, dv = _radial_coefficients(profile, e)
        a, b = v[..., 0], v[..., 1]
        da, db = dv[..., 0], dv[..., 1]
        s = -a / b
        ds = -(da * b - a * db) / (b * b)
        return s[:, None, None], ds[:, None, None]

    m, dm = _transfer(profile, e)
    m11, m12, m21, m22 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    d11, d12, d21, d22 = dm[..., 0, 0], dm[..., 0, 1], dm[..., 1, 0], dm[..., 1, 1]
    det = m11 * m22 - m12 * m21
    ddet = d11 * m22 + m11 * d22 - d12 * m21 - m12 * d21
    length = profile.support_end
    ph = np.exp(1j * k * length)
    dph = 1j * length * dk * ph
    inv = 1.0 / m22
    dinv = -d22 * inv * inv

    s = np.empty(e.shape + (2, 2), dtype=complex)
    ds = np.empty_like(s)
    s[..., 0, 0] = -m21 * inv
    ds[..., 0, 0] = -(d21 * inv + m21 * dinv)
    s[..., 0, 1] = ph * inv
    ds[..., 0, 1] = dph * inv + ph * dinv
    s[..., 1, 0] = det * ph * inv
    ds[..., 1, 0] = ddet * ph * inv + det * dph * inv + det * ph * dinv
    s[..., 1, 1] = m12 * ph * ph * inv
    ds[..., 1, 1] = (d12 * ph * ph * inv + 2 * m12 * ph * dph * inv
                     + m12 * ph * ph * dinv)
    return s, ds


def _reference(s, ds, e, a):
    k = wavenumber(e)
    dk = 0.5 / k
    ph = np.exp(-2j * k * a)[:, None, None]
    dph = (-2j * a * dk)[:, None, None] * ph
    return ph * s, dph * s + ph * ds


def _sample(profile: ValidatedProfile, e: np.ndarray, a: float):
    s, ds = _bare_s(profile, e)
    return _reference(s, ds, e, a)


def _check_reference(profile: ValidatedProfile, a: float):
    if a < profile.support_end:
        raise ReferenceInsideSupport(
            f"reference length a = {a!r} lies inside the support (ends at "
            f"{profile.support_end!r})"
        )


def s_matrix(profile: ValidatedProfile, E, a: float) -> SMatrixSample:
    """S-matrix at energy ``E`` (scalar or array) for reference length ``a``."""
    _check_reference(profile, a)
    e = _check_energies(profile, E)
    s, ds = _sample(profile, e, a)
    if np.ndim(E) == 0:
        return SMatrixSample(float(e[0]), s[0], ds[0], float(a))
    return SMatrixSample(e, s, ds, float(a))


def s_matrix_derivative(profile: ValidatedProfile, E, a: float) -> np.ndarray:
    return s_matrix(profile, E, a).ds_dE


def phase_shift(profile: ValidatedProfile, E) -> np.ndarray | float:
    """Bare single-channel phase shift in (-pi/2, pi/2] (defined modulo pi)."""
    if profile.n_channels != 1:
        raise ValueError("phase_shift is defined for single-channel profiles only")
    e = _check_energies(profile, E)
    s, _ = _bare_s(profile, e)
    delta = np.angle(s[:, 0, 0]) / 2.0
    return float(delta[0]) if np.ndim(E) == 0 else delta


def unwrap_phase(delta):
    """Remove jumps of pi from a phase-shift series defined modulo pi."""
    return np.unwrap(2.0 * np.asarray(delta)) / 2.0


@dataclass(frozen=True)
class BreitWignerScatterer:
    """Synthetic single-channel S = exp(2i delta) from isolated resonances.

    ``delta(E) = background + sum_i atan2(Gamma_i/2, E0_i - E)``, which rises
    by pi through each resonance. Used as an analytic fixture.
    """

    e0: tuple[float, ...]
    gamma: tuple[float, ...]
    background: float = 0.0
    support_end: float = 0.0
    n_channels: int = 1

    @classmethod
    def single(cls, e0, gamma, background=0.0):
        return cls((float(e0),), (float(gamma),), float(background))

    def phase(self, e):
        e = np.asarray(e, dtype=float)
        d = np.full(e.shape, self.background)
        for e0, g in zip(self.e0, self.gamma):
            d = d + np.arctan2(0.5 * g, e0 - e)
        return d

    def phase_derivative(self, e):
        e = np.asarray(e, dtype=float)
        d = np.zeros(e.shape)
        for e0, g in zip(self.e0, self.gamma):
            d = d + 0.5 * g / ((e - e0) ** 2 + 0.25 * g * g)
        return d


def _sample_bw(src: BreitWignerScatterer, e, a):
    delta = src.phase(e)
    s = np.exp(2j * delta)
    ds = 2j * src.phase_derivative(e) * s
    return _reference(s[:, None, None], ds[:, None, None], e, a)


def sample_series(source, energies, a: float = 0.0, threads: int = 1) -> SMatrixSample:
    """S-matrix samples over an energy array for a profile or synthetic source.

    With ``threads > 1`` the grid is split into contiguous chunks evaluated in
    a thread pool; the result is identical to the serial evaluation.
    """
    e = np.asarray(energies, dtype=float)
    if isinstance(source, BreitWignerScatterer):
        if not np.all(e > 0):
            raise NonPositiveEnergy("scattering energies must be > 0")
        work = lambda chunk: _sample_bw(source, chunk, a)
    else:
        _check_reference(source, a)
        e = _check_energies(source, e)
        work = lambda chunk: _sample(source, chunk, a)

    if threads <= 1 or len(e) < 2 * threads:
        s, ds = work(e)
    else:
        chunks = np.array_split(e, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
        s = np.concatenate([p[0] for p in parts])
        ds = np.concatenate([p[1] for p in parts])
    return SMatrixSample(e, s, ds, float(a))


def nudge_off_thresholds(energies, thresholds: Sequence[float], gap=1e-9):
    """Move grid points lying within ``gap`` of a threshold to ``threshold + gap``."""
    e = np.array(energies, dtype=float)
    for v in thresholds:
        close = np.abs(e - v) < gap
        e[close] = v + gap
    return e
