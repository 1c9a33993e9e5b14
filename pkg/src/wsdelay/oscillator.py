"""Adiabatically ramped harmonic oscillator x'' + omega(t)^2 x = 0.

The frequency ramps linearly, ``omega(t) = omega0 (1 + eps t)``. The
instantaneous energy ``E = (p^2 + omega^2 x^2)/2`` grows, while the action
``J = E/omega`` stays constant to first order in ``eps``. The WKB solution
has envelope ``a(t) = a(0) sqrt(omega0/omega(t))``, so its exponents are
``+-i omega - gamma`` with ``gamma = omega'/(2 omega)``: the phase-space
spiral contracts along ``x`` at rate ``gamma``.

Liouville's theorem still holds for the (x, p) flow; the contraction lives
in the amplitude of ``x``, and in the rescaled frame ``(x sqrt(omega),
p/sqrt(omega))`` the orbit is a circle of constant radius ``sqrt(2J)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, StepTooLarge, TooFewPeriods
from .resonance import friction_to_width


@dataclass(frozen=True)
class OscillatorConfig:
    omega0: float = 1.0
    ramp_rate_eps: float = 0.0
    x0: float = 1.0
    p0: float = 0.0
    t_end: float = 2 * math.pi
    dt: float = 2 * math.pi / 1000

    def omega(self, t):
        return self.omega0 * (1.0 + self.ramp_rate_eps * np.asarray(t, dtype=float))

    def max_dt(self):
        return 2 * math.pi / (200.0 * float(self.omega(self.t_end)))

    def validate(self):
        if not self.omega0 > 0:
            raise ConstraintViolation("omega0 must be > 0")
        if self.ramp_rate_eps < 0:
            raise ConstraintViolation("ramp rate must be >= 0")
        if self.t_end <= 0:
            raise ConstraintViolation("t_end must be > 0")
        if self.ramp_rate_eps * self.t_end > 9.0:
            raise ConstraintViolation("ramp would raise omega more than tenfold")
        if self.dt > self.max_dt() * (1 + 1e-12):
            raise StepTooLarge(
                f"dt = {self.dt!r} exceeds 2 pi/(200 omega(t_end)) = {self.max_dt()!r}"
            )


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    action: np.ndarray
    omega: np.ndarray
    config: OscillatorConfig

    def action_drift(self):
        """max |J(t) - J(0)| / J(0)."""
        return float(np.max(np.abs(self.action - self.action[0])) / self.action[0])

    def adiabatic_frame(self):
        root = np.sqrt(self.omega)
        return self.x * root, self.p / root


def _rk4_propagators(cfg: OscillatorConfig, n: int, h: float):
    """One-step RK4 maps y_{k+1} = P_k y_k for the linear system y' = A(t) y."""
    t = np.arange(n) * h
    w0 = cfg.omega(t) ** 2
    wh = cfg.omega(t + 0.5 * h) ** 2
    w1 = cfg.omega(t + h) ** 2

    def rhs(w, y):
        return np.stack([y[..., 1], -w * y[..., 0]], axis=-1)

    cols = []
    for basis in ((1.0, 0.0), (0.0, 1.0)):
        y = np.broadcast_to(np.array(basis), (n, 2))
        k1 = rhs(w0, y)
        k2 = rhs(wh, y + 0.5 * h * k1)
        k3 = rhs(wh, y + 0.5 * h * k2)
        k4 = rhs(w1, y + h * k3)
        cols.append(y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    return np.stack(cols, axis=-1)


def _mm(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0, 0] = a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0]
    out[..., 0, 1] = a[..., 0, 0] * b[..., 0, 1] + a[..., 0, 1] * b[..., 1, 1]
    out[..., 1, 0] = a[..., 1, 0] * b[..., 0, 0] + a[..., 1, 1] * b[..., 1, 0]
    out[..., 1, 1] = a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1]
    return out


def _chain(props, y0):
    """States after each step, using a blocked prefix product of the step maps."""
    n = len(props)
    block = max(1, int(math.ceil(math.sqrt(n))))
    nb = int(math.ceil(n / block))
    padded = np.zeros((nb * block, 2, 2))
    padded[:, 0, 0] = padded[:, 1, 1] = 1.0
    padded[:n] = props
    pb = padded.reshape(nb, block, 2, 2)
    acc = np.empty_like(pb)
    acc[:, 0] = pb[:, 0]
    for j in range(1, block):
        acc[:, j] = _mm(pb[:, j], acc[:, j - 1])
    starts = np.empty((nb, 2))
    s = np.asarray(y0, dtype=float)
    for b in range(nb):
        starts[b] = s
        s = acc[b, -1] @ s
    states = np.einsum("bjik,bk->bji", acc, starts).reshape(-1, 2)[:n]
    return np.vstack([np.asarray(y0, dtype=float)[None, :], states])


def integrate_oscillator(cfg: OscillatorConfig) -> Trajectory:
    """Fixed-step classical RK4 trajectory with energy and action attached."""
    cfg.validate()
    n = int(math.ceil(cfg.t_end / cfg.dt - 1e-9))
    h = cfg.t_end / n
    y = _chain(_rk4_propagators(cfg, n, h), (cfg.x0, cfg.p0))
    times = np.arange(n + 1) * h
    omega = cfg.omega(times)
    x, p = y[:, 0], y[:, 1]
    energy = 0.5 * (p * p + omega * omega * x * x)
    return Trajectory(times, x, p, energy, energy / omega, omega, cfg)


def wkb_envelope(cfg: OscillatorConfig, t):
    a0 = math.sqrt(cfg.x0 ** 2 + (cfg.p0 / cfg.omega0) ** 2)
    return a0 * np.sqrt(cfg.omega0 / cfg.omega(t))


def turning_points(traj: Trajectory):
    """Times and |x| at the extrema of x (p = 0), by parabolic interpolation."""
    p, x, t = traj.p, traj.x, traj.times
    h = t[1] - t[0]
    flips = np.flatnonzero(np.sign(p[:-1]) * np.sign(p[1:]) < 0)
    times, amps = [], []
    for i in flips:
        c = i if abs(p[i]) < abs(p[i + 1]) else i + 1
        if c == 0 or c == len(x) - 1:
            continue
        xm, x0, xp = x[c - 1], x[c], x[c + 1]
        curv = 0.5 * (xp - 2 * x0 + xm)
        slope = 0.5 * (xp - xm)
        if curv == 0:
            continue
        s = -slope / (2 * curv)
        times.append(t[c] + s * h)
        amps.append(abs(x0 - slope * slope / (4 * curv)))
    return np.array(times), np.array(amps)


def per_period_amplitude(traj: Trajectory):
    """max |x| over each full period of the instantaneous frequency."""
    tt, aa = turning_points(traj)
    pairs = len(aa) // 2
    return tt[1:2 * pairs:2], np.maximum(aa[0:2 * pairs:2], aa[1:2 * pairs:2])


@dataclass(frozen=True)
class ContractionSeries:
    """Envelope contraction rate gamma(t) = -d ln a/dt from turning points."""

    times: np.ndarray
    gamma: np.ndarray
    analytic: np.ndarray
    gamma_initial: float
    analytic_initial: float

    @property
    def equivalent_width(self):
        """Gamma_eq = 2 hbar gamma, the quantum width with the same decay rate."""
        return friction_to_width(self.gamma_initial) if self.gamma_initial > 0 else 0.0

    def mean_gamma(self):
        return float(np.mean(self.gamma))

    def mean_analytic(self):
        return float(np.mean(self.analytic))


def contraction_exponent(traj: Trajectory, periods_per_fit: int = 2,
                         initial_periods: int = 10) -> ContractionSeries:
    """Contraction exponent of the x-envelope.

    Each estimate is the negative slope of a straight-line fit of ln|x| at
    turning points spanning ``periods_per_fit`` periods. ``gamma_initial`` is
    the linear coefficient of a quadratic fit of ln|x| over the first
    ``initial_periods`` periods, i.e. the rate extrapolated to t = 0.
    """
    tt, aa = turning_points(traj)
    if len(tt) < 20:
        raise TooFewPeriods(f"trajectory spans {len(tt) / 2:.1f} periods, need >= 10")
    cfg = traj.config
    la = np.log(aa)
    half = periods_per_fit
    centres, rates = [], []
    for k in range(half, len(tt) - half):
        sl = slice(k - half, k + half + 1)
        slope = np.polyfit(tt[sl] - tt[k], la[sl], 1)[0]
        centres.append(tt[k])
        rates.append(-slope)
    centres = np.array(centres)
    analytic = 0.5 * cfg.omega0 * cfg.ramp_rate_eps / cfg.omega(centres)

    first = tt <= tt[0] + initial_periods * 2 * math.pi / cfg.omega0
    g0 = -float(np.polyfit(tt[first], la[first], 2)[1])
    return ContractionSeries(
        times=centres,
        gamma=np.array(rates),
        analytic=analytic,
        gamma_initial=g0,
        analytic_initial=0.5 * cfg.omega0 * cfg.ramp_rate_eps / cfg.omega0,
    )


def damped_response(omega, omega0, gamma_fr, force_amp=1.0):
    """Steady-state amplitude and phase lag of x'' + 2 g x' + omega0^2 x = f cos(omega t)."""
    w = np.asarray(omega, dtype=float)
    re = omega0 ** 2 - w ** 2
    im = 2.0 * gamma_fr * w
    return force_amp / np.hypot(re, im), np.arctan2(im, re)
