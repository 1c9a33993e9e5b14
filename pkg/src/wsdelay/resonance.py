"""Breit-Wigner resonances, their classical twin and width/friction maps.

Near an isolated resonance the phase shift obeys ``tan(delta) = (Gamma/2) /
(E0 - E)`` and the delay is the Lorentzian ``hbar Gamma / ((E - E0)^2 +
Gamma^2/4)``. A damped driven oscillator has the same structure with
``Gamma/2 -> hbar gamma_fr``, i.e. ``Gamma = 2 hbar gamma_fr``.

The phase branch is continuous and rises by pi through ``E0``. Passing
``paper_sign=True`` uses ``(E - E0)`` in the denominator instead, giving a
falling sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, NegativeTime, NonPositiveWidth
from .units import HBAR


@dataclass(frozen=True)
class BWParams:
    E0: float
    gamma: float
    background_delta: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise NonPositiveWidth(f"resonance width {self.gamma!r} must be > 0")
        if not -np.pi < self.background_delta <= np.pi:
            raise ValueError("background_delta must lie in (-pi, pi]")


@dataclass(frozen=True)
class FitResult:
    params: BWParams
    covariance: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    background_tau: float = 0.0
    peaks: tuple[BWParams, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))


def bw_phase(E, p: BWParams, paper_sign: bool = False):
    e = np.asarray(E, dtype=float)
    denom = (e - p.E0) if paper_sign else (p.E0 - e)
    return np.arctan2(0.5 * p.gamma, denom) + p.background_delta


def bw_delay(E, p: BWParams):
    e = np.asarray(E, dtype=float)
    return HBAR * p.gamma / ((e - p.E0) ** 2 + 0.25 * p.gamma ** 2)


def classical_phase(omega, omega0, gamma_fr, paper_sign: bool = False):
    """Phase of a damped driven oscillator near resonance, same branch as bw_phase."""
    if not np.all(np.asarray(gamma_fr) > 0):
        raise NonPositiveWidth("friction coefficient must be > 0")
    w = np.asarray(omega, dtype=float)
    denom = (w - omega0) if paper_sign else (omega0 - w)
    return np.arctan2(gamma_fr, denom)


def width_to_friction(gamma):
    if not np.all(np.asarray(gamma) > 0):
        raise NonPositiveWidth(f"width {gamma!r} must be > 0")
    return gamma / (2.0 * HBAR)


def friction_to_width(gamma_fr):
    if not np.all(np.asarray(gamma_fr) > 0):
        raise NonPositiveWidth(f"friction {gamma_fr!r} must be > 0")
    return 2.0 * HBAR * gamma_fr


def wavepacket_survival(gamma, t):
    """Survival probability exp(-Gamma t / hbar) of a decaying resonance.

    The amplitude decays at ``Gamma/(2 hbar)``; this is its modulus squared.
    """
    if not gamma > 0:
        raise NonPositiveWidth(f"width {gamma!r} must be > 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("time must be >= 0")
    return np.exp(-gamma * t / HBAR)


def damped_energy_decay(gamma_fr, t):
    """Energy of a free damped oscillator relative to its start, exp(-2 gamma_fr t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise NegativeTime("time must be >= 0")
    return np.exp(-2.0 * gamma_fr * t)


# -- least squares ------------------------------------------------------------

def _lorentz_model(e, theta):
    """Sum of Lorentzians plus constant; theta = [E0_1, G_1, ..., c]."""
    npk = (len(theta) - 1) // 2
    y = np.full(e.shape, theta[-1])
    jac = np.empty((len(e), len(theta)))
    for i in range(npk):
        e0, g = theta[2 * i], theta[2 * i + 1]
        x = e - e0
        d = x * x + 0.25 * g * g
        y += HBAR * g / d
        jac[:, 2 * i] = HBAR * 2.0 * g * x / (d * d)
        jac[:, 2 * i + 1] = HBAR * (d - 0.5 * g * g) / (d * d)
    jac[:, -1] = 1.0
    return y, jac


def levenberg_marquardt(model, x, y, theta0, max_iter=200, lam0=1e-3, gtol=1e-10,
                        cond_limit=1e12, valid=None):
    """Damped Gauss-Newton least squares with Levenberg-Marquardt damping.

    ``model(x, theta)`` returns ``(prediction, jacobian)``. The damping is
    multiplied by 10 after a rejected step and divided by 10 after an
    accepted one. Returns ``(theta, info)``; ``info['converged']`` is set only
    when the gradient norm fell below ``gtol`` times its initial value.
    """
    theta = np.array(theta0, dtype=float)
    pred, jac = model(x, theta)
    r = pred - y
    cost = r @ r
    g = jac.T @ r
    g0 = np.linalg.norm(g)
    lam = lam0
    info = {"converged": False, "reason": "max_iter", "g0": g0}
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = np.linalg.norm(g)
        if gnorm <= gtol * g0 or gnorm == 0.0:
            info.update(converged=True, reason="gradient")
            it -= 1
            break
        a = jac.T @ jac
        cond = np.linalg.cond(a)
        if not np.isfinite(cond) or cond > cond_limit:
            info.update(reason="degenerate_curvature", condition=cond)
            break
        accepted = False
        while lam < 1e16:
            damped = a + lam * np.diag(np.diag(a))
            step = np.linalg.solve(damped, -g)
            trial = theta + step
            if valid is None or valid(trial):
                tpred, tjac = model(x, trial)
                tr = tpred - y
                tcost = tr @ tr
                if tcost < cost:
                    theta, pred, jac, r, cost = trial, tpred, tjac, tr, tcost
                    g = jac.T @ r
                    lam = max(lam / 10.0, 1e-12)
                    accepted = True
                    break
            lam *= 10.0
        if not accepted:
            # no descent left at working precision
            gnorm = np.linalg.norm(g)
            info.update(converged=bool(gnorm <= gtol * g0), reason="stalled")
            break
    info.update(iterations=it, cost=cost, gradient=np.linalg.norm(g),
                condition=np.linalg.cond(jac.T @ jac), jacobian=jac, residual=r)
    return theta, info


def _as_xy(samples):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0], arr[:, 1]
    raise ValueError("samples must be a sequence of (energy, value) pairs")


def _fwhm_guess(e, tau):
    i = int(np.argmax(tau))
    base = float(np.min(tau))
    half = base + 0.5 * (tau[i] - base)
    above = np.flatnonzero(tau >= half)
    width = e[above[-1]] - e[above[0]]
    if width <= 0:
        width = 2.0 * np.min(np.diff(e))
    return float(e[i]), float(width), base


def _covariance(info, n, p):
    jac = info["jacobian"]
    dof = max(n - p, 1)
    s2 = info["cost"] / dof
    try:
        return s2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return np.full((p, p), np.nan)


def fit_bw(samples, init: BWParams | None = None, background: float | None = None,
           max_iter: int = 200) -> FitResult:
    """Fit tau(E) = hbar Gamma/((E - E0)^2 + Gamma^2/4) + c to (E, tau) samples."""
    e, tau = _as_xy(samples)
    if len(e) < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {len(e)}")
    e0, g0, c0 = _fwhm_guess(e, tau)
    if init is not None:
        e0, g0 = init.E0, init.gamma
    if background is not None:
        c0 = background
    if e[-1] - e[0] < g0:
        raise InsufficientSamples("samples do not span one FWHM")
    return _fit_lorentzians(e, tau, [(e0, g0)], c0, max_iter)


def _fit_lorentzians(e, tau, guesses, c0, max_iter):
    # Work in units of the guessed width for E0 and Gamma and of the peak
    # height for the constant, so that sharp peaks at large E0 do not make
    # the curvature matrix look singular.
    theta0 = np.array([v for pair in guesses for v in pair] + [c0], dtype=float)
    width = min(g for _, g in guesses)
    height = float(np.max(np.abs(tau))) or 1.0
    scale = np.full(len(theta0), width)
    scale[-1] = height

    def scaled(x, u):
        y, jac = _lorentz_model(x, theta0 + scale * u)
        return y / height, jac * (scale / height)

    valid = lambda u: bool(np.all((theta0 + scale * u)[1:-1:2] > 0))
    u, info = levenberg_marquardt(scaled, e, tau / height, np.zeros(len(theta0)),
                                  max_iter=max_iter, valid=valid)
    theta = theta0 + scale * u
    info["cost"] *= height * height
    info["jacobian"] = info["jacobian"] * (height / scale)
    peaks = tuple(BWParams(float(theta[2 * i]), float(theta[2 * i + 1]))
                  for i in range(len(guesses)))
    scale = np.linalg.norm(tau) or 1.0
    diag = {k: info[k] for k in ("reason", "gradient", "g0", "condition")}
    return FitResult(
        params=peaks[0],
        covariance=_covariance(info, len(e), len(theta)),
        residual_norm=float(np.sqrt(info["cost"]) / scale),
        iterations=int(info["iterations"]),
        converged=bool(info["converged"]),
        background_tau=float(theta[-1]),
        peaks=peaks,
        diagnostics=diag,
    )


def _phase_model(e, theta):
    e0, g, bg = theta
    x = e0 - e
    d = x * x + 0.25 * g * g
    y = np.arctan2(0.5 * g, x) + bg
    jac = np.empty((len(e), 3))
    jac[:, 0] = -0.5 * g / d
    jac[:, 1] = 0.5 * x / d
    jac[:, 2] = 1.0
    return y, jac


def fit_bw_phase(samples, init: BWParams | None = None, max_iter: int = 200) -> FitResult:
    """Cross-check fit in phase space: delta(E) = atan2(Gamma/2, E0 - E) + background."""
    e, delta = _as_xy(samples)
    if len(e) < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {len(e)}")
    delta = np.unwrap(2 * delta) / 2
    if init is None:
        slope = np.gradient(delta, e)
        i = int(np.argmax(slope))
        init = BWParams(float(e[i]), float(2.0 / slope[i]))
    bg0 = float(delta[np.argmax(np.gradient(delta, e))] - np.pi / 2)
    valid = lambda th: th[1] > 0
    theta, info = levenberg_marquardt(_phase_model, e, delta,
                                      [init.E0, init.gamma, bg0],
                                      max_iter=max_iter, valid=valid)
    bg = float(np.angle(np.exp(1j * theta[2])))
    params = BWParams(float(theta[0]), float(theta[1]), bg if bg > -np.pi else np.pi)
    return FitResult(
        params=params,
        covariance=_covariance(info, len(e), 3),
        residual_norm=float(np.sqrt(info["cost"]) / (np.linalg.norm(delta) or 1.0)),
        iterations=int(info["iterations"]),
        converged=bool(info["converged"]),
        peaks=(params,),
        diagnostics={k: info[k] for k in ("reason", "gradient", "g0", "condition")},
    )


def group_candidates(candidates, overlap=3.0):
    """Group resonances whose centres are closer than ``overlap * max(Gamma)``."""
    ordered = sorted(candidates, key=lambda c: c.E0)
    groups = []
    for c in ordered:
        if groups:
            last = groups[-1][-1]
            if abs(c.E0 - last.E0) < overlap * max(c.gamma, last.gamma):
                groups[-1].append(c)
                continue
        groups.append([c])
    return groups


def fit_candidates(dp, candidates, max_iter: int = 200) -> list[FitResult]:
    """Fit every detected resonance; overlapping ones share a joint fit."""
    results = []
    e, tau = dp.energy, dp.tau
    for group in group_candidates(candidates):
        lo = min(c.E0 - 5 * c.gamma for c in group)
        hi = max(c.E0 + 5 * c.gamma for c in group)
        mask = (e >= lo) & (e <= hi)
        if mask.sum() < 8:
            continue
        guesses = [(c.E0, c.gamma) for c in group]
        base = float(np.min(tau[mask]))
        results.append(_fit_lorentzians(e[mask], tau[mask], guesses, base, max_iter))
    return results
