"""Semiclassical pulse reflection off the dispersively coupled TSR cavity.

Works in the rotating frame of the drive at omega_r (detuning
delta_r = omega_r - omega0), in units of the port decay rate kappa.  The
slowly varying field envelopes obey

    d(alpha_+)/dt = [ i (delta_r - chi * sigma_z(t)) - kappa/2 ] alpha_+
                    - sqrt(kappa) alpha_in_u(t)
    d(alpha_-)/dt = [ i delta_r - kappa/2 ] alpha_-
                    - sqrt(kappa) alpha_in_d(t)

with the qubit inversion decoupled, sigma_z(t) = -1 + (sigma_z0 + 1)
exp(-gamma t), and the reflected field alpha_out = sqrt(kappa) alpha +
alpha_in.  Vacuum noise is dropped (classical envelopes only); the full
quantum check lives in the lindblad module.

Note on phase conventions: the closed-form adiabatic reflection
coefficient r(delta) below follows the spectroscopic sign convention, in
which the phase winds opposite to the envelope equations above.  The
integrated output therefore approaches conj(r) * alpha_in pointwise in the
adiabatic limit; on resonance (r = -1) the two conventions coincide.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

#: g/|Delta| above which the dispersive approximation is considered suspect.
DISPERSIVE_VALIDITY_THRESHOLD = 0.3


class IntegrationError(RuntimeError):
    """Adaptive integration failed (step-size underflow, NaN, ...)."""


def chi_of(g: float, delta: float) -> float:
    """Dispersive shift chi = g^2 / Delta (signed).

    Raises for Delta = 0 and warns when g/|Delta| exceeds the validity
    threshold of the dispersive approximation.
    """
    if delta == 0:
        raise ValueError("dispersive shift undefined for zero detuning")
    ratio = abs(g / delta)
    if ratio >= DISPERSIVE_VALIDITY_THRESHOLD:
        warnings.warn(
            f"g/|Delta| = {ratio:.3g} is outside the dispersive regime "
            f"(threshold {DISPERSIVE_VALIDITY_THRESHOLD})", stacklevel=2)
    return g * g / delta


@dataclass(frozen=True)
class SystemParams:
    """Rates and detunings of the dispersive model, in units of kappa.

    chi is the qubit-state-dependent cavity pull; delta_r the drive
    detuning from the bare cavity (defaults to the operating point
    delta_r = -chi).  The raw coupling (g, delta) may be supplied instead
    of chi, in which case chi = g^2/delta exactly.  qubit_energy and
    omega0 are bookkeeping only; no observable depends on them.
    """

    chi: float = None
    kappa: float = 1.0
    gamma: float = 0.0
    gamma_phi: float = 0.0
    delta_r: float = None
    g: float = None
    delta: float = None
    qubit_energy: float = None
    omega0: float = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.gamma < 0 or self.gamma_phi < 0:
            raise ValueError("decay rates must be nonnegative")
        if self.g is not None and self.delta is not None:
            derived = self.g ** 2 / self.delta
            if self.chi is None:
                object.__setattr__(self, "chi", derived)
            elif self.chi != derived:
                raise ValueError(
                    f"chi={self.chi} inconsistent with g^2/delta={derived}")
        if self.chi is None:
            raise ValueError("either chi or both (g, delta) must be given")
        if self.delta_r is None:
            object.__setattr__(self, "delta_r", -self.chi)

    @property
    def dispersive_ratio(self):
        """g/|Delta| when the raw coupling is known, else None."""
        if self.g is None or self.delta is None:
            return None
        return abs(self.g / self.delta)

    @classmethod
    def from_coupling(cls, g: float, delta: float, **kwargs) -> "SystemParams":
        return cls(chi=chi_of(g, delta), g=g, delta=delta, **kwargs)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian drive envelope alpha(t) = s exp(-(t-T/2)^2/(2 sigma^2)) / sqrt(2 pi sigma^2).

    The pulse is centered at T/2 inside the nominal window [0, T]; pad
    extends the simulated interval to [-pad, T+pad] so the Gaussian tails
    are not clipped (pad defaults to 4 sigma).
    """

    sigma: float
    window: float
    scale: float = 1.0
    pad: float = None

    def __post_init__(self):
        if self.sigma <= 0 or self.window <= 0:
            raise ValueError("sigma and window must be positive")
        if self.pad is None:
            object.__setattr__(self, "pad", 4.0 * self.sigma)
        if self.pad < 0:
            raise ValueError("pad must be nonnegative")

    def amplitude(self, t):
        t = np.asarray(t, dtype=float)
        norm = self.scale / math.sqrt(2.0 * math.pi * self.sigma ** 2)
        return norm * np.exp(-(t - self.window / 2.0) ** 2 / (2.0 * self.sigma ** 2))

    @property
    def norm_squared(self) -> float:
        """Closed-form integral of |alpha|^2 over the whole real line."""
        return self.scale ** 2 / (2.0 * math.sqrt(math.pi) * self.sigma)

    def span(self, paper_window: bool = False):
        if paper_window:
            return 0.0, self.window
        return -self.pad, self.window + self.pad


def gaussian_pulse(sigma: float, window: float, pad: float = None,
                   scale: float = 1.0) -> PulseSpec:
    """Convenience constructor for the Gaussian drive envelope."""
    return PulseSpec(sigma=sigma, window=window, scale=scale, pad=pad)


def sigma_z_closed_form(sigma_z0: float, gamma: float, t):
    """Qubit inversion under pure relaxation: -1 + (sigma_z0 + 1) e^{-gamma t}."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed form defined for t >= 0")
    return -1.0 + (sigma_z0 + 1.0) * np.exp(-gamma * t)


def sigma_plus_decay_envelope(gamma: float, gamma_phi: float, t):
    """|sigma_+(t)| / |sigma_+(0)| = exp(-(gamma_phi + gamma/2) t).

    The raising-operator equation decouples from every reported observable;
    this envelope is kept as an internal consistency check only.
    """
    return np.exp(-(gamma_phi + gamma / 2.0) * np.asarray(t, dtype=float))


def adiabatic_reflection(params: SystemParams, sigma_z: float) -> complex:
    """Closed-form reflection coefficient of a slowly varying pulse.

    r = (i (delta_r - chi sigma_z) - kappa/2) / (i (delta_r - chi sigma_z) + kappa/2),
    unimodular in exact arithmetic.  At the operating point delta_r = -chi
    the ground-state qubit (sigma_z = -1) gives r = -1 exactly.
    """
    d = params.delta_r - params.chi * sigma_z
    return (1j * d - params.kappa / 2.0) / (1j * d + params.kappa / 2.0)


@dataclass
class TimeSeries:
    """Sampled field trajectories of one scattering run (uniform grid)."""

    times: np.ndarray
    alpha_in: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    alpha_out_u: np.ndarray
    alpha_out_d: np.ndarray
    sigma_z: np.ndarray
    channel: str = "u"
    qubit_init: float = -1.0
    params: SystemParams = None
    pulse: PulseSpec = None

    @property
    def dt(self) -> float:
        return self.times[1] - self.times[0]

    def validate(self):
        n = len(self.times)
        for name in ("alpha_in", "alpha_plus", "alpha_minus",
                     "alpha_out_u", "alpha_out_d", "sigma_z"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch")
        steps = np.diff(self.times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
            raise ValueError("time grid must be uniform and increasing")
        if np.any(self.sigma_z < -1 - 1e-12) or np.any(self.sigma_z > 1 + 1e-12):
            raise ValueError("sigma_z out of [-1, 1]")

    def output(self, channel: str = None) -> np.ndarray:
        ch = channel or ("u" if self.channel in ("u", "both") else "d")
        return self.alpha_out_u if ch == "u" else self.alpha_out_d


def integrate_semiclassical(params: SystemParams, pulse: PulseSpec,
                            qubit_init: float = -1.0, channel: str = "u",
                            dt: float = 0.01, rtol: float = 1e-9,
                            paper_window: bool = False) -> TimeSeries:
    """Integrate the driven envelope equations and apply input-output.

    The qubit inversion follows its closed form with the decay clock
    starting at t = 0 (the nominal window start); for t < 0 inside the
    padded window the qubit is held at its prepared value.  The two field
    equations are integrated adaptively (DOP853, relative tolerance rtol)
    and resampled onto a uniform grid of step dt.
    """
    if channel not in ("u", "d", "both"):
        raise ValueError(f"channel must be 'u', 'd' or 'both', got {channel!r}")
    if not -1.0 <= qubit_init <= 1.0:
        raise ValueError(f"qubit_init must lie in [-1, 1], got {qubit_init}")
    t0, t1 = pulse.span(paper_window)
    n_steps = int(round((t1 - t0) / dt))
    times = t0 + dt * np.arange(n_steps + 1)

    chi, kappa, gamma, dr = params.chi, params.kappa, params.gamma, params.delta_r
    sqk = math.sqrt(kappa)
    drive_u = channel in ("u", "both")
    drive_d = channel in ("d", "both")

    def sz_of(t):
        return -1.0 + (qubit_init + 1.0) * np.exp(-gamma * np.maximum(t, 0.0))

    def rhs(t, y):
        amp = pulse.amplitude(t)
        return (
            (1j * (dr - chi * sz_of(t)) - kappa / 2.0) * y[0]
            - (sqk * amp if drive_u else 0.0),
            (1j * dr - kappa / 2.0) * y[1]
            - (sqk * amp if drive_d else 0.0),
        )

    sol = solve_ivp(rhs, (t0, t1), [0j, 0j], method="DOP853", rtol=rtol,
                    atol=1e-13, dense_output=True)
    if sol.status != 0:
        raise IntegrationError(
            f"integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
    y = sol.sol(times)
    if not np.all(np.isfinite(y)):
        bad = times[~np.all(np.isfinite(y), axis=0)]
        raise IntegrationError(
            f"non-finite field values, first at t={bad[0]:.6g} "
            f"(chi={chi}, gamma={gamma}, qubit_init={qubit_init})")
    alpha_plus, alpha_minus = y[0], y[1]
    amp = pulse.amplitude(times)
    alpha_in_u = amp if drive_u else np.zeros_like(amp)
    alpha_in_d = amp if drive_d else np.zeros_like(amp)
    series = TimeSeries(
        times=times,
        alpha_in=amp,
        alpha_plus=alpha_plus,
        alpha_minus=alpha_minus,
        alpha_out_u=sqk * alpha_plus + alpha_in_u,
        alpha_out_d=sqk * alpha_minus + alpha_in_d,
        sigma_z=sz_of(times),
        channel=channel,
        qubit_init=qubit_init,
        params=params,
        pulse=pulse,
    )
    return series


@dataclass
class OverlapResult:
    tau_d: float
    fidelity: float
    amplitude: complex


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - gr * (b - a), a + gr * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
    return 0.5 * (a + b)


def overlap_metrics(series: TimeSeries, reference: PulseSpec, sign: int = 1,
                    channel: str = None,
                    tau_range: tuple = (-2.0, 8.0)) -> OverlapResult:
    """Optimal delay and mode-match fidelity of an output pulse.

    Computes c(tau) = <sign * alpha_ref(t - tau), alpha_out(t)> normalized
    by both pulse norms, locates tau_d = argmax |c| with a coarse scan at
    the grid step followed by golden-section refinement to 1e-4, and
    reports F = |c(tau_d)|^2.
    """
    if len(series.times) == 0:
        raise ValueError("empty time series")
    if reference.scale == 0:
        raise ValueError("reference pulse has zero norm")
    out = series.output(channel)
    times = series.times
    norm_out = math.sqrt(np.trapezoid(np.abs(out) ** 2, times))
    if norm_out == 0:
        raise ValueError("output trajectory has zero norm")

    def amplitude_at(tau):
        ref = sign * reference.amplitude(times - tau)
        norm_ref = math.sqrt(np.trapezoid(ref ** 2, times))
        return np.trapezoid(ref * out, times) / (norm_ref * norm_out)

    taus = np.arange(tau_range[0], tau_range[1] + series.dt / 2, series.dt)
    coarse = np.array([abs(amplitude_at(tau)) for tau in taus])
    i = int(np.argmax(coarse))
    lo = taus[max(i - 1, 0)]
    hi = taus[min(i + 1, len(taus) - 1)]
    tau_d = _golden_max(lambda tau: abs(amplitude_at(tau)), lo, hi, 1e-4)
    c = amplitude_at(tau_d)
    return OverlapResult(tau_d=tau_d, fidelity=abs(c) ** 2, amplitude=c)
