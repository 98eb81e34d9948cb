"""Monte Carlo atom transits and the real-time detection protocol.

An atom crossing the evanescent field is modeled as a Gaussian coupling
pulse g(t).  Transmission follows the coupling quasi-statically (transit
times of microseconds versus a ~16 ns resonator relaxation time), photon
detections form an inhomogeneous Poisson process, and a sliding-window
count implements the trigger and survival checks.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .errors import DomainError


@dataclass(frozen=True)
class TransitTrajectory:
    """Coupling rate versus time on a uniform grid."""

    times: np.ndarray  # s
    g_of_t: np.ndarray  # rad/s

    @property
    def duration(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class TriggerConfig:
    """Thresholded real-time detection settings."""

    dt1: float = 1.2e-6
    eta1: int = 6
    dt2: float = 1.0e-6
    eta2: int = 2
    detector_efficiency: float = 0.5
    probe_flux: float = spectra.DEFAULT_FLUX  # photons/s
    spectroscopy_gap: float = 1.0e-6  # trigger to survival-check delay

    def __post_init__(self):
        if self.dt1 <= 0 or self.dt2 <= 0:
            raise DomainError("detection windows must be positive")
        if self.eta1 < 1 or self.eta2 < 1:
            raise DomainError("count thresholds must be >= 1")
        if not 0 < self.detector_efficiency <= 1:
            raise DomainError("detector efficiency must be in (0, 1]")


@dataclass(frozen=True)
class ProtocolOutcome:
    triggered: bool
    trigger_time: float
    survived: bool
    photon_record: tuple[float, ...] = field(default=())


def sample_trajectory(
    g_peak: float,
    sigma_t: float = 2e-6,
    duration: float = 10e-6,
    dt: float = 10e-9,
    rng_seed: int | None = None,
) -> TransitTrajectory:
    """Gaussian transit g(t) = g_peak exp(-(t - duration/2)^2 / 2 sigma_t^2).

    The seed is reserved for optional peak jitter and currently unused;
    the trajectory is deterministic.
    """
    if min(sigma_t, duration, dt) <= 0 or g_peak < 0:
        raise DomainError("trajectory parameters must be positive")
    if dt > sigma_t / 4:
        raise DomainError(f"time step {dt:g} s too coarse for sigma_t = {sigma_t:g} s")
    del rng_seed
    times = np.arange(0.0, duration + 0.5 * dt, dt)
    g = g_peak * np.exp(-((times - duration / 2) ** 2) / (2 * sigma_t**2))
    return TransitTrajectory(times=times, g_of_t=g)


def transmission_interpolator(
    g_max: float, n_grid: int = 25, **model_kwargs
):
    """Quasi-static T(g) lookup from the cw co-propagating solver."""
    g_grid = np.linspace(0.0, max(g_max, 1.0), n_grid)
    t_grid = spectra.transmission_vs_coupling(g_grid, **model_kwargs)
    return lambda g: np.interp(g, g_grid, t_grid)


def photon_count_stream(
    traj: TransitTrajectory,
    cfg: TriggerConfig,
    rng_seed: int,
    t_of_g=None,
    residual_transmission: float = 0.0,
) -> np.ndarray:
    """Detection timestamps from an inhomogeneous Poisson process.

    Count rate r(t) = probe_flux * T(g(t)) * detector_efficiency, sampled
    by thinning.  residual_transmission adds a floor to T to model the
    imperfect extinction of the real resonator.
    """
    if t_of_g is None:
        t_of_g = transmission_interpolator(float(traj.g_of_t.max()))
    trans = np.clip(np.asarray(t_of_g(traj.g_of_t)) + residual_transmission, 0.0, 1.0)
    rate = cfg.probe_flux * cfg.detector_efficiency * trans
    rate_max = float(rate.max())
    rng = np.random.default_rng(rng_seed)
    if rate_max <= 0:
        return np.array([])
    times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rate_max)
        if t > traj.duration:
            break
        if rng.uniform() * rate_max <= np.interp(t, traj.times, rate):
            times.append(t)
    return np.array(times)


def run_trigger_protocol(timestamps, cfg: TriggerConfig) -> ProtocolOutcome:
    """Sliding-window trigger and delayed survival check.

    The trigger fires at the first photon completing eta1 detections
    within the preceding dt1; the atom counts as surviving when at least
    eta2 photons fall into the dt2 window after the spectroscopy gap.
    """
    ts = sorted(float(t) for t in timestamps)
    triggered = False
    trigger_time = math.nan
    for k in range(cfg.eta1 - 1, len(ts)):
        if ts[k] - ts[k - cfg.eta1 + 1] <= cfg.dt1:
            triggered = True
            trigger_time = ts[k]
            break
    survived = False
    if triggered:
        w0 = trigger_time + cfg.spectroscopy_gap
        lo = bisect.bisect_left(ts, w0)
        hi = bisect.bisect_right(ts, w0 + cfg.dt2)
        survived = (hi - lo) >= cfg.eta2
    return ProtocolOutcome(
        triggered=triggered,
        trigger_time=trigger_time,
        survived=survived,
        photon_record=tuple(ts),
    )


def simulate_transit(
    g_peak: float,
    cfg: TriggerConfig,
    rng_seed: int,
    sigma_t: float = 2e-6,
    duration: float = 10e-6,
    dt: float = 10e-9,
    t_of_g=None,
    residual_transmission: float = 0.0,
) -> ProtocolOutcome:
    traj = sample_trajectory(g_peak, sigma_t=sigma_t, duration=duration, dt=dt)
    stream = photon_count_stream(
        traj, cfg, rng_seed, t_of_g=t_of_g, residual_transmission=residual_transmission
    )
    return run_trigger_protocol(stream, cfg)
