"""Coupling-fibre transmission spectra, averaging and fitting.

Geometries:
  co_TM      probe co-propagating with the detection light, TM polarization
  co_TE      same, TE polarization
  counter_TM probe counter-propagating (pulsed protocol)
  counter_TE same, TE polarization

The transmission observable is T = |alpha_out / alpha_in|^2 with
alpha_out = alpha_in - i sqrt(2 kappa_ext) <d> for the driven mode d.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares

from . import core, fields
from .atom import AtomParams, Sublevel, all_levels, dipole_amplitude, zeeman_shift
from .core import (
    CompositeSpace,
    Operators,
    SystemParams,
    build_hamiltonian,
    build_operators,
    build_space,
    expectation,
)
from .errors import (
    BoundaryWarning,
    DomainError,
    FitError,
    SolverError,
    UndefinedTransmissionError,
)

GEOMETRIES = ("co_TM", "co_TE", "counter_TM", "counter_TE")

#: Probe photon flux used in the experiment-like defaults, photons/s.
DEFAULT_FLUX = 1.2e7
DEFAULT_KAPPA0 = 2 * math.pi * 5e6
DEFAULT_KAPPA_EXT = 2 * math.pi * 5e6


@dataclass(frozen=True)
class SpectrumResult:
    detunings: np.ndarray  # rad/s
    transmission: np.ndarray
    meta: str

    def __post_init__(self):
        if len(self.detunings) != len(self.transmission):
            raise DomainError("detuning and transmission lengths differ")


@dataclass(frozen=True)
class GDistribution:
    """Truncated normal distribution of coupling strengths, rad/s."""

    g_mean: float
    g_sigma: float
    g_min: float = 2 * math.pi * 7.5e6
    g_max: float = 2 * math.pi * 30e6
    n_nodes: int = 17

    def __post_init__(self):
        if self.g_min >= self.g_max:
            raise DomainError("g_min must be below g_max")
        if self.g_sigma < 0:
            raise DomainError("g_sigma must be non-negative")
        if self.n_nodes < 1:
            raise DomainError("need at least one quadrature node")


@dataclass(frozen=True)
class FitResult:
    g_mean_fit: float
    g_sigma_fit: float
    residual_norm: float
    covariance: np.ndarray  # 2x2, (g_mean, g_sigma)


def empty_cavity_transmission(delta, kappa0: float, kappa_ext: float):
    """Closed-form empty-resonator transmission Lorentzian."""
    delta = np.asarray(delta, dtype=float)
    return ((kappa0 - kappa_ext) ** 2 + delta**2) / ((kappa0 + kappa_ext) ** 2 + delta**2)


def two_level_transmission_amplitude(
    delta, g: float, kappa0: float, kappa_ext: float, gamma: float, delta_atom=None
):
    """Weak-drive transmission amplitude of a two-level atom and one mode."""
    delta = np.asarray(delta, dtype=float)
    da = delta if delta_atom is None else np.asarray(delta_atom, dtype=float)
    chi = g * g / (gamma + 1j * da)
    kt = kappa0 + kappa_ext
    return (kappa0 - kappa_ext + 1j * delta + chi) / (kt + 1j * delta + chi)


def tm_on_resonance_transmission(g, kappa0: float, kappa_ext: float, gamma: float):
    """On-resonance transmission of the travelling-wave (non-transversal) model."""
    t = two_level_transmission_amplitude(0.0, np.asarray(g, dtype=float), kappa0, kappa_ext, gamma)
    return np.abs(t) ** 2


def legacy_standing_wave_spectrum(
    detunings,
    g_fixed: float,
    kappa0: float = DEFAULT_KAPPA0,
    kappa_ext: float = DEFAULT_KAPPA_EXT,
    gamma: float | None = None,
) -> SpectrumResult:
    """Transversal ring-resonator benchmark: standing-wave decomposition.

    The atom sits at a node of one standing mode and at an antinode of
    the other (coupling sqrt(2) g); the fibre drives both as equal
    halves, so the transmitted amplitude is the mean of the two channel
    amplitudes.  On resonance this caps the transmission at 25%.
    """
    gamma = AtomParams().gamma if gamma is None else gamma
    detunings = np.asarray(detunings, dtype=float)
    t_coupled = two_level_transmission_amplitude(
        detunings, math.sqrt(2.0) * g_fixed, kappa0, kappa_ext, gamma
    )
    t_uncoupled = two_level_transmission_amplitude(detunings, 0.0, kappa0, kappa_ext, gamma)
    trans = np.abs(0.5 * (t_coupled + t_uncoupled)) ** 2
    return SpectrumResult(detunings=detunings, transmission=trans, meta="legacy")


def transmission_from_state(rho: np.ndarray, params: SystemParams, ops: Operators) -> float:
    """T = |alpha_out/alpha_in|^2 from a steady (or instantaneous) state."""
    if params.alpha_in == 0:
        raise UndefinedTransmissionError("transmission undefined without a drive")
    d = ops.a if params.drive_mode == "a" else ops.b
    amp = output_amplitude(expectation(d, rho), params)
    return abs(amp / params.alpha_in) ** 2


def output_amplitude(mode_amp: complex, params: SystemParams) -> complex:
    return params.alpha_in - 1j * math.sqrt(2 * params.kappa_ext) * mode_amp


def prune_levels(
    levels: list[Sublevel],
    initial: tuple[str, int],
    steps: int,
    u_a: dict[int, complex],
    u_b: dict[int, complex],
    tol: float = 1e-6,
) -> list[Sublevel]:
    """Sublevels reachable within `steps` optical-pumping cycles.

    One cycle excites through every mode polarization component above
    `tol` and then follows all spontaneous-decay channels, so the result
    is always closed under decay.
    """
    by_key = {(lev.manifold, lev.m): lev for lev in levels}
    active_q = [q for q in (-1, 0, 1) if abs(u_a[q]) > tol or abs(u_b[q]) > tol]
    grounds = {initial[1]} if initial[0] == "ground" else set()
    excited: set[int] = {initial[1]} if initial[0] == "excited" else set()
    for _ in range(steps):
        for m_g in list(grounds):
            for q in active_q:
                m_e = m_g + q
                if ("excited", m_e) in by_key:
                    excited.add(m_e)
        for m_e in list(excited):
            for q in (-1, 0, 1):
                if ("ground", m_e - q) in by_key and dipole_amplitude(m_e - q, m_e)[1] > 0:
                    grounds.add(m_e - q)
    keep = [lev for lev in levels if (lev.excited and lev.m in excited) or (not lev.excited and lev.m in grounds)]
    return keep


class TransmissionModel:
    """One probe geometry with its composite space and cached generators."""

    def __init__(
        self,
        geometry: str,
        g0: float,
        kappa0: float = DEFAULT_KAPPA0,
        kappa_ext: float = DEFAULT_KAPPA_EXT,
        atom: AtomParams | None = None,
        alpha_in: float | None = None,
        include_zeeman: bool = True,
        n_index: float = fields.SILICA_INDEX,
        cutoffs: tuple[int, int] = (1, 1),
        prune_steps: int | None = None,
        backscatter: float = 0.0,
        max_dim: int | None = None,
    ):
        if geometry not in GEOMETRIES:
            raise DomainError(f"geometry must be one of {GEOMETRIES}")
        self.geometry = geometry
        self.atom = atom or AtomParams()
        alpha_in = math.sqrt(DEFAULT_FLUX) if alpha_in is None else alpha_in

        if geometry.endswith("TM"):
            ratio = fields.longitudinal_ratio(1.0 / n_index)
            pol_a = fields.tm_mode("+", ratio)
            pol_b = fields.tm_mode("-", ratio)
            self.initial = ("ground", 3)
            self.resonant = (3, 4)  # (m_g, m_e), stretched transition
        else:
            pol_a = fields.te_mode("+")
            pol_b = fields.te_mode("-")
            self.initial = ("ground", 0)
            self.resonant = (0, 0)

        if include_zeeman:
            delta_ca = zeeman_shift(self.resonant[1], self.atom.gF_excited, self.atom.B_z) - zeeman_shift(
                self.resonant[0], self.atom.gF_ground, self.atom.B_z
            )
        else:
            delta_ca = 0.0

        self.params = SystemParams(
            g0=g0,
            kappa0=kappa0,
            kappa_ext=kappa_ext,
            gamma=self.atom.gamma,
            delta_cs=0.0,
            delta_ca=delta_ca,
            drive_mode="b" if geometry.startswith("counter") else "a",
            alpha_in=alpha_in,
            pol_a=pol_a,
            pol_b=pol_b,
            backscatter=backscatter,
        )

        levels = all_levels(self.atom, include_zeeman)
        if g0 == 0.0:
            # decoupled atom: keep only the initial sublevel, otherwise the
            # conserved atomic populations make the steady state non-unique
            levels = [lev for lev in levels if (lev.manifold, lev.m) == self.initial]
        elif prune_steps is not None:
            levels = prune_levels(levels, self.initial, prune_steps, self.params.u_a, self.params.u_b)
        self.space = build_space(levels, cutoffs[0], cutoffs[1], max_dim=max_dim)
        self.ops = build_operators(self.space)

        # L(delta) = L0 + delta * L1 with the detuning generator
        # M = a+a + b+b + sum_e P_e entering only the coherent part.
        h0 = build_hamiltonian(self.space, self.params, self.ops)
        m_op = (self.ops.a.getH() @ self.ops.a + self.ops.b.getH() @ self.ops.b).tolil()
        for lev in self.space.levels:
            if lev.excited:
                m_op = m_op + self.ops.projectors[(lev.manifold, lev.m)]
        m_op = m_op.tocsr()
        ident = sp.identity(self.space.dim, format="csr", dtype=complex)
        self._gen0 = core.build_liouvillian(h0, self.params, self.ops)
        self._gen1 = (-1j * (sp.kron(ident, m_op) - sp.kron(m_op.T, ident))).tocsr()

    def generator(self, delta_cs: float) -> sp.csr_matrix:
        return self._gen0 + delta_cs * self._gen1

    def params_at(self, delta_cs: float) -> SystemParams:
        return self.params.at_detuning(delta_cs)

    def steady_state(self, delta_cs: float) -> np.ndarray:
        try:
            return core.steady_state(self.generator(delta_cs), self.space.dim)
        except SolverError as exc:
            raise type(exc)(f"{exc} (at detuning {delta_cs / (2 * math.pi * 1e6):.3f} MHz)") from exc

    def steady_transmission(self, delta_cs: float) -> float:
        rho = self.steady_state(delta_cs)
        return transmission_from_state(rho, self.params_at(delta_cs), self.ops)

    def spectrum(self, detunings) -> SpectrumResult:
        detunings = np.asarray(detunings, dtype=float)
        trans = np.array([self.steady_transmission(d) for d in detunings])
        return SpectrumResult(detunings=detunings, transmission=trans, meta=self.geometry)

    def detection_pumped_atom(self) -> np.ndarray:
        """Reduced atomic state after resonant co-propagating detection."""
        detect = replace(self.params, drive_mode="a", delta_cs=0.0)
        h = build_hamiltonian(self.space, detect, self.ops)
        gen = core.build_liouvillian(h, detect, self.ops)
        rho = core.steady_state(gen, self.space.dim)
        rho_atom = core.reduced_atom_state(self.space, rho)
        rho_atom = 0.5 * (rho_atom + rho_atom.conj().T)
        return rho_atom / np.trace(rho_atom).real

    def pulsed_transmission(
        self,
        delta_cs: float,
        rho0: np.ndarray,
        t_start: float,
        t_len: float,
        n_samples: int = 40,
    ) -> float:
        """Amplitude-averaged transmission over [t_start, t_start + t_len]."""
        params = self.params_at(delta_cs)
        t_window = np.linspace(t_start, t_start + t_len, n_samples)
        t_grid = np.concatenate(([0.0], t_window)) if t_start > 0 else t_window
        states = core.time_evolve(rho0, self.generator(delta_cs), t_grid, rtol=1e-7, atol=1e-9)
        states = states[-n_samples:]
        d = self.ops.a if params.drive_mode == "a" else self.ops.b
        amps = np.array([output_amplitude(expectation(d, rho), params) for rho in states])
        return abs(np.mean(amps) / params.alpha_in) ** 2

    def pulsed_spectrum(
        self,
        detunings,
        t_len: float = 100e-9,
        t_start: float | None = None,
        n_samples: int = 40,
    ) -> SpectrumResult:
        if t_start is None:
            t_start = 5.0 / self.params.kappa_tot
        elif t_start < 5.0 / self.params.kappa_tot:
            warnings.warn(
                "averaging window opens before the resonator field has relaxed; "
                "transients will contaminate the spectrum",
                stacklevel=2,
            )
        rho0 = core.atom_with_vacuum(self.space, self.detection_pumped_atom())
        detunings = np.asarray(detunings, dtype=float)
        trans = np.array(
            [self.pulsed_transmission(d, rho0, t_start, t_len, n_samples) for d in detunings]
        )
        return SpectrumResult(detunings=detunings, transmission=trans, meta=self.geometry)


def sweep_spectrum(geometry: str, detunings, g_fixed: float, **model_kwargs) -> SpectrumResult:
    """cw steady-state spectrum at a fixed coupling strength."""
    return TransmissionModel(geometry, g_fixed, **model_kwargs).spectrum(detunings)


def pulsed_probe_spectrum(
    geometry: str,
    detunings,
    g_fixed: float,
    t_len: float = 100e-9,
    t_start: float | None = None,
    **model_kwargs,
) -> SpectrumResult:
    """Time-domain spectrum of the pulsed (post-trigger) probe protocol."""
    model = TransmissionModel(geometry, g_fixed, **model_kwargs)
    return model.pulsed_spectrum(detunings, t_len=t_len, t_start=t_start)


def quadrature_nodes(dist: GDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [g_min, g_max] with normal-density weights."""
    if dist.n_nodes == 1:
        return (
            np.array([float(np.clip(dist.g_mean, dist.g_min, dist.g_max))]),
            np.array([1.0]),
        )
    x, v = np.polynomial.legendre.leggauss(dist.n_nodes)
    half = 0.5 * (dist.g_max - dist.g_min)
    nodes = dist.g_min + half * (x + 1.0)
    weights = v * _normal_pdf(nodes, dist.g_mean, dist.g_sigma, dist.g_max - dist.g_min)
    total = weights.sum()
    if not total > 1e-300:
        raise DomainError("distribution mass lies entirely outside the truncation bounds")
    return nodes, weights / total


def _normal_pdf(x, mean, sigma, span):
    sigma = max(sigma, 1e-6 * span)  # keep the delta-distribution limit finite
    z = (x - mean) / sigma
    return np.exp(-0.5 * z * z)


def averaged_spectrum(
    geometry: str, detunings, dist: GDistribution, **model_kwargs
) -> SpectrumResult:
    """Spectrum averaged over the truncated-normal coupling distribution."""
    detunings = np.asarray(detunings, dtype=float)
    if dist.g_sigma == 0.0:
        g = float(np.clip(dist.g_mean, dist.g_min, dist.g_max))
        res = sweep_spectrum(geometry, detunings, g, **model_kwargs)
        return SpectrumResult(detunings=detunings, transmission=res.transmission, meta=geometry)
    nodes, weights = quadrature_nodes(dist)
    trans = np.zeros_like(detunings)
    for g, w in zip(nodes, weights):
        trans += w * sweep_spectrum(geometry, detunings, g, **model_kwargs).transmission
    return SpectrumResult(detunings=detunings, transmission=trans, meta=geometry)


def node_spectra(geometry: str, detunings, dist: GDistribution, **model_kwargs) -> np.ndarray:
    """Fixed-g spectra at all quadrature nodes; rows follow the nodes."""
    nodes, _ = quadrature_nodes(dist)
    return np.array(
        [sweep_spectrum(geometry, detunings, g, **model_kwargs).transmission for g in nodes]
    )


def fit_spectrum(
    data: SpectrumResult,
    geometry: str,
    dist_template: GDistribution,
    **model_kwargs,
) -> FitResult:
    """Least-squares fit of (g_mean, g_sigma) to a measured spectrum.

    The quadrature nodes depend only on the truncation bounds, so the
    per-node model spectra are computed once and every objective
    evaluation reduces to a reweighting.  Three fixed starting points
    spanning the bound interval make the optimization deterministic.
    """
    nodes, _ = quadrature_nodes(dist_template)
    spectra_matrix = node_spectra(geometry, data.detunings, dist_template, **model_kwargs)
    span = dist_template.g_max - dist_template.g_min

    gl_w = np.polynomial.legendre.leggauss(dist_template.n_nodes)[1]

    def model(theta):
        mean, sigma = theta
        w = gl_w * _normal_pdf(nodes, mean, sigma, span)
        w = w / w.sum()
        return w @ spectra_matrix

    def residuals(theta):
        return model(theta) - data.transmission

    lo = np.array([dist_template.g_min, 0.0])
    hi = np.array([dist_template.g_max, span])
    starts = [
        np.array([dist_template.g_min + f * span, 0.25 * span]) for f in (0.25, 0.5, 0.75)
    ]
    best = None
    for x0 in starts:
        sol = least_squares(residuals, x0, bounds=(lo, hi), ftol=1e-8, xtol=1e-12, gtol=1e-12)
        if sol.success and (best is None or sol.cost < best.cost - 1e-15):
            best = sol
    if best is None:
        raise FitError("no starting point converged")

    n_pts = len(data.transmission)
    jtj = best.jac.T @ best.jac
    dof = max(n_pts - 2, 1)
    try:
        cov = np.linalg.inv(jtj) * (2.0 * best.cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.inf)
    g_mean_fit, g_sigma_fit = best.x
    edge = 1e-6 * span
    if (
        g_mean_fit - dist_template.g_min < edge
        or dist_template.g_max - g_mean_fit < edge
        or span - g_sigma_fit < edge
    ):
        warnings.warn("fitted parameter pinned at a truncation bound", BoundaryWarning, stacklevel=2)
    return FitResult(
        g_mean_fit=float(g_mean_fit),
        g_sigma_fit=float(g_sigma_fit),
        residual_norm=float(np.linalg.norm(best.fun)),
        covariance=cov,
    )


def transmission_vs_coupling(
    g_values, geometry: str = "co_TM", prune_steps: int | None = 2, **model_kwargs
) -> np.ndarray:
    """On-resonance cw transmission on a coupling-strength grid.

    Used by the transit simulator to interpolate T(g(t)) in the
    quasi-static approximation.
    """
    kappa0 = model_kwargs.get("kappa0", DEFAULT_KAPPA0)
    kappa_ext = model_kwargs.get("kappa_ext", DEFAULT_KAPPA_EXT)
    out = []
    for g in np.asarray(g_values, dtype=float):
        if g <= 0:
            out.append(float(empty_cavity_transmission(0.0, kappa0, kappa_ext)))
        else:
            out.append(
                TransmissionModel(geometry, g, prune_steps=prune_steps, **model_kwargs).steady_transmission(0.0)
            )
    return np.array(out)
