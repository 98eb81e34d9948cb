"""Transmission spectra, averaging and fitting tests."""

import math
import warnings

import numpy as np
import pytest

from wgmcqed import atom, core, spectra
from wgmcqed.errors import DomainError, UndefinedTransmissionError

from conftest import GAMMA, KAPPA0, KAPPA_EXT, MHZ


class TestClosedForms:
    def test_empty_cavity_lorentzian(self):
        assert spectra.empty_cavity_transmission(0.0, KAPPA0, KAPPA_EXT) == 0.0
        kt = KAPPA0 + KAPPA_EXT
        assert spectra.empty_cavity_transmission(kt, KAPPA0, KAPPA_EXT) == pytest.approx(0.5)
        # undercoupled floor
        assert spectra.empty_cavity_transmission(0.0, 2 * KAPPA_EXT, KAPPA_EXT) == pytest.approx(1 / 9)

    def test_two_level_amplitude_limits(self):
        t0 = spectra.two_level_transmission_amplitude(0.0, 0.0, KAPPA0, KAPPA_EXT, GAMMA)
        assert abs(t0) == pytest.approx(0.0)
        t_big = spectra.two_level_transmission_amplitude(0.0, 1e12, KAPPA0, KAPPA_EXT, GAMMA)
        assert abs(t_big) == pytest.approx(1.0, abs=1e-6)

    def test_travelling_wave_exceeds_legacy_bound(self):
        g = np.array([50.0]) * MHZ
        assert spectra.tm_on_resonance_transmission(g, KAPPA0, KAPPA_EXT, GAMMA)[0] > 0.25

    def test_legacy_capped_at_quarter(self):
        kt = KAPPA0 + KAPPA_EXT
        g_grid = np.linspace(0.0, 1e3, 400) * kt
        t0 = np.array(
            [
                spectra.legacy_standing_wave_spectrum([0.0], g).transmission[0]
                for g in g_grid
            ]
        )
        assert t0.max() <= 0.25 + 1e-6
        # the cap is approached at large coupling
        assert t0[-1] == pytest.approx(0.25, abs=1e-3)

    def test_legacy_spectrum_shape(self):
        dets = np.linspace(-40, 40, 41) * MHZ
        res = spectra.legacy_standing_wave_spectrum(dets, 20 * MHZ)
        assert res.meta == "legacy"
        assert np.all((res.transmission >= 0) & (res.transmission <= 1))


class TestModelBasics:
    def test_unknown_geometry(self):
        with pytest.raises(DomainError):
            spectra.TransmissionModel("sideways_TM", g0=MHZ)

    def test_decoupled_model_reproduces_empty_cavity(self):
        model = spectra.TransmissionModel("co_TM", g0=0.0, alpha_in=1.0)
        dets = np.linspace(-50, 50, 11) * MHZ
        res = model.spectrum(dets)
        ref = spectra.empty_cavity_transmission(dets, KAPPA0, KAPPA_EXT)
        assert np.max(np.abs(res.transmission - ref)) < 1e-6

    def test_geometry_setup(self):
        co = spectra.TransmissionModel("co_TM", g0=MHZ, prune_steps=1)
        counter = spectra.TransmissionModel("counter_TM", g0=MHZ, prune_steps=1)
        assert co.params.drive_mode == "a"
        assert counter.params.drive_mode == "b"
        te = spectra.TransmissionModel("co_TE", g0=MHZ, prune_steps=1)
        assert te.initial == ("ground", 0)

    def test_transmission_undefined_without_drive(self):
        model = spectra.TransmissionModel("co_TM", g0=MHZ, alpha_in=0.0, prune_steps=1)
        rho = np.eye(model.space.dim, dtype=complex) / model.space.dim
        with pytest.raises(UndefinedTransmissionError):
            spectra.transmission_from_state(rho, model.params, model.ops)

    def test_detuning_decomposition(self):
        # L(delta) from the cached split equals a fresh build
        model = spectra.TransmissionModel("co_TM", g0=10 * MHZ, prune_steps=1)
        delta = 13 * MHZ
        params = model.params_at(delta)
        h = core.build_hamiltonian(model.space, params, model.ops)
        direct = core.build_liouvillian(h, params, model.ops)
        cached = model.generator(delta)
        assert abs(direct - cached).max() < 1e-6 * abs(direct).max()


class TestPruning:
    def test_two_step_tm_set(self):
        model = spectra.TransmissionModel("co_TM", g0=20 * MHZ, prune_steps=2)
        keys = {(l.manifold, l.m) for l in model.space.levels}
        assert ("ground", 3) in keys
        assert ("excited", 4) in keys
        assert len(keys) == 10

    def test_closed_under_decay(self):
        model = spectra.TransmissionModel("co_TM", g0=20 * MHZ, prune_steps=2)
        keys = {(l.manifold, l.m) for l in model.space.levels}
        for manifold, m in keys:
            if manifold != "excited":
                continue
            for q in (-1, 0, 1):
                if abs(m - q) <= 3 and atom.cg_squared(m - q, m) > 0:
                    assert ("ground", m - q) in keys

    def test_pruned_matches_full_spectrum(self):
        dets = np.array([-20.0, 0.0, 20.0]) * MHZ
        full = spectra.sweep_spectrum("co_TM", dets, 20 * MHZ)
        pruned = spectra.sweep_spectrum("co_TM", dets, 20 * MHZ, prune_steps=2)
        assert np.max(np.abs(full.transmission - pruned.transmission)) < 5e-3


class TestAveraging:
    def test_quadrature_weights_normalized(self):
        dist = spectra.GDistribution(17 * MHZ, 6 * MHZ)
        nodes, weights = spectra.quadrature_nodes(dist)
        assert len(nodes) == 17
        assert weights.sum() == pytest.approx(1.0)
        assert nodes.min() >= dist.g_min and nodes.max() <= dist.g_max

    def test_single_node_is_clipped_mean(self):
        dist = spectra.GDistribution(40 * MHZ, 6 * MHZ, n_nodes=1)
        nodes, weights = spectra.quadrature_nodes(dist)
        assert nodes[0] == pytest.approx(dist.g_max)
        assert weights[0] == 1.0

    def test_distribution_validation(self):
        with pytest.raises(DomainError):
            spectra.GDistribution(17 * MHZ, 6 * MHZ, g_min=30 * MHZ, g_max=10 * MHZ)
        with pytest.raises(DomainError):
            spectra.GDistribution(17 * MHZ, -1.0)

    def test_zero_sigma_equals_fixed_g(self):
        dets = np.array([-10.0, 0.0, 10.0]) * MHZ
        dist = spectra.GDistribution(17 * MHZ, 0.0)
        avg = spectra.averaged_spectrum("co_TM", dets, dist, prune_steps=2)
        fixed = spectra.sweep_spectrum("co_TM", dets, 17 * MHZ, prune_steps=2)
        assert np.allclose(avg.transmission, fixed.transmission)

    def test_average_is_weighted_node_sum(self):
        dets = np.array([0.0, 15.0]) * MHZ
        dist = spectra.GDistribution(17 * MHZ, 6 * MHZ, n_nodes=5)
        nodes_matrix = spectra.node_spectra("co_TM", dets, dist, prune_steps=2)
        _, weights = spectra.quadrature_nodes(dist)
        avg = spectra.averaged_spectrum("co_TM", dets, dist, prune_steps=2)
        assert np.allclose(weights @ nodes_matrix, avg.transmission)


class TestFit:
    def test_noiseless_roundtrip(self):
        dets = np.linspace(-50, 50, 21) * MHZ
        dist = spectra.GDistribution(17 * MHZ, 6 * MHZ, n_nodes=9)
        clean = spectra.averaged_spectrum("co_TM", dets, dist, prune_steps=2)
        fit = spectra.fit_spectrum(clean, "co_TM", dist, prune_steps=2)
        assert abs(fit.g_mean_fit - 17 * MHZ) < 0.5 * MHZ
        assert abs(fit.g_sigma_fit - 6 * MHZ) < 0.5 * MHZ
        assert fit.covariance.shape == (2, 2)
        assert fit.residual_norm < 1e-6


class TestPulsed:
    def test_long_window_reaches_steady_state(self):
        # ergodic limit on the cheap decoupled model
        model = spectra.TransmissionModel("co_TM", g0=0.0)
        rho0 = core.atom_with_vacuum(model.space, np.eye(1, dtype=complex))
        t_cw = model.steady_transmission(10 * MHZ)
        t_pulsed = model.pulsed_transmission(10 * MHZ, rho0, t_start=1e-6, t_len=2e-6)
        assert abs(t_pulsed - t_cw) < 1e-4

    def test_early_window_warns(self):
        model = spectra.TransmissionModel("co_TM", g0=0.0)
        with pytest.warns(UserWarning, match="relaxed"):
            model.pulsed_spectrum([0.0], t_len=20e-9, t_start=1e-9)

    def test_spectrum_result_validation(self):
        with pytest.raises(DomainError):
            spectra.SpectrumResult(np.zeros(3), np.zeros(2), "x")


class TestTransmissionVsCoupling:
    def test_zero_coupling_is_empty_cavity(self):
        out = spectra.transmission_vs_coupling([0.0])
        assert out[0] == pytest.approx(
            spectra.empty_cavity_transmission(0.0, KAPPA0, KAPPA_EXT)
        )

    def test_monotone_in_coupling(self):
        g = np.array([0.0, 5.0, 10.0, 20.0, 30.0]) * MHZ
        out = spectra.transmission_vs_coupling(g)
        assert np.all(np.diff(out) > 0)
