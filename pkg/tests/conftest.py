"""Shared fixtures and helpers for the test suite."""

import math

import numpy as np
import pytest

from wgmcqed import atom, core, fields

MHZ = 2 * math.pi * 1e6

KAPPA0 = 2 * math.pi * 5e6
KAPPA_EXT = 2 * math.pi * 5e6
GAMMA = math.pi * 6.07e6  # amplitude rate Gamma/2


def two_level_steady_transmission(delta_cs, g0, alpha_in, cutoff=3):
    """Steady transmission of a genuinely two-level reduction.

    Keeps only the stretched pair (3,3)/(4,4); mode a is TM+ (sigma+
    coupling u = 0.9875), mode b is TE and therefore fully decoupled from
    the pair.  The effective analytic coupling is g0 * |u_a[+1]|.
    """
    levels = [atom.Sublevel("ground", 3), atom.Sublevel("excited", 4)]
    space = core.build_space(levels, cutoff, 1)
    params = core.SystemParams(
        g0=g0,
        kappa0=KAPPA0,
        kappa_ext=KAPPA_EXT,
        gamma=GAMMA,
        delta_cs=delta_cs,
        alpha_in=alpha_in,
        pol_a=fields.tm_mode("+"),
        pol_b=fields.te_mode("-"),
    )
    ops = core.build_operators(space)
    h = core.build_hamiltonian(space, params, ops)
    gen = core.build_liouvillian(h, params, ops)
    rho = core.steady_state(gen, space.dim)
    amp = params.alpha_in - 1j * math.sqrt(2 * params.kappa_ext) * core.expectation(ops.a, rho)
    return abs(amp / params.alpha_in) ** 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240824)
