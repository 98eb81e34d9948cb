"""Hyperfine Zeeman structure of the 85Rb D2 F=3 -> F'=4 manifold.

The excited F'=4 manifold decays exclusively to F=3, closing the system.
Relative dipole amplitudes are Clebsch-Gordan coefficients
<F=3, m_g; 1, q | F'=4, m_e> in the Condon-Shortley convention, so the
stretched (3,3)->(4,4) coefficient is +1 and squared amplitudes are
relative transition strengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConsistencyError, DomainError, ForbiddenTransitionError

# Physical constants (SI)
HBAR = 1.054571817e-34  # J s
MU_B = 9.2740100783e-24  # J/T
GAUSS = 1e-4  # T

F_GROUND = 3
F_EXCITED = 4

# Electron-spin-dominated Lande gJ factors of 5S1/2 and 5P3/2
GJ_GROUND = 2.0
GJ_EXCITED = 4.0 / 3.0
I_NUCLEAR = 2.5
J_GROUND = 0.5
J_EXCITED = 1.5

#: Rb D2 natural linewidth Gamma/2pi (population decay); amplitude decay
#: rate is gamma = Gamma/2.
GAMMA_POP_D2 = 2 * math.pi * 6.07e6


def lande_gF(J: float, I: float, F: float, gJ: float) -> float:
    """Lande factor gJ [F(F+1)+J(J+1)-I(I+1)] / [2F(F+1)], nuclear term neglected."""
    for x in (J, I, F):
        if x < 0 or round(2 * x) != 2 * x:
            raise DomainError(f"invalid angular momentum quantum number {x}")
    if not abs(J - I) <= F <= J + I or round(F - abs(J - I)) != F - abs(J - I):
        raise DomainError(f"F={F} incompatible with J={J}, I={I}")
    return gJ * (F * (F + 1) + J * (J + 1) - I * (I + 1)) / (2 * F * (F + 1))


GF_GROUND = lande_gF(J_GROUND, I_NUCLEAR, F_GROUND, GJ_GROUND)  # 1/3
GF_EXCITED = lande_gF(J_EXCITED, I_NUCLEAR, F_EXCITED, GJ_EXCITED)  # 1/2


@dataclass(frozen=True, order=True)
class Sublevel:
    """One Zeeman sublevel; energy_shift is the Zeeman shift in rad/s."""

    manifold: str  # 'ground' (F=3) or 'excited' (F'=4)
    m: int
    energy_shift: float = 0.0

    def __post_init__(self):
        if self.manifold not in ("ground", "excited"):
            raise DomainError(f"unknown manifold {self.manifold!r}")
        f = F_GROUND if self.manifold == "ground" else F_EXCITED
        if abs(self.m) > f:
            raise DomainError(f"|m|={abs(self.m)} exceeds F={f}")

    @property
    def excited(self) -> bool:
        return self.manifold == "excited"


def zeeman_shift(m: int, gF: float, B_z: float) -> float:
    """Linear Zeeman shift m gF mu_B B_z / hbar in rad/s."""
    return m * gF * MU_B * B_z / HBAR


@dataclass(frozen=True)
class AtomParams:
    """Atomic rates and field. gamma is the amplitude decay rate Gamma/2."""

    gamma: float = GAMMA_POP_D2 / 2
    gF_ground: float = GF_GROUND
    gF_excited: float = GF_EXCITED
    B_z: float = 4.5 * GAUSS

    def __post_init__(self):
        if self.gamma <= 0:
            raise DomainError("gamma must be positive")


def ground_levels(atom: AtomParams | None = None, include_zeeman: bool = True) -> list[Sublevel]:
    atom = atom or AtomParams()
    return [
        Sublevel(
            "ground",
            m,
            zeeman_shift(m, atom.gF_ground, atom.B_z) if include_zeeman else 0.0,
        )
        for m in range(-F_GROUND, F_GROUND + 1)
    ]


def excited_levels(atom: AtomParams | None = None, include_zeeman: bool = True) -> list[Sublevel]:
    atom = atom or AtomParams()
    return [
        Sublevel(
            "excited",
            m,
            zeeman_shift(m, atom.gF_excited, atom.B_z) if include_zeeman else 0.0,
        )
        for m in range(-F_EXCITED, F_EXCITED + 1)
    ]


def all_levels(atom: AtomParams | None = None, include_zeeman: bool = True) -> list[Sublevel]:
    """The full 16-level manifold, ground sublevels first."""
    return ground_levels(atom, include_zeeman) + excited_levels(atom, include_zeeman)


def cg_squared(m_g: int, m_e: int) -> Fraction:
    """Exact squared Clebsch-Gordan coefficient <3,m_g;1,q|4,m_e>^2."""
    if abs(m_g) > F_GROUND or abs(m_e) > F_EXCITED:
        raise DomainError(f"m out of range: m_g={m_g}, m_e={m_e}")
    q = m_e - m_g
    if abs(q) > 1:
        raise ForbiddenTransitionError(f"|m_e - m_g| = {abs(q)} > 1")
    m = m_g
    # J = j1 + 1 coupling with j2 = 1, j1 = 3
    if q == 1:
        return Fraction((4 + m) * (5 + m), 56)
    if q == 0:
        return Fraction((4 - m) * (4 + m), 28)
    return Fraction((4 - m) * (5 - m), 56)


def dipole_amplitude(m_g: int, m_e: int) -> tuple[int, float]:
    """Spherical index q = m_e - m_g and relative dipole amplitude."""
    frac = cg_squared(m_g, m_e)
    return m_e - m_g, math.sqrt(float(frac))


@dataclass(frozen=True)
class TransitionTable:
    """All allowed (m_g, m_e, q, amplitude) entries of F=3 -> F'=4."""

    entries: tuple[tuple[int, int, int, float], ...] = field(default=())

    def amplitude(self, m_g: int, m_e: int) -> float:
        for mg, me, _, amp in self.entries:
            if mg == m_g and me == m_e:
                return amp
        return 0.0


def transition_table() -> TransitionTable:
    entries = []
    for m_e in range(-F_EXCITED, F_EXCITED + 1):
        for q in (-1, 0, 1):
            m_g = m_e - q
            if abs(m_g) <= F_GROUND:
                entries.append((m_g, m_e, q, dipole_amplitude(m_g, m_e)[1]))
    return TransitionTable(entries=tuple(entries))


def decay_channels(
    table: TransitionTable, gamma: float
) -> dict[int, dict[int, float]]:
    """Per-q coefficient maps m_e -> amplitude of the lowering operators.

    With collapse operators sqrt(2 gamma) sigma_q, every excited sublevel
    decays at the total population rate Gamma = 2 gamma.
    """
    totals: dict[int, float] = {m: 0.0 for m in range(-F_EXCITED, F_EXCITED + 1)}
    channels: dict[int, dict[int, float]] = {-1: {}, 0: {}, 1: {}}
    for m_g, m_e, q, amp in table.entries:
        channels[q][m_e] = amp
        totals[m_e] += amp * amp
    for m_e, tot in totals.items():
        if abs(tot - 1.0) > 1e-10:
            raise ConsistencyError(
                f"branching of excited m={m_e} sums to {tot}, expected 1"
            )
    del gamma  # rate enters via the collapse-operator prefactor
    return channels
