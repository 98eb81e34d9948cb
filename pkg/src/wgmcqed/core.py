"""Composite Hilbert space, Hamiltonian, Lindblad generator and solvers.

The space is atom (x) mode a (x) mode b with the atomic index slowest and
mode b fastest.  Rate convention: kappa and gamma are field/amplitude
decay rates (HWHM-type); collapse operators carry sqrt(2 rate), so the
empty-cavity intensity Lorentzian has HWHM kappa0 + kappa_ext.

Density operators are vectorized column-major, vec(A rho B) =
(B^T kron A) vec(rho).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from . import atom as atom_mod
from . import fields as fields_mod
from .atom import AtomParams, Sublevel, transition_table
from .errors import (
    CapacityError,
    CapacityWarning,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    NonUniqueSteadyStateError,
    StiffnessError,
)
from .fields import ModePolarization, circular_amplitudes, mode_amplitude_vector

#: Soft dimension budget; larger spaces trigger a CapacityWarning.
DEFAULT_SOFT_DIM = 200


@dataclass(frozen=True)
class CompositeSpace:
    """Atom (x) mode a (x) mode b with a fixed, documented index order."""

    levels: tuple[Sublevel, ...]
    cutoff_a: int
    cutoff_b: int

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def dim(self) -> int:
        return self.n_levels * (self.cutoff_a + 1) * (self.cutoff_b + 1)

    def index(self, level: int, n_a: int, n_b: int) -> int:
        return (level * (self.cutoff_a + 1) + n_a) * (self.cutoff_b + 1) + n_b

    def level_index(self, manifold: str, m: int) -> int:
        for i, lev in enumerate(self.levels):
            if lev.manifold == manifold and lev.m == m:
                return i
        raise DomainError(f"sublevel ({manifold}, m={m}) not in space")


def build_space(
    levels: list[Sublevel] | tuple[Sublevel, ...],
    cutoff_a: int,
    cutoff_b: int,
    max_dim: int | None = None,
) -> CompositeSpace:
    if not levels:
        raise DomainError("level list must be nonempty")
    if cutoff_a < 1 or cutoff_b < 1:
        raise DomainError("photon-number cutoffs must be >= 1")
    space = CompositeSpace(tuple(levels), cutoff_a, cutoff_b)
    if max_dim is not None and space.dim > max_dim:
        raise CapacityError(
            f"dim {space.dim} exceeds budget {max_dim}; "
            "prune sublevels or lower the photon cutoffs"
        )
    if space.dim > DEFAULT_SOFT_DIM:
        warnings.warn(
            f"composite dimension {space.dim} is large; solves may be slow",
            CapacityWarning,
            stacklevel=2,
        )
    return space


def _destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr").astype(complex)


@dataclass(frozen=True)
class Operators:
    """Mode and atomic operators embedded in the composite space."""

    a: sp.csr_matrix
    b: sp.csr_matrix
    sigma: dict[int, sp.csr_matrix]  # lowering operator per spherical q
    projectors: dict[tuple[str, int], sp.csr_matrix]


def build_operators(space: CompositeSpace) -> Operators:
    na, nb = space.cutoff_a + 1, space.cutoff_b + 1
    id_atom = sp.identity(space.n_levels, format="csr", dtype=complex)
    id_a = sp.identity(na, format="csr", dtype=complex)
    id_b = sp.identity(nb, format="csr", dtype=complex)

    def embed(op_atom, op_a, op_b):
        return sp.kron(sp.kron(op_atom, op_a, format="csr"), op_b, format="csr")

    a = embed(id_atom, _destroy(na), id_b)
    b = embed(id_atom, id_a, _destroy(nb))

    channels = atom_mod.decay_channels(transition_table(), 1.0)
    present = {(lev.manifold, lev.m): i for i, lev in enumerate(space.levels)}
    sigma = {}
    for q in (-1, 0, 1):
        mat = sp.lil_matrix((space.n_levels, space.n_levels), dtype=complex)
        for m_e, amp in channels[q].items():
            ie = present.get(("excited", m_e))
            ig = present.get(("ground", m_e - q))
            if ie is not None and ig is not None:
                mat[ig, ie] = amp
        sigma[q] = embed(mat.tocsr(), id_a, id_b)

    projectors = {}
    for i, lev in enumerate(space.levels):
        p = sp.lil_matrix((space.n_levels, space.n_levels), dtype=complex)
        p[i, i] = 1.0
        projectors[(lev.manifold, lev.m)] = embed(p.tocsr(), id_a, id_b)

    return Operators(a=a, b=b, sigma=sigma, projectors=projectors)


@dataclass(frozen=True)
class SystemParams:
    """All rates and detunings of the coupled atom-resonator-fibre system.

    delta_cs = omega_r - omega_s (resonator-probe), delta_ca =
    omega_r - omega_a (resonator-atom, zero-field line).  alpha_in is in
    sqrt(photons/s); the drive term is sqrt(2 kappa_ext) alpha_in (d + d+),
    the unique phase convention compatible with the input-output relation
    alpha_out = alpha_in - i sqrt(2 kappa_ext) <d>.
    """

    g0: float
    kappa0: float
    kappa_ext: float
    gamma: float
    delta_cs: float = 0.0
    delta_ca: float = 0.0
    drive_mode: str = "a"
    alpha_in: float = 0.0
    pol_a: ModePolarization = field(default_factory=lambda: fields_mod.tm_mode("+"))
    pol_b: ModePolarization = field(default_factory=lambda: fields_mod.tm_mode("-"))
    azimuth_phase: float = 0.0
    backscatter: float = 0.0  # h (a+b + b+a), sensitivity studies only

    def __post_init__(self):
        if min(self.kappa0, self.kappa_ext, self.gamma) <= 0:
            raise DomainError("kappa0, kappa_ext and gamma must be positive")
        if self.drive_mode not in ("a", "b"):
            raise DomainError("drive_mode must be 'a' or 'b'")

    @property
    def kappa_tot(self) -> float:
        return self.kappa0 + self.kappa_ext

    @property
    def u_a(self) -> dict[int, complex]:
        return circular_amplitudes(mode_amplitude_vector(self.pol_a))

    @property
    def u_b(self) -> dict[int, complex]:
        return circular_amplitudes(mode_amplitude_vector(self.pol_b))

    def at_detuning(self, delta_cs: float) -> "SystemParams":
        return replace(self, delta_cs=delta_cs)


def _check_overlaps(u: dict[int, complex], name: str):
    total = sum(abs(v) ** 2 for v in u.values())
    if abs(total - 1.0) > 1e-10:
        raise ConsistencyError(f"overlaps of mode {name} sum to {total}, expected 1")


def build_hamiltonian(
    space: CompositeSpace,
    params: SystemParams,
    ops: Operators | None = None,
) -> sp.csr_matrix:
    """Generalized multilevel Jaynes-Cummings Hamiltonian, rad/s.

    Rotating frame of the probe: cavity terms delta_cs (a+a + b+b),
    atomic terms (delta_as + zeta_e) or zeta_g with delta_as = delta_cs -
    delta_ca, vectorial couplings g0 u_q per mode, plus the coherent
    drive on the driven mode.
    """
    ops = ops or build_operators(space)
    u_a, u_b = params.u_a, params.u_b
    _check_overlaps(u_a, "a")
    _check_overlaps(u_b, "b")

    num = ops.a.getH() @ ops.a + ops.b.getH() @ ops.b
    h = params.delta_cs * num

    delta_as = params.delta_cs - params.delta_ca
    for lev in space.levels:
        proj = ops.projectors[(lev.manifold, lev.m)]
        shift = lev.energy_shift + (delta_as if lev.excited else 0.0)
        if shift != 0.0:
            h = h + shift * proj

    phase = np.exp(1j * params.azimuth_phase)
    for q in (-1, 0, 1):
        raising = ops.sigma[q].getH()
        coupling = params.g0 * (
            u_a[q] * phase * (ops.a @ raising) + u_b[q] * np.conj(phase) * (ops.b @ raising)
        )
        h = h + coupling + coupling.getH()

    if params.backscatter != 0.0:
        h = h + params.backscatter * (ops.a.getH() @ ops.b + ops.b.getH() @ ops.a)

    if params.alpha_in != 0.0:
        d = ops.a if params.drive_mode == "a" else ops.b
        drive = math.sqrt(2 * params.kappa_ext) * params.alpha_in * (d + d.getH())
        h = h + drive

    herm_err = abs(h - h.getH()).max()
    if herm_err > 1e-12 * max(1.0, abs(h).max()):
        raise ConsistencyError(f"Hamiltonian not Hermitian, deviation {herm_err}")
    return h.tocsr()


def collapse_operators(params: SystemParams, ops: Operators) -> list[sp.csr_matrix]:
    c_ops = [
        math.sqrt(2 * params.kappa0) * ops.a,
        math.sqrt(2 * params.kappa_ext) * ops.a,
        math.sqrt(2 * params.kappa0) * ops.b,
        math.sqrt(2 * params.kappa_ext) * ops.b,
    ]
    for q in (-1, 0, 1):
        c_ops.append(math.sqrt(2 * params.gamma) * ops.sigma[q])
    return c_ops


def liouvillian_matrix(
    h: sp.spmatrix, c_ops: list[sp.spmatrix]
) -> sp.csr_matrix:
    """Sparse generator on column-stacked vectorized density operators."""
    dim = h.shape[0]
    ident = sp.identity(dim, format="csr", dtype=complex)
    gen = -1j * (sp.kron(ident, h) - sp.kron(h.T, ident))
    for c in c_ops:
        cdc = c.getH() @ c
        gen = gen + (
            sp.kron(c.conj(), c)
            - 0.5 * sp.kron(ident, cdc)
            - 0.5 * sp.kron(cdc.T, ident)
        )
    return gen.tocsr()


def build_liouvillian(
    h: sp.spmatrix, params: SystemParams, ops: Operators
) -> sp.csr_matrix:
    return liouvillian_matrix(h, collapse_operators(params, ops))


def apply_liouvillian(gen: sp.spmatrix, rho: np.ndarray) -> np.ndarray:
    dim = rho.shape[0]
    return (gen @ rho.reshape(-1, order="F")).reshape((dim, dim), order="F")


def check_density(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-10, eig_tol=1e-8):
    """Hermiticity / unit-trace / positivity checks; raises on violation."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ConsistencyError(f"density operator not Hermitian, deviation {herm}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ConsistencyError(f"density operator trace {tr}, expected 1")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < -eig_tol:
        raise ConsistencyError(f"negative eigenvalue {eigs.min()}")


def steady_state(gen: sp.spmatrix, dim: int, check: bool = True) -> np.ndarray:
    """Unique steady state of the generator via a direct linear solve.

    The trace condition replaces the generator row with the largest
    diagonal magnitude.
    """
    n = dim * dim
    if gen.shape != (n, n):
        raise DomainError("generator shape inconsistent with dim")
    # The trace functional vec(I) spans the left null space, so only rows at
    # diagonal positions of rho may be replaced; among them take the one
    # with the largest generator-diagonal magnitude.
    trace_cols = np.arange(dim) * (dim + 1)
    diag = np.abs(gen.diagonal())
    row = int(trace_cols[np.argmax(diag[trace_cols])])
    a = gen.tolil(copy=True)
    a[row, :] = 0.0
    for col in trace_cols:
        a[row, col] = 1.0
    rhs = np.zeros(n, dtype=complex)
    rhs[row] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(a.tocsc(), rhs)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise NonUniqueSteadyStateError(
                "singular steady-state system; the null space is degenerate"
            ) from exc
    if not np.all(np.isfinite(x)):
        raise NonUniqueSteadyStateError("steady-state solve returned non-finite values")
    res = np.linalg.norm(gen @ x)
    scale = spla.norm(gen)
    if res > 1e-8 * scale:
        raise ConvergenceError(f"steady-state residual {res:.3e} exceeds 1e-8 |L| = {1e-8 * scale:.3e}")
    rho = x.reshape((dim, dim), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    if check:
        check_density(rho)
    return rho


def time_evolve(
    rho0: np.ndarray,
    gen: sp.spmatrix,
    t_grid,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> list[np.ndarray]:
    """Integrate d rho/dt = L[rho] on an increasing time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0:
        raise DomainError("t_grid must be a nonempty 1-d array")
    if len(t_grid) > 1 and np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    dim = rho0.shape[0]
    if len(t_grid) == 1:
        return [rho0.copy()]
    y0 = rho0.reshape(-1, order="F").astype(complex)
    sol = solve_ivp(
        lambda _t, y: gen @ y,
        (t_grid[0], t_grid[-1]),
        y0,
        t_eval=t_grid,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(
            f"time integration failed: {sol.message}; consider smaller cutoffs"
        )
    out = []
    for k in range(sol.y.shape[1]):
        rho = sol.y[:, k].reshape((dim, dim), order="F")
        tr = np.trace(rho)
        if abs(tr - 1.0) > 1e-8:
            raise ConvergenceError(f"trace drifted to {tr} during evolution")
        out.append(0.5 * (rho + rho.conj().T))
    return out


def expectation(op: sp.spmatrix | np.ndarray, rho: np.ndarray) -> complex:
    """tr(op rho)."""
    if op.shape != rho.shape:
        raise DomainError(f"dimension mismatch: {op.shape} vs {rho.shape}")
    if sp.issparse(op):
        return complex((op @ rho).diagonal().sum())
    return complex(np.trace(op @ rho))


def vacuum_state(space: CompositeSpace, manifold: str, m: int) -> np.ndarray:
    """Pure state |manifold, m> (x) |0>_a (x) |0>_b."""
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    i = space.index(space.level_index(manifold, m), 0, 0)
    rho[i, i] = 1.0
    return rho


def atom_with_vacuum(space: CompositeSpace, rho_atom: np.ndarray) -> np.ndarray:
    """rho_atom (x) |0><0|_a (x) |0><0|_b on the composite space."""
    na, nb = space.cutoff_a + 1, space.cutoff_b + 1
    mode_vac = np.zeros((na * nb, na * nb))
    mode_vac[0, 0] = 1.0
    return np.kron(rho_atom, mode_vac)


def reduced_atom_state(space: CompositeSpace, rho: np.ndarray) -> np.ndarray:
    """Partial trace over both modes."""
    nl = space.n_levels
    nm = (space.cutoff_a + 1) * (space.cutoff_b + 1)
    r = rho.reshape(nl, nm, nl, nm)
    return np.einsum("ikjk->ij", r)


def ground_population(space: CompositeSpace, rho: np.ndarray, m: int) -> float:
    rho_atom = reduced_atom_state(space, rho)
    return float(rho_atom[space.level_index("ground", m), space.level_index("ground", m)].real)
