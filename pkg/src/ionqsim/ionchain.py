"""Static physics of a linear ion string in a magnetic-field gradient.

Lengths are measured in units of zeta = (e^2 / 4 pi eps0 m nu1^2)^(1/3).
In these units the potential energy of the string is

    V(u) = sum_j u_j^2 / 2 + sum_{i<j} 1 / |u_i - u_j|,

its Hessian at equilibrium is the dimensionless dynamical matrix whose
eigenvalues lambda_n give the axial mode frequencies nu_n =
nu1 sqrt(lambda_n), with the center-of-mass mode at lambda = 1.

An axial field gradient b makes the qubit splitting position dependent
(Breit-Rabi), displaces the per-state equilibria, and thereby couples
spins pairwise through the modes:

    d_z(n,j)   = -hbar (dw01_j/dz) / (m nu_n^2)
    eps(n,j)   = S_nj Delta_z_n (dw01_j/dz) / nu_n
    J_ij       = sum_n nu_n eps(n,i) eps(n,j)
"""

import math
from dataclasses import dataclass

import numpy as np

from . import constants as const
from .constants import Species


class ConvergenceError(RuntimeError):
    """Equilibrium solver failed; carries the residual gradient norm."""


class NotAMinimumError(RuntimeError):
    """Dynamical matrix has a non-positive eigenvalue."""


@dataclass(frozen=True)
class TrapConfig:
    """Linear-trap operating point: COM frequency, ion count, gradient."""

    nu1: float            # COM angular frequency, rad/s
    n_ions: int
    b: float = 0.0        # axial field gradient dB/dz, T/m
    b0: float = 0.0       # offset field at the trap center, T

    def __post_init__(self):
        if self.nu1 <= 0:
            raise ValueError(f"nu1 must be positive, got {self.nu1}")
        if self.n_ions < 1:
            raise ValueError(f"n_ions must be >= 1, got {self.n_ions}")
        if self.b < 0:
            raise ValueError(f"gradient b must be >= 0, got {self.b}")


@dataclass(frozen=True)
class ChainModes:
    """Equilibrium geometry and axial normal modes of the string.

    u are dimensionless positions (ascending), z0 = u * zeta in meters,
    nu the mode angular frequencies (ascending, nu[0] is the COM), and
    s_matrix the orthonormal mode matrix with S[n, j] the amplitude of
    ion j in mode n (first nonzero component of each row positive).
    """

    u: np.ndarray
    z0: np.ndarray
    nu: np.ndarray
    s_matrix: np.ndarray

    @property
    def n_ions(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class GradientCoupling:
    """Per-mode, per-ion coupling numbers induced by the field gradient.

    eps[n, j] is the gradient part of the effective Lamb-Dicke
    parameter, d_z[n, j] the state-dependent equilibrium shift in m,
    and eta_prime[n, j] = |eta_n S_nj + i eps_nj| its magnitude.
    """

    eps: np.ndarray
    d_z: np.ndarray
    eta_prime: np.ndarray


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric spin-spin coupling constants J_ij in rad/s, zero diagonal."""

    j: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ValueError(f"J must be square, got shape {j.shape}")
        if not np.all(np.isfinite(j)):
            raise ValueError("J entries must be finite")
        if np.max(np.abs(j - j.T)) > 1e-9 * max(1.0, np.max(np.abs(j))):
            raise ValueError("J must be symmetric")
        object.__setattr__(self, "j", j)
        j.flags.writeable = False

    def in_hz(self) -> np.ndarray:
        return self.j / (2.0 * math.pi)


def length_scale(species: Species, nu1: float) -> float:
    """zeta = (e^2 / (4 pi eps0 m nu1^2))^(1/3) in meters."""
    if nu1 <= 0:
        raise ValueError(f"nu1 must be positive, got {nu1}")
    return (const.COULOMB_E2 / (species.mass * nu1 * nu1)) ** (1.0 / 3.0)


def spacing_estimate(n_ions: int, zeta: float) -> float:
    """Fitted inner spacing delta_z ~ zeta * 2 N^-0.56 (N >= 2).

    The fit overestimates small crystals: for N = 2 it gives 1.357 zeta
    against the exact spacing 2^(1/3) zeta = 1.260 zeta.
    """
    if n_ions < 2:
        raise ValueError(f"spacing needs at least 2 ions, got {n_ions}")
    return zeta * 2.0 * n_ions ** (-0.56)


def _gradient(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _hessian(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    off = -2.0 / np.abs(d) ** 3
    h = off.copy()
    np.fill_diagonal(h, 1.0 - np.sum(off, axis=1))
    return h


def equilibrium_positions(n_ions: int, tol: float = 1e-13, max_iter: int = 100) -> np.ndarray:
    """Dimensionless equilibrium positions of n ions, sorted ascending.

    Damped Newton iteration on grad V with the analytic Hessian, seeded
    with uniform spacing from the delta_z fit; a coordinate-descent
    sweep un-sticks the rare stalled start.  The returned configuration
    satisfies |grad V|_inf < 1e-12 and sums to zero.
    """
    if n_ions < 1:
        raise ValueError(f"n_ions must be >= 1, got {n_ions}")
    if n_ions == 1:
        return np.zeros(1)

    du = 2.0 * n_ions ** (-0.56)
    u = (np.arange(n_ions) - 0.5 * (n_ions - 1)) * du
    g = _gradient(u)
    for _ in range(max_iter):
        if np.max(np.abs(g)) < tol:
            break
        step = np.linalg.solve(_hessian(u), -g)
        alpha, g_norm = 1.0, np.linalg.norm(g)
        for _ in range(40):
            trial = u + alpha * step
            if np.all(np.diff(trial) > 0):
                g_trial = _gradient(trial)
                if np.linalg.norm(g_trial) < g_norm:
                    u, g = trial, g_trial
                    break
            alpha *= 0.5
        else:
            u, g = _coordinate_sweep(u)
    if np.max(np.abs(g)) >= 1e-12:
        raise ConvergenceError(
            f"equilibrium solver stalled at |grad|_inf = {np.max(np.abs(g)):.3e}")
    return u - np.mean(u)


def _coordinate_sweep(u: np.ndarray, sweeps: int = 5):
    """One-dimensional Newton sweeps, coordinate by coordinate."""
    u = u.copy()
    for _ in range(sweeps):
        for m in range(u.size):
            d = u[m] - np.delete(u, m)
            g_m = u[m] - np.sum(np.sign(d) / d**2)
            h_mm = 1.0 + 2.0 * np.sum(1.0 / np.abs(d) ** 3)
            u[m] -= g_m / h_mm
    return u, _gradient(u)


def normal_modes(u: np.ndarray, nu1: float, species: Species | None = None) -> ChainModes:
    """Axial normal modes from the Hessian of V at equilibrium u.

    Raises NotAMinimumError if the configuration is not a local minimum.
    species (with nu1) fixes the physical length scale for z0; without
    it z0 is reported in units of zeta.
    """
    u = np.asarray(u, dtype=float)
    if u.size > 1 and np.any(np.diff(u) <= 0):
        raise ValueError("positions must be distinct and sorted ascending")
    lam, vecs = np.linalg.eigh(_hessian(u))
    if lam[0] <= 0:
        raise NotAMinimumError(f"lowest Hessian eigenvalue is {lam[0]:.3e}")
    s = vecs.T.copy()
    for row in s:
        nz = np.flatnonzero(np.abs(row) > 1e-8)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    zeta = length_scale(species, nu1) if species is not None else 1.0
    return ChainModes(u=u, z0=u * zeta, nu=nu1 * np.sqrt(lam), s_matrix=s)


def chain_modes(species: Species, trap: TrapConfig) -> ChainModes:
    """Convenience: equilibrium positions plus modes for a trap config."""
    return normal_modes(equilibrium_positions(trap.n_ions), trap.nu1, species)


def ground_state_width(species: Species, nu) -> np.ndarray:
    """RMS position spread Delta_z = sqrt(hbar / 2 m nu) of mode nu."""
    return np.sqrt(const.HBAR / (2.0 * species.mass * np.asarray(nu, dtype=float)))


def lamb_dicke(wavelength: float, species: Species, nu):
    """Lamb-Dicke parameter eta = 2 pi Delta_z / lambda for mode nu.

    Returns (eta, Delta_z, Delta_p).  For microwave wavelengths eta is
    essentially zero, which is why a field gradient is needed to couple
    internal and motional dynamics.
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    dz = ground_state_width(species, nu)
    dp = np.sqrt(const.HBAR * species.mass * np.asarray(nu, dtype=float) / 2.0)
    return 2.0 * math.pi * dz / wavelength, dz, dp


def chi_parameter(species: Species, b_field) -> np.ndarray:
    """Scaled field chi = (g_J + g_I m_e/m_p) mu_B B / E_HFS."""
    b = np.abs(np.asarray(b_field, dtype=float))
    return (species.g_j + species.g_i * const.M_ELECTRON / const.M_PROTON) * const.MU_B * b / species.e_hfs


def field_for_chi(species: Species, chi: float = 1.0) -> float:
    """Magnetic field at which the scaled field parameter reaches chi."""
    return chi * species.e_hfs / ((species.g_j + species.g_i * const.M_ELECTRON / const.M_PROTON) * const.MU_B)


def breit_rabi_energy(species: Species, b_field: float, m_q: float, branch: int) -> float:
    """Hyperfine level energy at field B for a J = 1/2 ion, in J.

    branch +1 selects levels from F = I + 1/2, -1 those from F = I - 1/2;
    m_q is the magnetic quantum number of the level.
    """
    if branch not in (+1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    i_nuc = species.i_nuc
    f_max = i_nuc + 0.5
    limit = f_max if branch == +1 else i_nuc - 0.5
    if abs(m_q) > limit + 1e-9:
        raise ValueError(f"|m_q| = {abs(m_q)} exceeds {limit} for branch {branch:+d}")
    if abs((m_q + f_max) - round(m_q + f_max)) > 1e-9:
        raise ValueError(f"m_q = {m_q} is not a valid magnetic quantum number for I = {i_nuc}")
    chi = chi_parameter(species, b_field)
    radicand = 1.0 + 4.0 * m_q * chi / (2.0 * i_nuc + 1.0) + chi * chi
    return (
        species.e_hfs / (2.0 * (2.0 * i_nuc + 1.0))
        - species.g_i * const.MU_N * b_field * m_q
        + branch * 0.5 * species.e_hfs * math.sqrt(radicand)
    )


def qubit_frequency_gradient(species: Species, b_at_ion, b: float) -> np.ndarray:
    """Spatial derivative of the qubit resonance, rad s^-1 m^-1.

    dw01/dz = (g_J mu_B b / 2 hbar) (1 + chi / sqrt(1 + chi^2)) for the
    m_q = 0 clock pair, evaluated at the local field.
    """
    if b < 0:
        raise ValueError(f"gradient b must be >= 0, got {b}")
    chi = chi_parameter(species, b_at_ion)
    factor = 1.0 + chi / np.sqrt(1.0 + chi * chi)
    return 0.5 * species.g_j * const.MU_B * b / const.HBAR * factor


def required_gradient(species: Species, nu1: float, n_ions: int) -> float:
    """Weak-field gradient needed to resolve neighboring qubits, T/m.

    Resolving carriers against all first-order sidebands requires the
    frequency shift across one spacing to exceed 2 nu_N + nu_1, which
    with the spacing fit gives
    (hbar / 2 mu_B)(4 pi eps0 m / e^2)^(1/3) nu1^(5/3)
    (4.7 N^0.56 + 0.5 N^1.56).
    """
    if n_ions < 2:
        raise ValueError(f"need at least 2 ions to address, got {n_ions}")
    return (
        const.HBAR / (2.0 * const.MU_B)
        * (species.mass / const.COULOMB_E2) ** (1.0 / 3.0)
        * nu1 ** (5.0 / 3.0)
        * (4.7 * n_ions**0.56 + 0.5 * n_ions**1.56)
    )


def epsilon_matrix(modes: ChainModes, gradients, species: Species,
                   wavelength: float | None = None) -> GradientCoupling:
    """Gradient-induced couplings for every (mode, ion) pair.

    gradients is dw01/dz per ion (scalar broadcasts to all ions).  When
    a drive wavelength is given the photon-recoil Lamb-Dicke parameter
    eta_n is folded into eta_prime; otherwise eta_n = 0 (microwave
    regime) and |eta_prime| = |eps|.
    """
    grad = np.broadcast_to(np.asarray(gradients, dtype=float), (modes.n_ions,))
    nu = modes.nu
    dz_n = ground_state_width(species, nu)
    d_z = -const.HBAR * grad[None, :] / (species.mass * nu[:, None] ** 2)
    eps = modes.s_matrix * (dz_n / nu)[:, None] * grad[None, :]
    if wavelength is None:
        eta_n = np.zeros_like(nu)
    else:
        eta_n, _, _ = lamb_dicke(wavelength, species, nu)
    eta_prime = np.hypot(eta_n[:, None] * modes.s_matrix, eps)
    return GradientCoupling(eps=eps, d_z=d_z, eta_prime=eta_prime)


def coupling_matrix(modes: ChainModes, coupling: GradientCoupling) -> CouplingMatrix:
    """J_ij = sum_n nu_n eps_ni eps_nj (rad/s), zero diagonal.

    The diagonal is excluded by convention: the Hamiltonian sums pairs
    i < j only.
    """
    eps = coupling.eps
    j = eps.T @ (modes.nu[:, None] * eps)
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return CouplingMatrix(j=j)


def spin_spin_couplings(species: Species, trap: TrapConfig,
                        weak_field: bool = True) -> tuple[ChainModes, CouplingMatrix]:
    """Full pipeline from a trap config to the J matrix.

    With weak_field=True the chi-dependent factor in dw01/dz is dropped
    (chi -> 0), i.e. the offset field is assumed negligible; otherwise
    the local field b0 + b z_j at each equilibrium position is used.
    """
    modes = chain_modes(species, trap)
    if weak_field:
        grads = qubit_frequency_gradient(species, 0.0, trap.b)
    else:
        grads = qubit_frequency_gradient(species, trap.b0 + trap.b * modes.z0, trap.b)
    coupling = epsilon_matrix(modes, grads, species)
    return modes, coupling_matrix(modes, coupling)
