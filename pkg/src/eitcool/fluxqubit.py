"""Three-junction flux qubit in the per-junction charge basis.

The potential is ``-E_J (cos phi1 + cos phi2) - alpha E_J cos(phi1 + phi2 + 2 pi f)``,
i.e. ``-2 E_J cos(phi_m) cos(phi_p) - alpha E_J C_p`` with
``phi_p = (phi1 + phi2)/2`` and ``phi_m = (phi1 - phi2)/2``. The kinetic energy
uses the junction capacitance matrix ``C [[1+alpha, alpha], [alpha, 1+alpha]]``,
which reproduces the masses ``M_m`` and ``M_p = (1 + 2 alpha) M_m``.

Energies are in Hz (E/h); transition frequencies are returned as angular
frequencies (rad/s).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import constants

from .params import GAMMA_SI, CouplingParams

PHI0 = constants.h / (2 * constants.e)
CONVERGENCE_TOL = 1e-6
DRIVE_GATE = 0.1


class ConvergenceError(RuntimeError):
    pass


class SingularWorkingPointError(ValueError):
    pass


class DriveAmplitudeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class JunctionParams:
    alpha: float = 0.7
    e_j: float = 200e9
    ej_over_ec: float = 50.0
    f: float = 0.5005
    phi0: float = PHI0

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.ej_over_ec <= 0 or self.e_j < 0:
            raise ValueError("need E_J >= 0 and E_J/E_C > 0")

    @property
    def e_c(self):
        return self.e_j / self.ej_over_ec

    @property
    def phibar(self):
        return 2 * math.pi / self.phi0

    @property
    def junction_capacitance(self):
        """C_J from E_C = e^2 / 2 C_J (E_C converted from Hz to J)."""
        return constants.e ** 2 / (2 * constants.h * self.e_c)

    @property
    def masses(self):
        """(M_m, M_p) with M_m = 2 C_J (Phi0 / 2 pi)^2."""
        m_m = 2 * self.junction_capacitance / self.phibar ** 2
        return m_m, (1 + 2 * self.alpha) * m_m


@dataclass(frozen=True)
class ChargeBasisHamiltonian:
    params: JunctionParams
    n_cut: int
    matrix: sp.csr_matrix
    cos_p: sp.csr_matrix
    sin_p: sp.csr_matrix
    charges: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class QubitLevels:
    """Three lowest levels |g>, |e>, |a> and their matrix-element tables."""

    energies: np.ndarray
    omega_eg: float
    omega_ag: float
    omega_ae: float
    s_ag: float
    s_ae: float
    s_eg: float
    c_ag: float
    c_ae: float
    c_eg: float
    s_table: np.ndarray
    c_table: np.ndarray
    vectors: np.ndarray = field(repr=False)
    near_degenerate: bool = False

    def as_dict(self):
        keys = ("omega_eg", "omega_ag", "omega_ae", "s_ag", "s_ae", "s_eg",
                "c_ag", "c_ae", "c_eg", "near_degenerate")
        return {k: getattr(self, k) for k in keys}


def _shift(d):
    # e^{i phi} |n> = |n + 1>
    return sp.diags(np.ones(d - 1), -1, format="csr", dtype=complex)


def _assemble(params, n_cut):
    n = np.arange(-n_cut, n_cut + 1, dtype=float)
    d = n.size
    eye = sp.identity(d, format="csr", dtype=complex)
    num = sp.diags(n.astype(complex), format="csr")
    n1, n2 = sp.kron(num, eye), sp.kron(eye, num)
    a = params.alpha
    inv = np.array([[1 + a, -a], [-a, 1 + a]]) / (1 + 2 * a)
    kinetic = 4 * params.e_c * (inv[0, 0] * n1 @ n1 + inv[1, 1] * n2 @ n2
                                + 2 * inv[0, 1] * n1 @ n2)
    up = _shift(d)
    u1, u2 = sp.kron(up, eye), sp.kron(eye, up)
    cos1 = 0.5 * (u1 + u1.T)
    cos2 = 0.5 * (u2 + u2.T)
    # e^{i(phi1 + phi2 + 2 pi f)}
    ep = np.exp(2j * math.pi * params.f) * (u1 @ u2)
    cos_p = (0.5 * (ep + ep.conj().T)).tocsr()
    sin_p = (-0.5j * (ep - ep.conj().T)).tocsr()
    h = (kinetic - params.e_j * (cos1 + cos2) - a * params.e_j * cos_p).tocsr()
    charges = np.stack(np.meshgrid(n, n, indexing="ij"), -1).reshape(-1, 2)
    return ChargeBasisHamiltonian(params, n_cut, h, cos_p, sin_p, charges)


def _lowest(matrix, k, dense=False):
    if dense or matrix.shape[0] <= 400:
        w, v = la.eigh(matrix.toarray(), subset_by_index=[0, k - 1])
        return w, v
    w, v = spla.eigsh(matrix, k=k, which="SA", tol=1e-13)
    order = np.argsort(w)
    return w[order], v[:, order]


def spectrum(params, n_cut=10, k=5, dense=False):
    """Lowest ``k`` eigenvalues (Hz)."""
    return _lowest(_assemble(params, n_cut).matrix, k, dense)[0]


def build_hamiltonian(params, n_cut=10, check=True):
    """Charge-basis Hamiltonian; ``check`` runs the n_cut-doubling gate."""
    if n_cut < 4:
        raise ValueError("n_cut must be >= 4")
    h = _assemble(params, n_cut)
    if check:
        w1 = _lowest(h.matrix, 3)[0]
        w2 = spectrum(params, 2 * n_cut, 3)
        scale = np.maximum(np.abs(w2), params.e_c)
        rel = np.max(np.abs(w1 - w2) / scale)
        if rel >= CONVERGENCE_TOL:
            raise ConvergenceError(
                f"n_cut={n_cut} not converged (relative change {rel:.2e})")
    return h


def _real_gauge(v, charges):
    """Phase each column so that psi(-n) = conj(psi(n)), i.e. real in phase space."""
    d = int(round(math.sqrt(v.shape[0])))
    flip = (d * d - 1) - np.arange(d * d)  # index of (-n1, -n2)
    out = v.copy()
    for k in range(v.shape[1]):
        s = np.sum(v[flip, k] * v[:, k])
        out[:, k] = v[:, k] * np.exp(-0.5j * np.angle(s))
    return out


def solve_levels(h, dense=False):
    """Label the three lowest eigenstates g < e < a and tabulate S_p, C_p."""
    w, v = _lowest(h.matrix, 3, dense)
    v = _real_gauge(v, h.charges)
    # the real gauge leaves a sign per state: fix <a|S_p|g> > 0, then <a|S_p|e> > 0
    s = v.conj().T @ (h.sin_p @ v)
    if s[2, 0].real < 0:
        v[:, 2] *= -1
        s = v.conj().T @ (h.sin_p @ v)
    if s[2, 1].real < 0:
        v[:, 1] *= -1
        s = v.conj().T @ (h.sin_p @ v)
    c = v.conj().T @ (h.cos_p @ v)
    s_re, c_re = s.real, c.real
    scale = max(np.abs(s).max(), np.abs(c).max())
    if max(np.abs(s.imag).max(), np.abs(c.imag).max()) > 1e-10 * scale:
        warnings.warn("matrix elements not real in the chosen gauge", RuntimeWarning)
    two_pi = 2 * math.pi
    omega_eg = two_pi * (w[1] - w[0])
    omega_ag = two_pi * (w[2] - w[0])
    near = omega_eg < 1e-3 * omega_ag
    if near:
        warnings.warn("|g> and |e> nearly degenerate; labelling ambiguous", RuntimeWarning)
    return QubitLevels(
        energies=w, omega_eg=omega_eg, omega_ag=omega_ag,
        omega_ae=two_pi * (w[2] - w[1]),
        s_ag=s_re[2, 0], s_ae=s_re[2, 1], s_eg=s_re[1, 0],
        c_ag=c_re[2, 0], c_ae=c_re[2, 1], c_eg=c_re[1, 0],
        s_table=s_re, c_table=c_re, vectors=v, near_degenerate=bool(near))


def coupling_parameters(levels, b_field, length, resonator, params=None,
                        gamma_si=GAMMA_SI):
    """Lamb-Dicke parameters eta_j = B l X0 phibar <a|C_p|j> / <a|S_p|j>.

    The displacement axis is oriented so that eta_g >= 0; flipping it
    (b -> -b) changes the sign of every eta_j and nothing observable.
    """
    params = params or JunctionParams()
    dens = (levels.s_ag, levels.s_ae, levels.s_eg)
    if min(abs(x) for x in dens) < 1e-12:
        raise SingularWorkingPointError("vanishing <i|S_p|j> at this bias")
    x0 = resonator.zero_point(gamma_si)
    scale = b_field * length * x0 * params.phibar
    ratios = np.array([levels.c_ag / levels.s_ag, levels.c_ae / levels.s_ae,
                       levels.c_eg / levels.s_eg])
    ratios *= np.sign(ratios[0]) or 1.0
    eta = scale * ratios
    return CouplingParams(float(eta[0]), float(eta[1]), float(eta[2]),
                          b_field=b_field, length=length, x0=x0)


def eta_ratios(levels):
    """eta_j / (B l X0 phibar) for j = g, e, 3, oriented as in coupling_parameters."""
    r = np.array([levels.c_ag / levels.s_ag, levels.c_ae / levels.s_ae,
                  levels.c_eg / levels.s_eg])
    return r * (np.sign(r[0]) or 1.0)


def rabi_frequencies(levels, a_g, a_e, params, gamma=None):
    """Omega_j = alpha E_J phibar A_j <a|S_p|j> / 2 (hbar = 1), in rad/s or units of gamma.

    ``a_g`` and ``a_e`` are flux amplitudes in Wb.
    """
    if a_g < 0 or a_e < 0:
        raise ValueError("drive amplitudes must be non-negative")
    for amp in (a_g, a_e):
        if abs(params.phibar * amp) >= DRIVE_GATE:
            warnings.warn("drive flux too large for the small-xi expansion",
                          DriveAmplitudeWarning, stacklevel=2)
    pref = params.alpha * 2 * math.pi * params.e_j * params.phibar / 2
    om = (pref * a_g * levels.s_ag, pref * a_e * levels.s_ae)
    if gamma is not None:
        om = (om[0] / gamma, om[1] / gamma)
    return om


def drive_amplitude(levels, omega, params, transition="e"):
    """Flux amplitude (Wb) producing Rabi frequency ``omega`` (rad/s)."""
    s = levels.s_ag if transition == "g" else levels.s_ae
    pref = params.alpha * 2 * math.pi * params.e_j * params.phibar / 2
    return abs(omega / (pref * s))


def flux_sweep(params, f_grid, n_cut=10):
    """QubitLevels at each bias in ``f_grid``."""
    from dataclasses import replace

    out = []
    for f in f_grid:
        h = build_hamiltonian(replace(params, f=float(f)), n_cut, check=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out.append(solve_levels(h))
    return out
