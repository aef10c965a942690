"""Rate theory of EIT cooling in the Lamb-Dicke limit.

Heating (+) and cooling (-) rates::

    A_pm = 4 eta^2 Og^2 Oe^2 / (O^2 gamma) * gamma^2 nu^2
           / (gamma^2 nu^2 + 4 [O^2 - nu (nu pm Delta)]^2),   O^2 = Og^2 + Oe^2

and the phonon rate equation ``dn/dt = -(W + nu/Q) n + A_+ + nu N/Q + dA_+``
with ``W = A_- - A_+``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import linop
from .lindblad import CoolingTrace, DegenerateSteadyStateError
from .linop import A, E, G
from .params import CouplingParams, DecoherenceParams

WEAK_MIN_R = 4.0
STRONG_R = (0.8, 1.25)
LARGE_DETUNING = 10.0


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RateResult:
    a_plus: float
    a_minus: float
    delta_a_plus: float
    rho_a_ss: float
    rho_e_ss: float
    nu: float
    kappa: float
    n_i: float
    delta: float
    r: float
    eta_ld: float
    gamma: float = 1.0
    two_photon_resonant: bool = True
    n_ss: float | None = None
    n_ss_weak: float | None = None
    n_ss_strong: float | None = None
    weak_valid: bool = False
    strong_valid: bool = False
    model: str = "formula"

    @property
    def w(self):
        return self.a_minus - self.a_plus

    @property
    def cooling(self):
        return self.w + self.kappa > 0

    @property
    def total_rate(self):
        """Relaxation rate of <n>, W + nu/Q."""
        return self.w + self.kappa

    @property
    def within_validity(self):
        if self.model == "lamb_dicke":
            return True
        return (self.two_photon_resonant and abs(self.delta) > self.nu
                and abs(self.delta) < LARGE_DETUNING * self.gamma)


def _bracket(omega2, nu, delta, sign, gamma):
    g2n2 = (gamma * nu) ** 2
    return g2n2 / (g2n2 + 4 * (omega2 - nu * (nu + sign * delta)) ** 2)


def transition_rates(drives, coupling, nu, gamma=1.0):
    """(A_+, A_-) for a mode of frequency ``nu``; Delta is taken as ``delta_e``."""
    omega2 = drives.omega_g ** 2 + drives.omega_e ** 2
    if omega2 == 0:
        raise ValueError("both drives off: rate prefactor undefined")
    if not drives.two_photon_resonant:
        warnings.warn("Delta_g != Delta_e: rates evaluated at Delta = Delta_e, "
                      "outside their stated validity", ValidityWarning, stacklevel=2)
    pref = (4 * coupling.eta_ld ** 2 * drives.omega_g ** 2 * drives.omega_e ** 2
            / (omega2 * gamma))
    delta = drives.delta_e
    return (pref * _bracket(omega2, nu, delta, +1, gamma),
            pref * _bracket(omega2, nu, delta, -1, gamma))


def qubit_liouvillian(drives, decoherence):
    """9x9 generator of the bare three-level system (no resonator)."""
    p = linop.projector
    h = (-drives.delta_g * p(G, G) - drives.delta_e * p(E, E)
         + drives.omega_g * (p(A, G) + p(G, A)) + drives.omega_e * (p(A, E) + p(E, A)))
    dec = decoherence
    lv = (linop.commutator_super(h)
          + linop.lindblad_term(dec.gamma_g, p(G, A))
          + linop.lindblad_term(dec.gamma_e, p(E, A))
          + linop.lindblad_term(dec.big_gamma, p(G, E))
          + linop.lindblad_term(dec.gamma_phi / 2, p(E, E) - p(G, G)))
    return lv.toarray()


def _sup(left, right):
    """Superoperator of rho -> left @ rho @ right (column stacking)."""
    return np.kron(right.T, left)


def lamb_dicke_rates(drives, coupling, nu, decoherence=None):
    """(A_+, A_-, recoil) to second order in eta, for any detunings.

    The mode couples to the qubit through x = b + b^dag in the drive terms and
    in the decay operators. To first order the generator is
    x_L K_L + x_R K_R, with x acting from the left or right and K qubit
    superoperators. Tracing out the qubit in its steady state under the
    rotating-wave approximation gives dn/dt = A_+ - (A_- - A_+) n + recoil.
    The recoil term is the momentum diffusion from the decay channels.
    Equals ``transition_rates`` for two-photon resonant drives without
    decoherence.
    """
    decoherence = decoherence or DecoherenceParams()
    if drives.omega_g == 0 and drives.omega_e == 0:
        raise ValueError("both drives off: rate prefactor undefined")
    p = linop.projector
    one = np.eye(3)
    lv = qubit_liouvillian(drives, decoherence)
    m = lv.copy()
    m[0, :] = linop.trace_row(3)
    rhs = np.zeros(9, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(m, rhs)
    tr = linop.trace_row(3)

    f = (coupling.eta_g * drives.omega_g * (p(A, G) + p(G, A))
         + coupling.eta_e * drives.omega_e * (p(A, E) + p(E, A)))
    k_l, k_r = -1j * _sup(f, one), 1j * _sup(one, f)
    recoil = 0.0
    dec = decoherence
    for rate, eta, c in ((dec.gamma_g, coupling.eta_g, p(G, A)),
                         (dec.gamma_e, coupling.eta_e, p(E, A)),
                         (dec.big_gamma, coupling.eta_3, p(G, E))):
        cc = c.conj().T @ c
        jump = _sup(c, c.conj().T)
        k_l = k_l + rate * eta * (jump - _sup(cc, one))
        k_r = k_r + rate * eta * (jump - _sup(one, cc))
        recoil += rate * eta ** 2 * float((tr @ _sup(cc, one) @ rho).real)

    ks = {"L": k_l, "R": k_r}

    def g(a, b, w):
        src = ks[b] @ rho
        src = src - rho * (tr @ src)
        return tr @ ks[a] @ np.linalg.solve(1j * w * np.eye(9) - lv, src)

    gp = {ab: g(ab[0], ab[1], nu) for ab in ("LL", "LR", "RL", "RR")}
    gm = {ab: g(ab[0], ab[1], -nu) for ab in ("LL", "LR", "RL", "RR")}

    def dn(k):
        # d<n>/dt from the coherent and cross terms for rho_mode = |k><k|
        return float((gp["LL"] * k * (k + 1) + gp["LR"] * k * (k - 1)
                      + gp["RL"] * (k + 1) ** 2 + gp["RR"] * k ** 2
                      + gm["LL"] * k ** 2 + gm["LR"] * (k + 1) ** 2
                      + gm["RL"] * k * (k - 1) + gm["RR"] * k * (k + 1)).real)

    a_plus = dn(0)
    a_minus = a_plus + dn(0) - dn(1)
    return a_plus, a_minus, recoil


def qubit_steady_state(drives, decoherence, coupling=None):
    """(rho_a, rho_e, delta_A_plus) of the driven three-level system alone."""
    if drives.omega_g == 0 and drives.omega_e == 0:
        raise ValueError("at least one drive must be on")
    coupling = coupling or CouplingParams.from_eta_ld()
    lv = qubit_liouvillian(drives, decoherence)
    if np.linalg.matrix_rank(lv, tol=1e-12) < 8:
        raise DegenerateSteadyStateError("bare qubit has no unique steady state")
    m = lv.copy()
    m[0, :] = linop.trace_row(3)
    rhs = np.zeros(9, dtype=complex)
    rhs[0] = 1.0
    rho = linop.unvec(np.linalg.solve(m, rhs), 3)
    rho_a, rho_e = float(rho[A, A].real), float(rho[E, E].real)
    dec = decoherence
    d_a = ((coupling.eta_g ** 2 * dec.gamma_g + coupling.eta_e ** 2 * dec.gamma_e)
           * rho_a / 2 + coupling.eta_3 ** 2 * dec.big_gamma * rho_e / 2)
    return rho_a, rho_e, d_a


def rate_result(drives, coupling, resonator, decoherence=None, include_delta=True,
                model="formula"):
    """Full analytic record for one mode, steady occupation included.

    ``model="formula"`` uses the closed-form rates and the bare-qubit
    ``delta_A_plus``. ``"lamb_dicke"`` uses ``lamb_dicke_rates``, which stay
    valid for detuned drives and decoherence, with their recoil term.
    """
    decoherence = decoherence or DecoherenceParams()
    gamma = decoherence.gamma
    recoil = None
    if model == "lamb_dicke":
        a_p, a_m, recoil = lamb_dicke_rates(drives, coupling, resonator.nu, decoherence)
    elif model == "formula":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            a_p, a_m = transition_rates(drives, coupling, resonator.nu, gamma)
    else:
        raise ValueError(f"unknown rate model {model!r}")
    try:
        rho_a, rho_e, d_a = qubit_steady_state(drives, decoherence, coupling)
    except DegenerateSteadyStateError:
        rho_a = rho_e = d_a = float("nan")
    if recoil is not None:
        d_a = recoil
    res = RateResult(a_plus=a_p, a_minus=a_m,
                     delta_a_plus=d_a if include_delta and math.isfinite(d_a) else 0.0,
                     rho_a_ss=rho_a, rho_e_ss=rho_e, nu=resonator.nu,
                     kappa=resonator.kappa, n_i=resonator.n_i, delta=drives.delta_e,
                     r=drives.r, eta_ld=coupling.eta_ld, gamma=gamma,
                     two_photon_resonant=drives.two_photon_resonant, model=model)
    return steady_phonon(res, resonator)


def steady_phonon(rates, resonator):
    """Attach the rate-equation fixed point and the two asymptotic forms.

    In the heating regime ``n_ss`` is left as ``None``.
    """
    q = resonator.q_factor
    n_i = resonator.n_i
    kappa = resonator.kappa
    total = rates.w + kappa
    n_ss = None
    if total > 0:
        n_ss = (rates.a_plus + kappa * n_i + rates.delta_a_plus) / total
    d = abs(rates.delta)
    g = rates.gamma
    eta2 = rates.eta_ld ** 2
    n_weak = n_strong = None
    if d > 0 and eta2 > 0:
        floor = g ** 2 / (4 * rates.delta) ** 2
        n_weak = g * rates.r ** 2 * n_i / (4 * eta2 * q * d) + floor
        n_strong = g * n_i / (eta2 * q * d) + floor
    above = d > resonator.nu
    return replace(rates, n_ss=n_ss, n_ss_weak=n_weak, n_ss_strong=n_strong,
                   kappa=kappa, n_i=n_i, nu=resonator.nu,
                   weak_valid=bool(above and rates.r >= WEAK_MIN_R),
                   strong_valid=bool(above and STRONG_R[0] <= rates.r <= STRONG_R[1]))


@dataclass(frozen=True)
class OptimalDrive:
    omega: float
    omega_g: float
    omega_e: float
    w_max: float | None = None


def optimal_drive(nu, delta, r=1.0, eta_ld=None, gamma=1.0):
    """Omega = sqrt(nu (nu - Delta)) split as Omega_e / Omega_g = r."""
    if delta > nu:
        raise ValueError("no real optimum for Delta > nu")
    if delta >= 0:
        warnings.warn("optimal cooling requires Delta < 0", ValidityWarning, stacklevel=2)
    omega = math.sqrt(nu * (nu - delta))
    omega_g = omega / math.sqrt(1 + r * r)
    omega_e = r * omega_g
    w_max = None
    if eta_ld is not None:
        w_max = 4 * eta_ld ** 2 * omega_g ** 2 * omega_e ** 2 / (omega ** 2 * gamma)
    return OptimalDrive(omega, omega_g, omega_e, w_max)


@dataclass
class AbsorptionSpectrum:
    delta_g: np.ndarray
    absorption: np.ndarray
    carrier: float
    red_sideband: float
    blue_sideband: float

    def at(self, x):
        return float(np.interp(x, self.delta_g, self.absorption))


def absorption_spectrum(omega_e, delta_e, delta_g_grid, decoherence=None,
                        omega_g_probe=0.05, nu=0.25):
    """Cooling-field absorption gamma * rho_aa versus Delta_g.

    Markers: carrier at Delta_g = Delta_e, red/blue sidebands at Delta_e -/+ nu.
    """
    from .params import DriveParams

    decoherence = decoherence or DecoherenceParams()
    grid = np.asarray(delta_g_grid, dtype=float)
    # L is affine in Delta_g: L(dg) = L(0) + dg * dL
    base = qubit_liouvillian(DriveParams(omega_g_probe, omega_e, 0.0, delta_e), decoherence)
    slope = qubit_liouvillian(DriveParams(omega_g_probe, omega_e, 1.0, delta_e),
                              decoherence) - base
    m = base[None] + grid[:, None, None] * slope[None]
    m[:, 0, :] = linop.trace_row(3)
    rhs = np.zeros((grid.size, 9, 1), dtype=complex)
    rhs[:, 0] = 1.0
    rho = np.linalg.solve(m, rhs)[:, :, 0]
    absorb = decoherence.gamma * np.maximum(rho[:, A * 4].real, 0.0)
    return AbsorptionSpectrum(grid, absorb, delta_e, delta_e - nu, delta_e + nu)


def two_level_excitation(omega, delta, gamma=1.0):
    """Steady excited population of a two-level system, H = -Delta|g><g| + Omega(|a><g| + h.c.)."""
    return omega ** 2 / (delta ** 2 + gamma ** 2 / 4 + 2 * omega ** 2)


def rate_evolve(n0, rates, resonator, t_grid):
    """Closed-form <n>(t) relaxing from ``n0`` towards ``rates.n_ss``."""
    t = np.asarray(t_grid, dtype=float)
    if rates.n_ss is None:
        res = steady_phonon(rates, resonator)
    else:
        res = rates
    total = res.w + resonator.kappa
    source = res.a_plus + resonator.kappa * resonator.n_i + res.delta_a_plus
    if total != 0:
        n_inf = source / total
        n = n_inf + (n0 - n_inf) * np.exp(-total * t)
    else:
        n = n0 + source * t
    rho_a = res.rho_a_ss if math.isfinite(res.rho_a_ss) else 0.0
    rho_e = res.rho_e_ss if math.isfinite(res.rho_e_ss) else 0.0
    ones = np.ones_like(t)
    return CoolingTrace(t, n[:, None], (1 - rho_a - rho_e) * ones, rho_e * ones,
                        rho_a * ones, np.zeros_like(t))


def two_mode_rates(drives, couplings, resonators, decoherence=None, include_delta=True,
                   model="formula"):
    """Independent rate results for each mode under the shared drive."""
    return [rate_result(drives, c, res, decoherence, include_delta, model)
            for c, res in zip(couplings, resonators)]
