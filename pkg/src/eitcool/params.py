"""Parameter records shared by the analytic and numerical layers.

Frequencies and rates are dimensionless, in units of the linewidth
``gamma = gamma_g + gamma_e`` of the auxiliary level ``|a>``; times are in
units of ``1/gamma``. ``GAMMA_SI`` converts to rad/s when SI output is wanted.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from scipy import constants

# gamma = 50 * Gamma with Gamma = 2 pi x 2 MHz
GAMMA_SI = 2 * math.pi * 100e6

# eta_j / (B l X0 phibar) for j = g, e, 3 at f = 0.5005 as quoted for the device
DEVICE_ETA_RATIOS = (28.19, -0.10, 0.02)
DEVICE_ETA_LD = 0.0566

LD_WARNING = 0.3


class LambDickeWarning(UserWarning):
    pass


def bose_einstein(omega, temperature):
    """Mean thermal occupation of a mode at angular frequency ``omega`` (rad/s)."""
    if temperature <= 0:
        return 0.0
    x = constants.hbar * omega / (constants.k * temperature)
    return 1.0 / math.expm1(x)


def default_n_max(n_i):
    return int(math.ceil(5 * n_i + 15))


@dataclass(frozen=True)
class DriveParams:
    """Rabi frequencies and detunings of the cooling (g) and control (e) fields."""

    omega_g: float
    omega_e: float
    delta_g: float
    delta_e: float

    @classmethod
    def resonant(cls, omega_g, omega_e, delta):
        """Two-photon resonant drive, ``delta_g == delta_e`` bitwise."""
        return cls(float(omega_g), float(omega_e), float(delta), float(delta))

    @classmethod
    def from_ratio(cls, omega_e, r, delta_g, delta_e=None):
        delta_e = delta_g if delta_e is None else delta_e
        return cls(omega_e / r, omega_e, delta_g, delta_e)

    @property
    def r(self):
        return self.omega_e / self.omega_g if self.omega_g else math.inf

    @property
    def omega(self):
        return math.hypot(self.omega_g, self.omega_e)

    @property
    def two_photon_resonant(self):
        return self.delta_g == self.delta_e


@dataclass(frozen=True)
class DecoherenceParams:
    gamma_g: float = 0.5
    gamma_e: float = 0.5
    big_gamma: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        for name in ("gamma_g", "gamma_e", "big_gamma", "gamma_phi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def gamma(self):
        return self.gamma_g + self.gamma_e

    @classmethod
    def measured(cls):
        """Measured qubit decay and dephasing, Gamma = 0.02, Gamma_phi = 0.04."""
        return cls(0.5, 0.5, 0.02, 0.04)


@dataclass(frozen=True)
class ResonatorParams:
    """A mechanical mode. ``m_eff`` in kg, ``length`` in m, ``temperature`` in K."""

    nu: float = 0.25
    q_factor: float = 5e4
    n_i: float = 0.0
    m_eff: float = 2e-15
    length: float = 25e-6
    temperature: float | None = None

    def __post_init__(self):
        if self.nu <= 0 or self.q_factor <= 0:
            raise ValueError("nu and q_factor must be positive")
        if self.n_i < 0:
            raise ValueError("n_i must be non-negative")

    @classmethod
    def from_temperature(cls, temperature, nu=0.25, gamma_si=GAMMA_SI, **kw):
        n_i = bose_einstein(nu * gamma_si, temperature)
        return cls(nu=nu, n_i=n_i, temperature=temperature, **kw)

    @property
    def kappa(self):
        """Mechanical damping rate nu/Q."""
        return self.nu / self.q_factor

    def zero_point(self, gamma_si=GAMMA_SI):
        """X0 = sqrt(hbar / 2 M nu) in metres."""
        return math.sqrt(constants.hbar / (2 * self.m_eff * self.nu * gamma_si))


@dataclass(frozen=True)
class CouplingParams:
    """Lamb-Dicke parameters of the three qubit transitions to one mode."""

    eta_g: float
    eta_e: float
    eta_3: float = 0.0
    b_field: float | None = None
    length: float | None = None
    x0: float | None = None

    def __post_init__(self):
        if self.eta_ld > LD_WARNING:
            warnings.warn(f"eta_LD = {self.eta_ld:.3g} outside the Lamb-Dicke regime",
                          LambDickeWarning, stacklevel=3)

    @property
    def eta_ld(self):
        return abs(self.eta_g - self.eta_e)

    @classmethod
    def from_eta_ld(cls, eta_ld=DEVICE_ETA_LD, ratios=DEVICE_ETA_RATIOS):
        """Split ``eta_ld`` over the transitions in the given ratios."""
        rg, re_, r3 = ratios
        scale = eta_ld / abs(rg - re_)
        return cls(rg * scale, re_ * scale, r3 * scale)

    @classmethod
    def zero(cls):
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to build the qubit (x) resonator(s) Liouvillian."""

    drives: DriveParams
    decoherence: DecoherenceParams = field(default_factory=DecoherenceParams)
    resonators: tuple = (ResonatorParams(),)
    couplings: tuple = (CouplingParams.from_eta_ld(),)
    n_max: tuple | None = None
    locked: bool = False

    def __post_init__(self):
        if self.locked and self.drives.delta_g != self.drives.delta_e:
            raise ValueError("locked spec requires delta_g == delta_e")
        res = tuple(self.resonators)
        cps = tuple(self.couplings)
        if not 1 <= len(res) <= 2:
            raise ValueError("one or two resonator modes supported")
        if len(cps) != len(res):
            raise ValueError("need one CouplingParams per resonator")
        n_max = self.n_max
        if n_max is None:
            n_max = tuple(default_n_max(m.n_i) for m in res)
        elif isinstance(n_max, int):
            n_max = (n_max,) * len(res)
        n_max = tuple(int(n) for n in n_max)
        if len(n_max) != len(res) or min(n_max) < 1:
            raise ValueError("n_max must be >= 1 for every mode")
        for v in (self.drives.delta_g, self.drives.delta_e):
            if not math.isfinite(v):
                raise ValueError("detunings must be finite")
        object.__setattr__(self, "resonators", res)
        object.__setattr__(self, "couplings", cps)
        object.__setattr__(self, "n_max", n_max)

    @property
    def dims(self):
        return (3,) + tuple(n + 1 for n in self.n_max)

    @property
    def hilbert_dim(self):
        return math.prod(self.dims)

    def with_(self, **changes):
        """``replace`` that re-derives the default cutoff when modes change."""
        if "resonators" in changes and "n_max" not in changes:
            changes["n_max"] = None
        if self.locked and "drives" in changes:
            d = changes["drives"]
            changes["drives"] = replace(d, delta_g=d.delta_e)
        return replace(self, **changes)
