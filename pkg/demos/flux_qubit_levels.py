"""Three-junction flux qubit at its working point.

Diagonalise the charge-basis Hamiltonian slightly off the symmetry point,
read off the Lambda-system frequencies and the couplings of each transition
to the beam displacement.
"""
import math

import numpy as np
from scipy import constants

from eitcool import fluxqubit
from eitcool.params import GAMMA_SI, ResonatorParams

params = fluxqubit.JunctionParams(alpha=0.7, e_j=200e9, ej_over_ec=50.0, f=0.5005)
levels = fluxqubit.solve_levels(fluxqubit.build_hamiltonian(params, n_cut=10))

ghz = 2 * math.pi * 1e9
print(f"omega_eg/2pi = {levels.omega_eg / ghz:.3f} GHz")
print(f"omega_ag/2pi = {levels.omega_ag / ghz:.3f} GHz")
print(f"omega_ae/2pi = {levels.omega_ae / ghz:.3f} GHz")

g, e, three = fluxqubit.eta_ratios(levels)
print(f"eta_j / (B l X0 phibar): g {g:.2f}, e {e:.3f}, 3 {three:.3f}")

# the g-transition dominates, so eta_LD is set almost entirely by eta_g
res = ResonatorParams(nu=0.25, m_eff=2e-15)
for b in (1.0, 3.0, 5.0):
    c = fluxqubit.coupling_parameters(levels, b, 25e-6, res, params)
    print(f"B = {b:.0f} T: X0 = {c.x0:.2e} m, eta_LD = {c.eta_ld:.4f}")

amp = fluxqubit.drive_amplitude(levels, GAMMA_SI, params, transition="e")
print(f"flux amplitude for Omega_e = gamma: {amp:.3e} Wb ({amp / constants.h * 2 * constants.e:.2e} Phi0)")

f_grid = np.linspace(0.5, 0.51, 6)
for f, lv in zip(f_grid, fluxqubit.flux_sweep(params, f_grid)):
    print(f"f = {f:.3f}: omega_eg/2pi = {lv.omega_eg / ghz:6.3f} GHz")
