"""EIT absorption of the cooling field.

A strong control field on the a-e transition opens a transparency window
for the probe on a-g. At two-photon resonance the dressed qubit is dark,
and the red sideband sits on the bright flank of the window while the blue
sideband does not. That asymmetry is the cooling mechanism.
"""
import numpy as np

from eitcool import rates
from eitcool.params import DecoherenceParams

DELTA_E = -3.0
OMEGA_E = 0.9
NU = 0.25

grid = DELTA_E + np.arange(-300, 301) * 0.01
clean = rates.absorption_spectrum(OMEGA_E, DELTA_E, grid, DecoherenceParams(), nu=NU)
noisy = rates.absorption_spectrum(OMEGA_E, DELTA_E, grid, DecoherenceParams.measured(), nu=NU)

print("Delta_g    absorption (Gamma = 0)   absorption (Gamma, Gamma_phi > 0)")
for x in (-4.0, -3.5, clean.red_sideband, -3.1, clean.carrier, -2.9, clean.blue_sideband, -2.5):
    print(f"{x:7.3f}    {clean.at(x):.4e}               {noisy.at(x):.4e}")

print()
print(f"carrier null, decoherence free: {clean.at(DELTA_E):.2e}")
print(f"carrier with qubit dephasing:   {noisy.at(DELTA_E):.2e}")
print(f"red/blue sideband ratio:        {clean.at(clean.red_sideband) / clean.at(clean.blue_sideband):.1f}")
