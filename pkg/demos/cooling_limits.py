"""Steady-state phonon number against initial occupation.

Compares the rate-equation asymptotics with the full master equation for a
weak (Omega_g << Omega_e) and a strong (Omega_g = Omega_e) cooling field,
then switches on the measured qubit decoherence.
"""
from eitcool import experiments as ex
from eitcool import lindblad
from eitcool.params import DecoherenceParams

grid = (0.1, 1.0, 4.0, 16.0)

for weak in (True, False):
    label = f"weak, r = {ex.WEAK_R:g}" if weak else "strong, r = 1"
    report = ex.occupation_curve(grid, weak=weak)
    print(label)
    print("  N_i    asymptotic   master eq.   deviation")
    for rec in report.records:
        if rec["engine"] == "master_equation":
            print(f"  {rec['value']:5.1f}  {rec['reference']:.4e}   {rec['n_ss']:.4e}   "
                  f"{rec['rel_dev']:+.1%}")

dec = DecoherenceParams.measured()
print("\nN_i = 16 with Gamma = 0.02, Gamma_phi = 0.04")
for name, drives in (("weak", ex.weak_drive()),
                     ("strong, detuned", ex.strong_optimized_drive())):
    cs = lindblad.converged_steady_state(ex.single_mode_spec(drives, 16.0, dec))
    print(f"  {name:16s} n_ss = {cs.mean_n[0]:.3f}  (n_max = {cs.n_max[0]})")
