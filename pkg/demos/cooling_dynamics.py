"""Cooling dynamics: master equation against the rate equation.

Starting from a thermal state with two phonons, <n>(t) relaxes at
W + nu/Q towards the steady state. The qubit settles within a few 1/gamma,
after which the phonon number follows the single-exponential law.
"""
import numpy as np

from eitcool import experiments as ex
from eitcool import lindblad, rates

spec = ex.single_mode_spec(ex.weak_drive(), 2.0, n_max=20)
rr = rates.rate_result(spec.drives, spec.couplings[0], spec.resonators[0])
t = np.linspace(0.0, 1.0 / rr.total_rate, 6)

me = lindblad.evolve(lindblad.build_liouvillian(spec), lindblad.thermal_state(2.0, 20), t)
re = rates.rate_evolve(me.mean_n[0, 0], rr, spec.resonators[0], t)

print(f"W + nu/Q = {rr.total_rate:.3e} gamma, 1/e time {1 / rr.total_rate:.0f}/gamma")
print("   t      <n> master eq.   <n> rate eq.")
for row in zip(t, me.mean_n[:, 0], re.mean_n[:, 0]):
    print("{:7.0f}   {:.4f}           {:.4f}".format(*row))
print(f"largest trace error: {me.trace_error.max():.1e}")
