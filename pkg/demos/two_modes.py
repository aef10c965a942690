"""One qubit, two mechanical modes.

With shared drives the same dressed-state resonance serves both modes. The
closed-form rates assume Delta_g == Delta_e; for the detuned two-mode drive
the second-order Lamb-Dicke rates are the reliable rate model. A quantum
trajectory run at reduced occupation checks them with the full coupling.
"""
import numpy as np

from eitcool import experiments as ex
from eitcool import rates
from eitcool.trajectories import trajectory_evolve

full = ex.two_mode_spec(16.0)
for model in ("formula", "lamb_dicke"):
    out = rates.two_mode_rates(full.drives, full.couplings, full.resonators,
                               full.decoherence, model=model)
    for rr in out:
        print(f"{model:10s} nu = {rr.nu:.2f}: W + nu/Q = {rr.total_rate:.2e}, "
              f"n_ss = {rr.n_ss:.3f}")

# a lighter version of the acceptance run: fewer trajectories, shorter time
small = ex.two_mode_spec(3.0, n_max=8)
t = np.linspace(0.0, 800.0, 5)
tr = trajectory_evolve(small, 100, t, seed=11)
pred = [rates.rate_evolve(tr.mean_n[0, k],
                          rates.rate_result(small.drives, small.couplings[k], res,
                                            small.decoherence, model="lamb_dicke"),
                          res, t).mean_n[:, 0]
        for k, res in enumerate(small.resonators)]
print("\n   t     <n1>           rate   <n2>           rate")
for i, ti in enumerate(t):
    print(f"{ti:5.0f}   {tr.mean_n[i, 0]:.2f} +- {tr.stderr_n[i, 0]:.2f}   {pred[0][i]:.2f}   "
          f"{tr.mean_n[i, 1]:.2f} +- {tr.stderr_n[i, 1]:.2f}   {pred[1][i]:.2f}")
