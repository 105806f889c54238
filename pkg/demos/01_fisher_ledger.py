"""
Where the information goes after postselection
==============================================

A coherent meter with n = 4 photons couples to a qubit through
exp(i g sigma_z n).  Before postselection the meter-plus-qubit state carries
Q_j = 4n^2 sin^2(theta_i) + 4n about g.  After postselection that budget is
split three ways: photons that pass (P_d Q_d), photons that are rejected
(P_r Q_r), and the pass/reject statistics itself (F_p).
"""

import numpy as np

from psmet import MeterSpec, SelectionSpec, fisher_ledger, fp_small_g_limit

meter = MeterSpec.from_photon_number(4)

# %%
# Sweep the postselection angle at a weak coupling.  Near the dark port the
# accept/reject counts alone carry almost all of the 80 units available.

print(f"{'theta_f/pi':>10} {'PdQd':>9} {'PrQr':>9} {'F_p':>9} {'F_tot':>9}")
for theta_f in np.linspace(0, 2 * np.pi, 9):
    led = fisher_ledger(SelectionSpec.with_phi0(np.pi / 2, theta_f, np.pi), meter, 1e-3)
    print(f"{theta_f / np.pi:10.3f} {led.pd_qd:9.3f} {led.pr_qr:9.3f} {led.f_p:9.3f} {led.f_tot:9.3f}")

# %%
# The F_p maximum tends to 4n(n+1) as g -> 0.  At finite g it falls short by
# a relative amount of order g^2.

for g in (1e-2, 1e-3, 1e-4):
    led = fisher_ledger(SelectionSpec.with_phi0(np.pi / 2, np.pi / 2, np.pi), meter, g)
    print(f"g = {g:.0e}: F_p = {led.f_p:.8f}  (limit {fp_small_g_limit(4):g})")
