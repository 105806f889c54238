"""
Recycling the rejected light
============================

A mirror of reflectivity r in front of the postselector sends rejected
light back for another try.  The postselector acts as a mirror with
amplitude reflectivity sqrt(P_r), and the two mirrors form a lossless cavity.
The scalar-mirror model is only sensible while g sqrt(n) << 1.
"""

import numpy as np

from psmet import MeterSpec, MirrorSpec, SelectionSpec, f_pow_approx, f_pow_exact, fisher_ledger

sel = SelectionSpec.with_phi0(np.pi / 2, np.pi / 2, np.pi)
g = 0.01 * np.pi

for n in (2, 4):
    meter = MeterSpec.from_photon_number(n)
    f_p = fisher_ledger(sel, meter, g).f_p
    print(f"\nn = {n}: bare F_p = {f_p:.3f}")
    print(f"{'r':>5} {'P_c':>8} {'P_b':>8} {'F_c':>9} {'F_b':>9} {'F_pow':>9} {'approx':>9}")
    for r in (0.0, 0.3, 0.6, 0.8, 0.9, 0.95):
        led = f_pow_exact(sel, meter, g, MirrorSpec(r))
        approx = f_pow_approx(n, g, r)
        print(f"{r:5.2f} {led.p_c:8.4f} {led.p_b:8.4f} {led.f_c:9.2f} {led.f_b:9.2f} {led.f_pow:9.2f} {approx:9.2f}")

# %%
# The small-coupling closed form overshoots the exact value.  As g -> 0 at
# r = 0 it tends to 4(n+1)^2 rather than 4n(n+1), a relative excess of 1/n.
# Both the excess and the growth of F_b with r are visible in the table.
